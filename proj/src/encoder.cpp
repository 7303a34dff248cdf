#include "graphda/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "graphda/eval.hpp"
#include "graphda/textio.hpp"

namespace graphda {

EmbeddingTable init_embeddings(int n_rows, int dim, std::uint64_t seed,
                               double init_std) {
  if (n_rows < 1 || dim < 1) {
    throw std::invalid_argument("embedding table needs n_rows, dim >= 1");
  }
  if (!(init_std > 0.0)) {
    throw std::invalid_argument("init_std must be positive");
  }
  EmbeddingTable e(n_rows, dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, init_std);
  for (double& v : e.data) v = gauss(rng);
  return e;
}

EmbeddingTable propagate(const SparseMatrix& l, const EmbeddingTable& e0,
                         int n_layers, bool average_layers) {
  if (n_layers < 1) throw std::invalid_argument("n_layers must be >= 1");
  if (l.n_rows != l.n_cols || l.n_cols != e0.n_rows) {
    throw std::invalid_argument("propagate dimension mismatch");
  }
  if (n_layers == 1) return e0;

  EmbeddingTable cur = e0;
  EmbeddingTable acc = e0;
  for (int layer = 1; layer < n_layers; ++layer) {
    cur = spmm(l, cur);
    if (average_layers) {
      for (std::size_t k = 0; k < acc.data.size(); ++k) {
        acc.data[k] += cur.data[k];
      }
    }
  }
  if (!average_layers) return cur;
  const double scale = 1.0 / n_layers;
  for (double& v : acc.data) v *= scale;
  return acc;
}

namespace {

inline double dot(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) s += a[d] * b[d];
  return s;
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

double bpr_batch_loss(const SparseMatrix& l, const EmbeddingTable& e0,
                      int n_layers, bool average_layers,
                      std::span<const Triple> batch, double l2,
                      EmbeddingTable* grad_out) {
  if (batch.empty()) {
    if (grad_out) *grad_out = EmbeddingTable(e0.n_rows, e0.dim);
    return 0.0;
  }
  const int dim = e0.dim;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  EmbeddingTable out = propagate(l, e0, n_layers, average_layers);

  double loss = 0.0;
  EmbeddingTable grad_output;  // d(loss)/d(E_out), touched rows only
  if (grad_out) grad_output = EmbeddingTable(e0.n_rows, dim);

  for (const Triple& t : batch) {
    if (t.pos == t.neg) {
      throw std::invalid_argument("positive and negative item coincide");
    }
    if (t.user < 0 || t.pos < 0 || t.neg < 0 || t.user >= e0.n_rows ||
        t.pos >= e0.n_rows || t.neg >= e0.n_rows) {
      throw std::invalid_argument("triple index out of range");
    }
    const double* eu = out.row(t.user);
    const double* ep = out.row(t.pos);
    const double* en = out.row(t.neg);
    const double margin = dot(eu, ep, dim) - dot(eu, en, dim);
    loss += softplus(-margin) * inv_b;
    if (l2 > 0.0) {
      double sq = 0.0;
      for (int row : {t.user, t.pos, t.neg}) {
        const double* e = e0.row(row);
        sq += dot(e, e, dim);
      }
      loss += 0.5 * l2 * sq * inv_b;
    }
    if (grad_out) {
      // d/d(margin) of softplus(-margin) = sigmoid(margin) - 1
      const double c = (sigmoid(margin) - 1.0) * inv_b;
      double* gu = grad_output.row(t.user);
      double* gp = grad_output.row(t.pos);
      double* gn = grad_output.row(t.neg);
      for (int d = 0; d < dim; ++d) {
        gu[d] += c * (ep[d] - en[d]);
        gp[d] += c * eu[d];
        gn[d] -= c * eu[d];
      }
    }
  }
  if (!std::isfinite(loss)) {
    throw std::runtime_error("BPR loss is not finite; training diverged");
  }
  if (!grad_out) return loss;

  // E_out is linear in E0, so the adjoint is the same layer recursion with
  // L^T: d/dE0 = mean_k (L^T)^k g (or the last power alone).
  EmbeddingTable grad;
  if (n_layers == 1) {
    grad = std::move(grad_output);
  } else if (!average_layers) {
    grad = std::move(grad_output);
    for (int layer = 1; layer < n_layers; ++layer) {
      grad = spmm_transposed(l, grad);
    }
  } else {
    EmbeddingTable cur = grad_output;
    grad = std::move(grad_output);
    for (int layer = 1; layer < n_layers; ++layer) {
      cur = spmm_transposed(l, cur);
      for (std::size_t k = 0; k < grad.data.size(); ++k) {
        grad.data[k] += cur.data[k];
      }
    }
    const double scale = 1.0 / n_layers;
    for (double& v : grad.data) v *= scale;
  }
  if (l2 > 0.0) {
    for (const Triple& t : batch) {
      for (int row : {t.user, t.pos, t.neg}) {
        const double* e = e0.row(row);
        double* g = grad.row(row);
        for (int d = 0; d < dim; ++d) g[d] += l2 * inv_b * e[d];
      }
    }
  }
  *grad_out = std::move(grad);
  return loss;
}

NegativeSampler::NegativeSampler(const InteractionLog& train)
    : n_items_(train.n_items), items_per_user_(train.n_users) {
  for (const auto& rec : train.interactions) {
    items_per_user_[rec.user].push_back(rec.item);
  }
  for (auto& items : items_per_user_) {
    std::sort(items.begin(), items.end());
  }
}

int NegativeSampler::sample(int user, std::mt19937_64& rng) const {
  if (user < 0 || user >= static_cast<int>(items_per_user_.size())) {
    throw std::invalid_argument("user id out of range");
  }
  const auto& owned = items_per_user_[user];
  if (static_cast<int>(owned.size()) >= n_items_) {
    throw std::runtime_error("user " + std::to_string(user) +
                             " interacts with every item; no negative exists");
  }
  std::uniform_int_distribution<int> pick(0, n_items_ - 1);
  while (true) {
    int item = pick(rng);
    if (!std::binary_search(owned.begin(), owned.end(), item)) return item;
  }
}

namespace {

void check_config(const TrainConfig& cfg) {
  if (cfg.dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (!(cfg.learning_rate > 0.0)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
  if (cfg.l2_weight < 0.0) {
    throw std::invalid_argument("l2_weight must be nonnegative");
  }
  if (cfg.n_layers < 1) throw std::invalid_argument("n_layers must be >= 1");
  if (cfg.max_epochs < 1) {
    throw std::invalid_argument("max_epochs must be >= 1");
  }
  if (cfg.patience < 0) throw std::invalid_argument("patience must be >= 0");
  if (cfg.batch_size < 1) {
    throw std::invalid_argument("batch_size must be >= 1");
  }
  if (!(cfg.init_std > 0.0)) {
    throw std::invalid_argument("init_std must be positive");
  }
}

struct AdamState {
  std::vector<double> m, v;
  long t = 0;
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double eps = 1e-8;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void update(std::vector<double>& params, const std::vector<double>& grad,
              double lr) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    const std::int64_t n = static_cast<std::int64_t>(params.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < n; ++k) {
      const double g = grad[k];
      m[k] = beta1 * m[k] + (1.0 - beta1) * g;
      v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      params[k] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
};

}  // namespace

TrainResult train(const SplitDataset& split, const SparseMatrix& l,
                  const TrainConfig& cfg) {
  check_config(cfg);
  const int n_users = split.train.n_users;
  const int n_items = split.train.n_items;
  const int n_rows = n_users + n_items;
  if (l.n_rows != n_rows || l.n_cols != n_rows) {
    throw std::invalid_argument(
        "propagation matrix does not cover users+items");
  }

  EmbeddingTable e0 = init_embeddings(n_rows, cfg.dim, cfg.seed, cfg.init_std);
  AdamState adam(e0.data.size());
  NegativeSampler sampler(split.train);
  // Separate stream from embedding init so the two draws never interleave.
  std::mt19937_64 rng(cfg.seed + 0x9E3779B97F4A7C15ULL);

  const auto& positives = split.train.interactions;
  const std::size_t n_pos = positives.size();
  std::vector<Triple> triples(n_pos);
  std::vector<std::size_t> order(n_pos);

  TrainResult result;
  result.best_val_ndcg = -std::numeric_limits<double>::infinity();
  EmbeddingTable best_e0;
  int since_improve = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t k = 0; k < n_pos; ++k) {
      triples[k] = {positives[k].user, n_users + positives[k].item,
                    n_users + sampler.sample(positives[k].user, rng)};
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::vector<Triple> batch;
    EmbeddingTable grad;
    for (std::size_t start = 0; start < n_pos;
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(n_pos, start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) {
        batch.push_back(triples[order[k]]);
      }
      double batch_loss =
          bpr_batch_loss(l, e0, cfg.n_layers, cfg.average_layers, batch,
                         cfg.l2_weight, &grad);
      loss_sum += batch_loss * static_cast<double>(batch.size());
      adam.update(e0.data, grad.data, cfg.learning_rate);
    }

    EmbeddingTable out = propagate(l, e0, cfg.n_layers, cfg.average_layers);
    MetricsReport val = evaluate(out, split, Phase::validation, {20});
    const double val_ndcg = val.ndcg.at(20);
    result.trace.push_back(
        {epoch, loss_sum / static_cast<double>(n_pos), val_ndcg});

    if (val_ndcg > result.best_val_ndcg) {
      result.best_val_ndcg = val_ndcg;
      result.best_epoch = epoch;
      best_e0 = e0;
      since_improve = 0;
    } else {
      ++since_improve;
    }
    if (since_improve >= cfg.patience) break;
  }

  result.e0 = std::move(best_e0);
  result.output = propagate(l, result.e0, cfg.n_layers, cfg.average_layers);
  return result;
}

std::vector<double> score_all(const EmbeddingTable& e, int n_users,
                              int n_items, int user,
                              const std::vector<int>& exclude_sorted) {
  if (user < 0 || user >= n_users) {
    throw std::invalid_argument("user id out of range");
  }
  std::vector<double> scores(n_items);
  const double* eu = e.row(user);
  for (int i = 0; i < n_items; ++i) {
    scores[i] = dot(eu, e.row(n_users + i), e.dim);
  }
  for (int i : exclude_sorted) {
    scores[i] = -std::numeric_limits<double>::infinity();
  }
  return scores;
}

void write_checkpoint(const EmbeddingTable& e, std::uint64_t seed,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "rows=" << e.n_rows << " dim=" << e.dim << " seed=" << seed << "\n";
  for (int r = 0; r < e.n_rows; ++r) {
    const double* row = e.row(r);
    for (int d = 0; d < e.dim; ++d) {
      if (d) out << ' ';
      out << format_f64(row[d]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  auto fail = [&](const std::string& what) {
    return std::runtime_error(path + ": " + what);
  };

  std::string line;
  if (!std::getline(in, line)) throw fail("missing header");
  strip_cr(line);
  int rows = -1, dim = -1;
  std::uint64_t seed = 0;
  bool have_seed = false;
  for (auto part : split_fields(line, ' ')) {
    if (part.starts_with("rows=")) {
      if (auto v = parse_i64(part.substr(5))) rows = static_cast<int>(*v);
    } else if (part.starts_with("dim=")) {
      if (auto v = parse_i64(part.substr(4))) dim = static_cast<int>(*v);
    } else if (part.starts_with("seed=")) {
      if (auto v = parse_i64(part.substr(5))) {
        seed = static_cast<std::uint64_t>(*v);
        have_seed = true;
      }
    }
  }
  if (rows < 1 || dim < 1 || !have_seed) {
    throw fail("malformed header: " + line);
  }

  Checkpoint ckpt;
  ckpt.seed = seed;
  ckpt.table = EmbeddingTable(rows, dim);
  for (int r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) {
      throw fail("truncated at row " + std::to_string(r));
    }
    strip_cr(line);
    auto fields = split_fields(line, ' ');
    if (static_cast<int>(fields.size()) != dim) {
      throw fail("row " + std::to_string(r) + ": expected " +
                 std::to_string(dim) + " values, got " +
                 std::to_string(fields.size()));
    }
    double* row = ckpt.table.row(r);
    for (int d = 0; d < dim; ++d) {
      auto v = parse_f64(fields[d]);
      if (!v || !std::isfinite(*v)) {
        throw fail("row " + std::to_string(r) + ": bad value");
      }
      row[d] = *v;
    }
  }
  return ckpt;
}

void write_trace_csv(const std::vector<EpochStats>& trace,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,loss,val_ndcg20\n";
  for (const auto& s : trace) {
    out << s.epoch << ',' << format_f64(s.loss) << ','
        << format_f64(s.val_ndcg) << '\n';
  }
}

}  // namespace graphda
