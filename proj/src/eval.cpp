#include "graphda/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "graphda/textio.hpp"

namespace graphda {

namespace {

inline double dot(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) s += a[d] * b[d];
  return s;
}

int rank_against_scores(const EmbeddingTable& e, int n_users, int n_items,
                        int user, int target,
                        const std::vector<char>& excluded) {
  const double* eu = e.row(user);
  const double target_score = dot(eu, e.row(n_users + target), e.dim);
  int rank = 1;
  for (int i = 0; i < n_items; ++i) {
    if (excluded[i] || i == target) continue;
    const double s = dot(eu, e.row(n_users + i), e.dim);
    if (s > target_score || (s == target_score && i < target)) ++rank;
  }
  return rank;
}

}  // namespace

int rank_of_target(const EmbeddingTable& e, int n_users, int n_items, int user,
                   int target, const std::vector<int>& exclude_sorted) {
  if (user < 0 || user >= n_users) {
    throw std::invalid_argument("user id out of range");
  }
  if (target < 0 || target >= n_items) {
    throw std::invalid_argument("target item out of range");
  }
  if (std::binary_search(exclude_sorted.begin(), exclude_sorted.end(),
                         target)) {
    throw std::invalid_argument("target item is excluded from the pool");
  }
  std::vector<char> excluded(n_items, 0);
  for (int i : exclude_sorted) excluded[i] = 1;
  return rank_against_scores(e, n_users, n_items, user, target, excluded);
}

RankOutcome rank_phase(const EmbeddingTable& e, const SplitDataset& split,
                       Phase phase) {
  const int n_users = split.train.n_users;
  const int n_items = split.train.n_items;
  if (e.n_rows != n_users + n_items) {
    throw std::invalid_argument("embedding table does not cover users+items");
  }
  std::vector<std::vector<int>> train_items(n_users);
  for (const auto& rec : split.train.interactions) {
    train_items[rec.user].push_back(rec.item);
  }

  RankOutcome outcome;
  outcome.users.resize(n_users);
  outcome.ranks.resize(n_users);
#pragma omp parallel
  {
    std::vector<char> excluded(n_items, 0);
#pragma omp for schedule(static)
    for (int u = 0; u < n_users; ++u) {
      std::fill(excluded.begin(), excluded.end(), 0);
      for (int i : train_items[u]) excluded[i] = 1;
      int target;
      if (phase == Phase::validation) {
        target = split.validation[u];
      } else {
        target = split.test[u];
        excluded[split.validation[u]] = 1;  // also an observed interaction
      }
      outcome.users[u] = u;
      outcome.ranks[u] =
          rank_against_scores(e, n_users, n_items, u, target, excluded);
    }
  }
  return outcome;
}

MetricsReport summarize(const RankOutcome& outcome,
                        const std::vector<int>& cutoffs) {
  MetricsReport report;
  report.cutoffs = cutoffs;
  report.n_users_evaluated = static_cast<int>(outcome.ranks.size());
  for (int n : cutoffs) {
    double hits = 0.0, gain = 0.0;
    for (int rank : outcome.ranks) {
      if (rank <= n) {
        hits += 1.0;
        gain += 1.0 / std::log2(static_cast<double>(rank) + 1.0);
      }
    }
    const double denom = std::max<std::size_t>(outcome.ranks.size(), 1);
    report.hr[n] = hits / denom;
    report.ndcg[n] = gain / denom;
  }
  return report;
}

MetricsReport evaluate(const EmbeddingTable& e, const SplitDataset& split,
                       Phase phase, const std::vector<int>& cutoffs) {
  return summarize(rank_phase(e, split, phase), cutoffs);
}

MetricsReport grouped_report(const RankOutcome& outcome,
                             const std::vector<int>& train_count,
                             const std::vector<int>& boundaries,
                             const std::vector<int>& cutoffs) {
  if (boundaries.empty()) {
    throw std::invalid_argument("group boundaries must be nonempty");
  }
  for (std::size_t k = 1; k < boundaries.size(); ++k) {
    if (boundaries[k] <= boundaries[k - 1]) {
      throw std::invalid_argument("group boundaries must strictly increase");
    }
  }

  MetricsReport report = summarize(outcome, cutoffs);
  const int n_buckets = static_cast<int>(boundaries.size()) + 1;
  std::vector<RankOutcome> buckets(n_buckets);
  for (std::size_t k = 0; k < outcome.users.size(); ++k) {
    const int count = train_count[outcome.users[k]];
    int b = 0;
    while (b < static_cast<int>(boundaries.size()) && count >= boundaries[b]) {
      ++b;
    }
    buckets[b].users.push_back(outcome.users[k]);
    buckets[b].ranks.push_back(outcome.ranks[k]);
  }

  for (int b = 0; b < n_buckets; ++b) {
    GroupMetrics group;
    if (b == 0) {
      group.label = "<" + std::to_string(boundaries[0]);
    } else if (b == n_buckets - 1) {
      group.label = ">" + std::to_string(boundaries.back() - 1);
    } else {
      group.label = std::to_string(boundaries[b - 1]) + "-" +
                    std::to_string(boundaries[b] - 1);
    }
    group.n_users = static_cast<int>(buckets[b].ranks.size());
    if (group.n_users > 0) {
      MetricsReport sub = summarize(buckets[b], cutoffs);
      group.hr = sub.hr;
      group.ndcg = sub.ndcg;
    }
    report.groups.push_back(std::move(group));
  }
  return report;
}

void write_report_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, MetricsReport>>& phases) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "phase,group,n_users,metric,cutoff,value\n";
  auto emit = [&out](const std::string& phase, const std::string& group,
                     int n_users, const char* metric, int cutoff,
                     const std::map<int, double>& values) {
    out << phase << ',' << group << ',' << n_users << ',' << metric << ','
        << cutoff << ',';
    auto it = values.find(cutoff);
    if (it == values.end()) {
      out << "na";
    } else {
      out << format_f64(it->second);
    }
    out << '\n';
  };
  for (const auto& [phase, report] : phases) {
    for (int n : report.cutoffs) {
      emit(phase, "all", report.n_users_evaluated, "hr", n, report.hr);
      emit(phase, "all", report.n_users_evaluated, "ndcg", n, report.ndcg);
    }
    for (const auto& group : report.groups) {
      for (int n : report.cutoffs) {
        emit(phase, group.label, group.n_users, "hr", n, group.hr);
        emit(phase, group.label, group.n_users, "ndcg", n, group.ndcg);
      }
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_group_comparison_tsv(const std::string& path,
                                const MetricsReport& baseline,
                                const MetricsReport& variant) {
  if (baseline.groups.size() != variant.groups.size()) {
    throw std::invalid_argument("reports have different group layouts");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "group\tn_users\tmetric\tcutoff\tbaseline\tvariant\trel_improvement\n";
  for (std::size_t g = 0; g < baseline.groups.size(); ++g) {
    const auto& base = baseline.groups[g];
    const auto& var = variant.groups[g];
    for (const char* metric : {"hr", "ndcg"}) {
      const auto& bvals = std::string(metric) == "hr" ? base.hr : base.ndcg;
      const auto& vvals = std::string(metric) == "hr" ? var.hr : var.ndcg;
      for (int n : baseline.cutoffs) {
        out << base.label << '\t' << base.n_users << '\t' << metric << '\t'
            << n << '\t';
        auto bit = bvals.find(n);
        auto vit = vvals.find(n);
        if (bit == bvals.end() || vit == vvals.end()) {
          out << "na\tna\tna\n";
          continue;
        }
        out << format_f64(bit->second) << '\t' << format_f64(vit->second)
            << '\t';
        if (bit->second > 0.0) {
          out << format_f64((vit->second - bit->second) / bit->second);
        } else {
          out << "na";
        }
        out << '\n';
      }
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace graphda
