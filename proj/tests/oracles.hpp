// Independent brute-force references the tests check the library against.
// Everything here recomputes from first principles (dense algebra, full
// sorts, fixed-point deletion) and stays off the implementation paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "graphda/dataset.hpp"
#include "graphda/embedding.hpp"
#include "graphda/encoder.hpp"
#include "graphda/graph.hpp"

namespace oracle {

struct Dense {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Dense() = default;
  Dense(int r, int c) : rows(r), cols(c), a(std::size_t(r) * c, 0.0) {}
  double& at(int r, int c) { return a[std::size_t(r) * cols + c]; }
  double at(int r, int c) const { return a[std::size_t(r) * cols + c]; }
};

inline Dense to_dense(const graphda::SparseMatrix& m) {
  Dense d(m.n_rows, m.n_cols);
  for (int r = 0; r < m.n_rows; ++r) {
    for (std::int64_t k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
      d.at(r, m.col_indices[k]) = m.values[k];
    }
  }
  return d;
}

inline Dense to_dense(const graphda::EmbeddingTable& e) {
  Dense d(e.n_rows, e.dim);
  d.a = e.data;
  return d;
}

inline Dense matmul(const Dense& x, const Dense& y) {
  Dense out(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i) {
    for (int k = 0; k < x.cols; ++k) {
      const double v = x.at(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < y.cols; ++j) out.at(i, j) += v * y.at(k, j);
    }
  }
  return out;
}

inline Dense transpose(const Dense& x) {
  Dense out(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i) {
    for (int j = 0; j < x.cols; ++j) out.at(j, i) = x.at(i, j);
  }
  return out;
}

// Max |x - ref| scaled by the largest reference magnitude.
inline double rel_err(const Dense& x, const Dense& ref) {
  double max_diff = 0.0, max_ref = 0.0;
  for (std::size_t k = 0; k < ref.a.size(); ++k) {
    max_diff = std::max(max_diff, std::abs(x.a[k] - ref.a[k]));
    max_ref = std::max(max_ref, std::abs(ref.a[k]));
  }
  return max_ref > 0.0 ? max_diff / max_ref : max_diff;
}

// [[Wuu, R], [R^T, Wii]], binarized.
inline Dense block_adjacency(const Dense& r, const Dense* wuu,
                             const Dense* wii) {
  const int u = r.rows, i = r.cols;
  Dense a(u + i, u + i);
  for (int x = 0; x < u; ++x) {
    for (int y = 0; y < i; ++y) {
      if (r.at(x, y) != 0.0) {
        a.at(x, u + y) = 1.0;
        a.at(u + y, x) = 1.0;
      }
    }
  }
  if (wuu) {
    for (int x = 0; x < u; ++x)
      for (int y = 0; y < u; ++y)
        if (wuu->at(x, y) != 0.0) a.at(x, y) = 1.0;
  }
  if (wii) {
    for (int x = 0; x < i; ++x)
      for (int y = 0; y < i; ++y)
        if (wii->at(x, y) != 0.0) a.at(u + x, u + y) = 1.0;
  }
  return a;
}

inline Dense normalize_sym(const Dense& a) {
  std::vector<double> deg(a.rows, 0.0);
  for (int r = 0; r < a.rows; ++r) {
    for (int c = 0; c < a.cols; ++c) deg[r] += a.at(r, c);
  }
  Dense l(a.rows, a.cols);
  for (int r = 0; r < a.rows; ++r) {
    for (int c = 0; c < a.cols; ++c) {
      if (a.at(r, c) != 0.0 && deg[r] > 0.0 && deg[c] > 0.0) {
        l.at(r, c) = a.at(r, c) / std::sqrt(deg[r] * deg[c]);
      }
    }
  }
  return l;
}

inline Dense propagate(const Dense& l, const Dense& e0, int layers,
                       bool average) {
  Dense cur = e0;
  Dense acc = e0;
  for (int k = 1; k < layers; ++k) {
    cur = matmul(l, cur);
    if (average) {
      for (std::size_t j = 0; j < acc.a.size(); ++j) acc.a[j] += cur.a[j];
    }
  }
  if (!average) return cur;
  for (double& v : acc.a) v /= layers;
  return acc;
}

inline double bpr_loss(const Dense& l, const Dense& e0, int layers,
                       bool average, const std::vector<graphda::Triple>& batch,
                       double l2) {
  Dense out = propagate(l, e0, layers, average);
  const int dim = e0.cols;
  double loss = 0.0;
  for (const auto& t : batch) {
    double margin = 0.0, sq = 0.0;
    for (int d = 0; d < dim; ++d) {
      margin += out.at(t.user, d) * (out.at(t.pos, d) - out.at(t.neg, d));
    }
    loss += std::log1p(std::exp(-std::abs(margin))) +
            std::max(-margin, 0.0);  // softplus(-margin)
    for (int row : {t.user, t.pos, t.neg}) {
      for (int d = 0; d < dim; ++d) sq += e0.at(row, d) * e0.at(row, d);
    }
    loss += 0.5 * l2 * sq;
  }
  return loss / static_cast<double>(batch.size());
}

// Full-sort ranking with the (score desc, index asc) tie order.
inline int rank_by_sort(const std::vector<double>& scores,
                        const std::vector<char>& excluded, int target) {
  std::vector<int> pool;
  for (int i = 0; i < static_cast<int>(scores.size()); ++i) {
    if (!excluded[i]) pool.push_back(i);
  }
  std::sort(pool.begin(), pool.end(), [&scores](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  auto it = std::find(pool.begin(), pool.end(), target);
  return static_cast<int>(it - pool.begin()) + 1;
}

// Full argsort top-k with the same tie order; `skip` excludes one index.
inline std::vector<int> topk_by_argsort(const std::vector<double>& scores,
                                        int k, int skip = -1) {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(scores.size()); ++i) {
    if (i != skip) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&scores](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  idx.resize(std::min<std::size_t>(idx.size(), k));
  return idx;
}

// Iterative deletion until every kept user has >= k distinct items, after
// collapsing duplicates to the earliest timestamp.
struct KcoreOracle {
  std::set<std::string> users;
  std::map<std::pair<std::string, std::string>, std::int64_t> interactions;
};

inline KcoreOracle kcore_fixed_point(
    const std::vector<graphda::RawInteraction>& raw, int k) {
  KcoreOracle result;
  for (const auto& r : raw) {
    auto key = std::make_pair(r.user_key, r.item_key);
    auto it = result.interactions.find(key);
    if (it == result.interactions.end()) {
      result.interactions.emplace(key, r.timestamp);
    } else {
      it->second = std::min(it->second, r.timestamp);
    }
    result.users.insert(r.user_key);
  }
  while (true) {
    std::map<std::string, int> counts;
    for (const auto& [key, ts] : result.interactions) {
      if (result.users.count(key.first)) ++counts[key.first];
    }
    std::set<std::string> keep;
    for (const auto& u : result.users) {
      auto it = counts.find(u);
      if (it != counts.end() && it->second >= k) keep.insert(u);
    }
    if (keep == result.users) break;
    result.users = std::move(keep);
  }
  for (auto it = result.interactions.begin();
       it != result.interactions.end();) {
    if (!result.users.count(it->first.first)) {
      it = result.interactions.erase(it);
    } else {
      ++it;
    }
  }
  return result;
}

// ---- random instance helpers ----------------------------------------------

inline graphda::SparseMatrix random_bipartite(std::mt19937_64& rng,
                                              int n_rows, int n_cols,
                                              double density) {
  std::bernoulli_distribution flip(density);
  std::vector<std::tuple<int, int, double>> entries;
  for (int r = 0; r < n_rows; ++r) {
    for (int c = 0; c < n_cols; ++c) {
      if (flip(rng)) entries.emplace_back(r, c, 1.0);
    }
  }
  return graphda::from_coo(n_rows, n_cols, std::move(entries));
}

inline graphda::SparseMatrix random_symmetric_zero_diag(std::mt19937_64& rng,
                                                        int n,
                                                        double density) {
  std::bernoulli_distribution flip(density);
  std::vector<std::tuple<int, int, double>> entries;
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) {
      if (flip(rng)) {
        entries.emplace_back(r, c, 1.0);
        entries.emplace_back(c, r, 1.0);
      }
    }
  }
  return graphda::from_coo(n, n, std::move(entries));
}

inline graphda::EmbeddingTable random_table(std::mt19937_64& rng, int rows,
                                            int dim, double scale = 1.0) {
  graphda::EmbeddingTable e(rows, dim);
  std::normal_distribution<double> gauss(0.0, scale);
  for (double& v : e.data) v = gauss(rng);
  return e;
}

}  // namespace oracle
