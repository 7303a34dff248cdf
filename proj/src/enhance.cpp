#include "graphda/enhance.hpp"

#include <algorithm>
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

// Top-k of `scores` under (score desc, index asc); `skip` marks one index as
// ineligible (-1 for none).
TopKRow select_topk(const std::vector<double>& scores, int k, int skip) {
  std::vector<int> idx;
  idx.reserve(scores.size());
  for (int i = 0; i < static_cast<int>(scores.size()); ++i) {
    if (i != skip) idx.push_back(i);
  }
  auto better = [&scores](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  k = std::min<int>(k, static_cast<int>(idx.size()));
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), better);
  TopKRow row;
  row.indices.assign(idx.begin(), idx.begin() + k);
  row.scores.reserve(k);
  for (int i : row.indices) row.scores.push_back(scores[i]);
  return row;
}

TopKResult topk_rows(const EmbeddingTable& e, int query_offset, int n_queries,
                     int cand_offset, int n_cands, int k,
                     bool exclude_self_pairs) {
  TopKResult result(n_queries);
  if (k == 0) return result;
#pragma omp parallel
  {
    std::vector<double> scores(n_cands);
#pragma omp for schedule(static)
    for (int q = 0; q < n_queries; ++q) {
      const double* eq = e.row(query_offset + q);
      for (int c = 0; c < n_cands; ++c) {
        scores[c] = dot(eq, e.row(cand_offset + c), e.dim);
      }
      result[q] = select_topk(scores, k, exclude_self_pairs ? q : -1);
    }
  }
  return result;
}

}  // namespace

TopKResult topk_user_items(const EmbeddingTable& e, int n_users, int n_items,
                           int u_k) {
  if (u_k < 0 || u_k > n_items) {
    throw std::invalid_argument("u_k must be in [0, n_items]");
  }
  return topk_rows(e, 0, n_users, n_users, n_items, u_k, false);
}

TopKResult topk_item_users(const EmbeddingTable& e, int n_users, int n_items,
                           int i_k) {
  if (i_k < 0 || i_k > n_users) {
    throw std::invalid_argument("i_k must be in [0, n_users]");
  }
  return topk_rows(e, n_users, n_items, 0, n_users, i_k, false);
}

SparseMatrix union_enhanced_r(const TopKResult& user_side,
                              const TopKResult& item_side, int n_users,
                              int n_items) {
  std::vector<std::tuple<int, int, double>> edges;
  for (int u = 0; u < static_cast<int>(user_side.size()); ++u) {
    for (int i : user_side[u].indices) edges.emplace_back(u, i, 1.0);
  }
  for (int i = 0; i < static_cast<int>(item_side.size()); ++i) {
    for (int u : item_side[i].indices) edges.emplace_back(u, i, 1.0);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return from_coo(n_users, n_items, std::move(edges));
}

SparseMatrix topk_correlations(const EmbeddingTable& e, int n_users,
                               int n_items, Side side, int k) {
  const int offset = side == Side::user ? 0 : n_users;
  const int n = side == Side::user ? n_users : n_items;
  if (k < 0 || k > n - 1) {
    throw std::invalid_argument("correlation k must be in [0, side size - 1]");
  }
  TopKResult picks = topk_rows(e, offset, n, offset, n, k, true);

  // Symmetrize by union: either endpoint selecting the other makes an edge.
  std::vector<std::tuple<int, int, double>> edges;
  for (int r = 0; r < n; ++r) {
    for (int c : picks[r].indices) {
      edges.emplace_back(r, c, 1.0);
      edges.emplace_back(c, r, 1.0);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return from_coo(n, n, std::move(edges));
}

Variant parse_variant(const std::string& name) {
  if (name == "baseline") return Variant::baseline;
  if (name == "enhanced_ui") return Variant::enhanced_ui;
  if (name == "graphda") return Variant::graphda;
  throw std::invalid_argument("unknown variant: " + name);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::baseline:
      return "baseline";
    case Variant::enhanced_ui:
      return "enhanced_ui";
    case Variant::graphda:
      return "graphda";
  }
  throw std::invalid_argument("unknown variant value");
}

SparseMatrix assemble(const SparseMatrix& r_tilde, const SparseMatrix& w_uu,
                      const SparseMatrix& w_ii, Variant variant) {
  switch (variant) {
    case Variant::enhanced_ui:
      return build_adjacency(r_tilde);
    case Variant::graphda:
      return build_adjacency(r_tilde, &w_uu, &w_ii);
    case Variant::baseline:
      break;
  }
  throw std::invalid_argument("assemble needs an enhanced variant");
}

void write_enhance_manifest(const EnhanceManifest& m,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "u_k=" << m.config.u_k << "\n"
      << "i_k=" << m.config.i_k << "\n"
      << "uu_k=" << m.config.uu_k << "\n"
      << "ii_k=" << m.config.ii_k << "\n"
      << "pretrain_checkpoint=" << m.pretrain_checkpoint << "\n"
      << "variant=" << variant_name(m.variant) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

EnhanceManifest read_enhance_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  EnhanceManifest m;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ": malformed line: " + line);
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (key == "u_k") {
      m.config.u_k = static_cast<int>(parse_i64(value).value_or(-1));
    } else if (key == "i_k") {
      m.config.i_k = static_cast<int>(parse_i64(value).value_or(-1));
    } else if (key == "uu_k") {
      m.config.uu_k = static_cast<int>(parse_i64(value).value_or(-1));
    } else if (key == "ii_k") {
      m.config.ii_k = static_cast<int>(parse_i64(value).value_or(-1));
    } else if (key == "pretrain_checkpoint") {
      m.pretrain_checkpoint = value;
    } else if (key == "variant") {
      m.variant = parse_variant(value);
    } else {
      throw std::runtime_error(path + ": unknown key: " + key);
    }
  }
  return m;
}

}  // namespace graphda
