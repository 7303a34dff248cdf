#pragma once

#include <string>
#include <vector>

#include "graphda/embedding.hpp"
#include "graphda/graph.hpp"

namespace graphda {

struct EnhanceConfig {
  int u_k = 0;   // items kept per user
  int i_k = 0;   // users kept per item
  int uu_k = 0;  // similar users per user
  int ii_k = 0;  // similar items per item
};

// Per-row selection: indices distinct, scores nonincreasing, ties broken by
// ascending index.
struct TopKRow {
  std::vector<int> indices;
  std::vector<double> scores;
};
using TopKResult = std::vector<TopKRow>;

// For each user, the u_k items with largest e_u . e_i over ALL items;
// already-observed items stay eligible, which is what lets good original
// edges survive the rewrite.
TopKResult topk_user_items(const EmbeddingTable& e, int n_users, int n_items,
                           int u_k);

// Mirror: for each item, the i_k users with largest dot product.
TopKResult topk_item_users(const EmbeddingTable& e, int n_users, int n_items,
                           int i_k);

// R~[u][i] = 1 iff i in user_side(u) or u in item_side(i). Replaces the
// observed interaction matrix outright; unselected original edges are gone.
SparseMatrix union_enhanced_r(const TopKResult& user_side,
                              const TopKResult& item_side, int n_users,
                              int n_items);

enum class Side { user, item };

// Same-side top-k by dot product, self excluded, then symmetrized by union.
// Zero diagonal; every row keeps degree >= k.
SparseMatrix topk_correlations(const EmbeddingTable& e, int n_users,
                               int n_items, Side side, int k);

enum class Variant { baseline, enhanced_ui, graphda };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

// enhanced_ui: [[0, R~], [R~^T, 0]]; graphda: [[W_UU, R~], [R~^T, W_II]].
SparseMatrix assemble(const SparseMatrix& r_tilde, const SparseMatrix& w_uu,
                      const SparseMatrix& w_ii, Variant variant);

// Sidecar describing how an enhanced adjacency was produced.
struct EnhanceManifest {
  EnhanceConfig config;
  std::string pretrain_checkpoint;
  Variant variant = Variant::enhanced_ui;
};

void write_enhance_manifest(const EnhanceManifest& m, const std::string& path);
EnhanceManifest read_enhance_manifest(const std::string& path);

}  // namespace graphda
