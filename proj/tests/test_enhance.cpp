#include <random>
#include <set>

#include "doctest.h"
#include "graphda/enhance.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace graphda;

namespace {

// Integer-valued embeddings make score ties common.
EmbeddingTable tied_table(std::mt19937_64& rng, int rows, int dim) {
  EmbeddingTable e(rows, dim);
  std::uniform_int_distribution<int> coord(-2, 2);
  for (double& v : e.data) v = coord(rng);
  return e;
}

std::vector<double> items_scores(const EmbeddingTable& e, int n_users,
                                 int n_items, int user) {
  std::vector<double> scores(n_items);
  for (int i = 0; i < n_items; ++i) {
    double s = 0.0;
    for (int d = 0; d < e.dim; ++d) {
      s += e.row(user)[d] * e.row(n_users + i)[d];
    }
    scores[i] = s;
  }
  return scores;
}

}  // namespace

TEST_CASE("topk_user_items selects the dominant item and honors k=0") {
  const int n_users = 2, n_items = 4;
  EmbeddingTable e(n_users + n_items, 4);
  e.row(0)[0] = 1.0;                    // user 0
  e.row(n_users + 3)[0] = 1.0;          // item 3 aligned with user 0
  e.row(n_users + 0)[1] = 1.0;          // remaining items orthogonal
  e.row(n_users + 1)[2] = 1.0;
  e.row(n_users + 2)[3] = 1.0;

  TopKResult picks = topk_user_items(e, n_users, n_items, 1);
  REQUIRE(picks[0].indices.size() == 1);
  CHECK(picks[0].indices[0] == 3);
  CHECK(picks[0].scores[0] == 1.0);

  TopKResult none = topk_user_items(e, n_users, n_items, 0);
  for (const auto& row : none) CHECK(row.indices.empty());

  CHECK_THROWS_AS(topk_user_items(e, n_users, n_items, 5),
                  std::invalid_argument);
}

TEST_CASE("topk_user_items matches the argsort oracle under ties") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const int n_users = 15, n_items = 8;
    EmbeddingTable e = tied_table(rng, n_users + n_items, 3);
    TopKResult picks = topk_user_items(e, n_users, n_items, 4);
    for (int u = 0; u < n_users; ++u) {
      auto scores = items_scores(e, n_users, n_items, u);
      CHECK(picks[u].indices == oracle::topk_by_argsort(scores, 4));
      for (std::size_t k = 1; k < picks[u].scores.size(); ++k) {
        CHECK(picks[u].scores[k] <= picks[u].scores[k - 1]);
      }
    }
  }
}

TEST_CASE("topk selections nest as k grows and ignore positive scaling") {
  std::mt19937_64 rng(55);
  const int n_users = 10, n_items = 9;
  EmbeddingTable e = tied_table(rng, n_users + n_items, 3);

  TopKResult small = topk_user_items(e, n_users, n_items, 3);
  TopKResult large = topk_user_items(e, n_users, n_items, 6);
  for (int u = 0; u < n_users; ++u) {
    for (int k = 0; k < 3; ++k) {
      CHECK(small[u].indices[k] == large[u].indices[k]);
    }
  }

  // Power-of-two scales keep the products exact, so even the tie pattern is
  // preserved, not just the strict order.
  for (double scale : {4.0, 0.25}) {
    EmbeddingTable scaled = e;
    for (double& v : scaled.data) v *= scale;
    TopKResult rescaled = topk_user_items(scaled, n_users, n_items, 6);
    for (int u = 0; u < n_users; ++u) {
      CHECK(rescaled[u].indices == large[u].indices);
    }
  }
}

TEST_CASE("topk_item_users mirrors the user side") {
  std::mt19937_64 rng(7);
  const int n_users = 6, n_items = 5;
  EmbeddingTable e = tied_table(rng, n_users + n_items, 3);

  TopKResult none = topk_item_users(e, n_users, n_items, 0);
  for (const auto& row : none) CHECK(row.indices.empty());

  EmbeddingTable single = oracle::random_table(rng, 1 + n_items, 3);
  TopKResult forced = topk_item_users(single, 1, n_items, 1);
  for (const auto& row : forced) {
    REQUIRE(row.indices.size() == 1);
    CHECK(row.indices[0] == 0);
  }

  TopKResult picks = topk_item_users(e, n_users, n_items, 3);
  for (int i = 0; i < n_items; ++i) {
    std::vector<double> scores(n_users);
    for (int u = 0; u < n_users; ++u) {
      for (int d = 0; d < e.dim; ++d) {
        scores[u] += e.row(n_users + i)[d] * e.row(u)[d];
      }
    }
    CHECK(picks[i].indices == oracle::topk_by_argsort(scores, 3));
  }
}

TEST_CASE("union_enhanced_r merges both sides without double counting") {
  TopKResult user_side(1), item_side(2);
  user_side[0].indices = {1};
  item_side[1].indices = {0};  // item 1 picks user 0: the same edge
  SparseMatrix r = union_enhanced_r(user_side, item_side, 1, 2);
  CHECK(r.nnz() == 1);
  CHECK(r.col_indices == std::vector<int>{1});

  TopKResult empty_user(3), item_only(2);
  item_only[0].indices = {2};
  SparseMatrix r2 = union_enhanced_r(empty_user, item_only, 3, 2);
  CHECK(r2.nnz() == 1);
  oracle::Dense d = oracle::to_dense(r2);
  CHECK(d.at(2, 0) == 1.0);
}

TEST_CASE("union_enhanced_r matches a set-union oracle and keeps the floors") {
  std::mt19937_64 rng(202);
  for (int trial = 0; trial < 10; ++trial) {
    const int n_users = 12, n_items = 9, u_k = 3, i_k = 2;
    EmbeddingTable e = tied_table(rng, n_users + n_items, 3);
    TopKResult user_side = topk_user_items(e, n_users, n_items, u_k);
    TopKResult item_side = topk_item_users(e, n_users, n_items, i_k);
    SparseMatrix r = union_enhanced_r(user_side, item_side, n_users, n_items);
    validate(r);

    std::set<std::pair<int, int>> expected;
    for (int u = 0; u < n_users; ++u) {
      for (int i : user_side[u].indices) expected.emplace(u, i);
    }
    for (int i = 0; i < n_items; ++i) {
      for (int u : item_side[i].indices) expected.emplace(u, i);
    }
    CHECK(r.nnz() == static_cast<std::int64_t>(expected.size()));
    CHECK(r.nnz() <= n_users * u_k + n_items * i_k);
    oracle::Dense d = oracle::to_dense(r);
    for (const auto& [u, i] : expected) CHECK(d.at(u, i) == 1.0);

    // Floors: each user row >= u_k entries, each item column >= i_k.
    for (int u = 0; u < n_users; ++u) {
      CHECK(r.row_offsets[u + 1] - r.row_offsets[u] >= u_k);
    }
    std::vector<int> col_counts(n_items, 0);
    for (int c : r.col_indices) ++col_counts[c];
    for (int i = 0; i < n_items; ++i) CHECK(col_counts[i] >= i_k);
  }
}

TEST_CASE("topk_correlations produces symmetric zero-diagonal blocks") {
  std::mt19937_64 rng(303);

  EmbeddingTable pair = oracle::random_table(rng, 2 + 3, 3);
  SparseMatrix w2 = topk_correlations(pair, 2, 3, Side::user, 1);
  oracle::Dense d2 = oracle::to_dense(w2);
  CHECK(d2.at(0, 1) == 1.0);
  CHECK(d2.at(1, 0) == 1.0);
  CHECK(d2.at(0, 0) == 0.0);
  CHECK(d2.at(1, 1) == 0.0);

  for (int trial = 0; trial < 10; ++trial) {
    const int n_users = 20, n_items = 6, k = 3;
    EmbeddingTable e = tied_table(rng, n_users + n_items, 4);
    SparseMatrix w = topk_correlations(e, n_users, n_items, Side::user, k);
    validate(w);
    CHECK(is_symmetric(w));

    // Brute pairwise scores + union symmetrization.
    std::set<std::pair<int, int>> expected;
    for (int a = 0; a < n_users; ++a) {
      std::vector<double> scores(n_users);
      for (int b = 0; b < n_users; ++b) {
        for (int d = 0; d < e.dim; ++d) {
          scores[b] += e.row(a)[d] * e.row(b)[d];
        }
      }
      for (int b : oracle::topk_by_argsort(scores, k, a)) {
        expected.emplace(a, b);
        expected.emplace(b, a);
      }
    }
    CHECK(w.nnz() == static_cast<std::int64_t>(expected.size()));
    for (int r = 0; r < n_users; ++r) {
      const std::int64_t degree = w.row_offsets[r + 1] - w.row_offsets[r];
      CHECK(degree >= k);
      CHECK(degree <= n_users - 1);
      for (std::int64_t p = w.row_offsets[r]; p < w.row_offsets[r + 1]; ++p) {
        CHECK(w.col_indices[p] != r);
        CHECK(expected.count({r, w.col_indices[p]}) == 1);
      }
    }
  }

  EmbeddingTable e = tied_table(rng, 8, 2);
  SparseMatrix none = topk_correlations(e, 5, 3, Side::user, 0);
  CHECK(none.nnz() == 0);
  SparseMatrix item_side = topk_correlations(e, 5, 3, Side::item, 1);
  CHECK(item_side.n_rows == 3);
  CHECK(is_symmetric(item_side));
  CHECK_THROWS_AS(topk_correlations(e, 5, 3, Side::item, 3),
                  std::invalid_argument);
}

TEST_CASE("assemble variants agree with build_adjacency") {
  std::mt19937_64 rng(404);
  const int n_users = 9, n_items = 7;
  EmbeddingTable e = tied_table(rng, n_users + n_items, 3);
  TopKResult user_side = topk_user_items(e, n_users, n_items, 3);
  TopKResult item_side = topk_item_users(e, n_users, n_items, 2);
  SparseMatrix r = union_enhanced_r(user_side, item_side, n_users, n_items);
  SparseMatrix w_uu = topk_correlations(e, n_users, n_items, Side::user, 2);
  SparseMatrix w_ii = topk_correlations(e, n_users, n_items, Side::item, 2);

  // enhanced_ui ignores whatever W blocks the caller holds.
  SparseMatrix ui = assemble(r, w_uu, w_ii, Variant::enhanced_ui);
  SparseMatrix plain = build_adjacency(r);
  CHECK(ui.row_offsets == plain.row_offsets);
  CHECK(ui.col_indices == plain.col_indices);

  // graphda with empty W blocks degenerates to enhanced_ui.
  SparseMatrix no_uu = empty_matrix(n_users, n_users);
  SparseMatrix no_ii = empty_matrix(n_items, n_items);
  SparseMatrix degenerate = assemble(r, no_uu, no_ii, Variant::graphda);
  CHECK(degenerate.row_offsets == ui.row_offsets);
  CHECK(degenerate.col_indices == ui.col_indices);

  SparseMatrix full = assemble(r, w_uu, w_ii, Variant::graphda);
  CHECK(is_symmetric(full));

  // Blocks survive a round-trip through the assembled matrix.
  oracle::Dense dfull = oracle::to_dense(full);
  oracle::Dense dr = oracle::to_dense(r);
  oracle::Dense duu = oracle::to_dense(w_uu);
  oracle::Dense dii = oracle::to_dense(w_ii);
  for (int u = 0; u < n_users; ++u) {
    for (int i = 0; i < n_items; ++i) {
      CHECK(dfull.at(u, n_users + i) == dr.at(u, i));
      CHECK(dfull.at(n_users + i, u) == dr.at(u, i));
    }
    for (int v = 0; v < n_users; ++v) CHECK(dfull.at(u, v) == duu.at(u, v));
  }
  for (int i = 0; i < n_items; ++i) {
    for (int j = 0; j < n_items; ++j) {
      CHECK(dfull.at(n_users + i, n_users + j) == dii.at(i, j));
    }
  }

  CHECK_THROWS_AS(assemble(r, w_uu, w_ii, Variant::baseline),
                  std::invalid_argument);
}

TEST_CASE("enhance manifest round-trips") {
  EnhanceManifest m;
  m.config = {5, 3, 7, 2};
  m.pretrain_checkpoint = "/tmp/some/checkpoint.txt";
  m.variant = Variant::graphda;
  testutil::TempDir tmp;
  write_enhance_manifest(m, tmp.file("manifest.txt"));
  EnhanceManifest back = read_enhance_manifest(tmp.file("manifest.txt"));
  CHECK(back.config.u_k == 5);
  CHECK(back.config.i_k == 3);
  CHECK(back.config.uu_k == 7);
  CHECK(back.config.ii_k == 2);
  CHECK(back.pretrain_checkpoint == m.pretrain_checkpoint);
  CHECK(back.variant == Variant::graphda);

  CHECK(parse_variant("enhanced_ui") == Variant::enhanced_ui);
  CHECK(variant_name(Variant::baseline) == "baseline");
  CHECK_THROWS_AS(parse_variant("nope"), std::invalid_argument);
}
