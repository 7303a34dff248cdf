#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "graphda/dataset.hpp"
#include "graphda/embedding.hpp"
#include "graphda/graph.hpp"

namespace graphda {

struct TrainConfig {
  int dim = 128;
  double learning_rate = 1e-3;
  double l2_weight = 0.0;
  int n_layers = 3;
  int max_epochs = 500;
  int patience = 20;
  int batch_size = 1024;
  std::uint64_t seed = 42;
  double init_std = 0.1;
  bool average_layers = true;  // mean over layers vs last layer only
};

// i.i.d. Gaussian(0, init_std^2) entries from a seeded generator. Same seed,
// same table.
EmbeddingTable init_embeddings(int n_rows, int dim, std::uint64_t seed,
                               double init_std);

// E_out = mean of {E0, L E0, ..., L^(n_layers-1) E0}, or the last term alone
// when average_layers is false. n_layers = 1 returns E0.
EmbeddingTable propagate(const SparseMatrix& l, const EmbeddingTable& e0,
                         int n_layers, bool average_layers = true);

// One training example. All three fields are combined-table row indices:
// callers offset item ids by n_users before building triples.
struct Triple {
  int user;
  int pos;
  int neg;
};

// Pairwise ranking loss, mean per triple:
//   -log sigmoid(e_u . e_pos - e_u . e_neg)
// on the propagated output embeddings, plus (l2 / 2 batch) * sum of squared
// touched e0 rows (counted per occurrence). When grad_out is non-null it is
// resized to e0's shape and filled with d(loss)/d(e0); the chain rule runs
// back through the layer stack via repeated transpose products. Throws on a
// non-finite loss.
double bpr_batch_loss(const SparseMatrix& l, const EmbeddingTable& e0,
                      int n_layers, bool average_layers,
                      std::span<const Triple> batch, double l2,
                      EmbeddingTable* grad_out = nullptr);

// Uniform over the items a user has no train interaction with.
class NegativeSampler {
 public:
  explicit NegativeSampler(const InteractionLog& train);
  int sample(int user, std::mt19937_64& rng) const;

 private:
  int n_items_ = 0;
  std::vector<std::vector<int>> items_per_user_;  // sorted per user
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double val_ndcg = 0.0;
};

struct TrainResult {
  EmbeddingTable e0;      // initial-layer snapshot with best validation NDCG
  EmbeddingTable output;  // propagated embeddings of that snapshot
  std::vector<EpochStats> trace;
  int best_epoch = 0;
  double best_val_ndcg = 0.0;
};

// Shuffled mini-batches of (user, pos, sampled neg) triples, Adam updates,
// validation NDCG@20 after every epoch, early stop once `patience` epochs
// pass without improvement. Deterministic for a fixed config.
TrainResult train(const SplitDataset& split, const SparseMatrix& l,
                  const TrainConfig& cfg);

// Raw dot-product scores of one user against every item. Excluded items get
// -infinity.
std::vector<double> score_all(const EmbeddingTable& e, int n_users,
                              int n_items, int user,
                              const std::vector<int>& exclude_sorted);

// Checkpoint: "rows=<n> dim=<d> seed=<s>" header then one row of
// 17-significant-digit floats per embedding. Lossless round-trip.
void write_checkpoint(const EmbeddingTable& e, std::uint64_t seed,
                      const std::string& path);

struct Checkpoint {
  EmbeddingTable table;
  std::uint64_t seed = 0;
};
Checkpoint read_checkpoint(const std::string& path);

void write_trace_csv(const std::vector<EpochStats>& trace,
                     const std::string& path);

}  // namespace graphda
