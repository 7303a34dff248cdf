#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphda/dataset.hpp"
#include "graphda/encoder.hpp"
#include "graphda/enhance.hpp"
#include "graphda/eval.hpp"

namespace graphda {

// Planted-block generator: users and items are partitioned into preference
// blocks; every interaction lands in the user's own block with probability
// 1 - noise_rate, otherwise uniformly in another block. Activity per user is
// geometric with the given mean, floored at min_interactions and capped at
// the user's block size so draws stay feasible.
struct SyntheticConfig {
  int n_users = 200;
  int n_items = 100;
  int n_blocks = 5;
  double noise_rate = 0.2;
  double mean_interactions = 8.0;
  int min_interactions = 3;
  std::uint64_t seed = 7;
};

InteractionLog gen_synthetic(const SyntheticConfig& cfg);

// Writes "user_key\titem_key\ttimestamp" rows loadable by load_interactions.
void write_interactions_tsv(const InteractionLog& log, const std::string& path);

struct SweepGrids {
  std::vector<int> u_k, i_k, uu_k, ii_k;
  bool empty() const {
    return u_k.empty() && i_k.empty() && uu_k.empty() && ii_k.empty();
  }
};

struct ExperimentConfig {
  std::string data_path;
  FileFormat format = FileFormat::tsv;
  int k_core = 5;
  TrainConfig pretrain;
  TrainConfig retrain;
  EnhanceConfig enhance;
  Variant variant = Variant::baseline;
  std::string out_dir;
  SweepGrids grids;
  bool force = false;  // recompute stages even when artifacts exist
  std::vector<int> cutoffs = {5, 10, 20};
  std::vector<int> group_boundaries = {3, 8};
};

// A failed stage aborts the run; partial artifacts stay behind for resume.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& cause)
      : std::runtime_error(stage + ": " + cause), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Stage entry points. Each persists its artifacts under cfg.out_dir and
// skips the work when they already exist (unless cfg.force).
SplitDataset stage_prepare(const ExperimentConfig& cfg);
std::string stage_pretrain(const ExperimentConfig& cfg,
                           const SplitDataset& split);
std::string stage_enhance(const ExperimentConfig& cfg,
                          const SplitDataset& split,
                          const std::string& checkpoint_path);
std::string stage_retrain(const ExperimentConfig& cfg,
                          const SplitDataset& split,
                          const std::string& adjacency_path);
MetricsReport stage_evaluate(const ExperimentConfig& cfg,
                             const SplitDataset& split,
                             const std::string& checkpoint_path);

// prepare -> pretrain -> [enhance -> retrain] -> evaluate -> report.
// Baseline evaluates the pre-trained model directly. Returns test metrics.
MetricsReport run(const ExperimentConfig& cfg);

struct SweepCell {
  EnhanceConfig config;
  double val_ndcg = 0.0;
  bool ok = false;
  std::string error;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  int best_index = -1;
  MetricsReport best_test;
};

// Cartesian product over the configured grids; every cell reuses the one
// pre-train checkpoint, the winner by validation NDCG@20 gets the test run.
SweepResult sweep(const ExperimentConfig& cfg);

}  // namespace graphda
