#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "graphda/pipeline.hpp"

namespace fs = std::filesystem;
using namespace graphda;

namespace {

void print_report(const char* tag, const MetricsReport& report) {
  std::printf("%s (%d users):", tag, report.n_users_evaluated);
  for (int n : report.cutoffs) {
    std::printf("  HR@%d=%.5f NDCG@%d=%.5f", n, report.hr.at(n), n,
                report.ndcg.at(n));
  }
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph collaborative filtering with adjacency denoising and "
               "augmentation"};
  app.fallthrough();
  app.set_config("--config", "", "key=value file supplying flag defaults");
  app.require_subcommand(1);

  std::string data_path, out_dir, format = "tsv", variant = "baseline";
  int k_core = 5;
  TrainConfig base;
  bool last_layer_only = false;
  bool force = false;

  app.add_option("--data", data_path, "interaction file (user, item, ts)");
  app.add_option("--format", format, "tsv or csv")
      ->check(CLI::IsMember({"tsv", "csv"}));
  app.add_option("--out", out_dir, "output directory for artifacts");
  app.add_option("--k-core", k_core, "minimum distinct items per user");
  app.add_option("--dim", base.dim, "embedding dimension");
  app.add_option("--lr", base.learning_rate, "learning rate");
  app.add_option("--l2", base.l2_weight, "L2 regularization weight");
  app.add_option("--layers", base.n_layers, "graph convolution layers");
  app.add_option("--epochs", base.max_epochs, "epoch cap");
  app.add_option("--patience", base.patience,
                 "epochs without validation improvement before stopping");
  app.add_option("--batch", base.batch_size, "mini-batch size");
  app.add_option("--seed", base.seed, "root seed");
  app.add_option("--init-std", base.init_std, "embedding init stddev");
  app.add_flag("--last-layer-only", last_layer_only,
               "use the last propagation layer instead of the layer mean");
  app.add_flag("--force", force, "recompute stages even if artifacts exist");

  // Re-train defaults to the pre-train settings with seed+1.
  double retrain_lr = -1.0, retrain_l2 = -1.0;
  int retrain_epochs = -1, retrain_patience = -1;
  std::int64_t retrain_seed = -1;
  app.add_option("--retrain-lr", retrain_lr, "override re-train lr");
  app.add_option("--retrain-l2", retrain_l2, "override re-train L2");
  app.add_option("--retrain-epochs", retrain_epochs,
                 "override re-train epoch cap");
  app.add_option("--retrain-patience", retrain_patience,
                 "override re-train patience");
  app.add_option("--retrain-seed", retrain_seed, "override re-train seed");

  EnhanceConfig enhance_cfg;
  app.add_option("--u-k", enhance_cfg.u_k, "items kept per user");
  app.add_option("--i-k", enhance_cfg.i_k, "users kept per item");
  app.add_option("--uu-k", enhance_cfg.uu_k, "similar users per user");
  app.add_option("--ii-k", enhance_cfg.ii_k, "similar items per item");
  app.add_option("--variant", variant, "baseline, enhanced_ui or graphda")
      ->check(CLI::IsMember({"baseline", "enhanced_ui", "graphda"}));

  SweepGrids grids;
  app.add_option("--u-k-grid", grids.u_k, "sweep values for u_k")
      ->delimiter(',');
  app.add_option("--i-k-grid", grids.i_k, "sweep values for i_k")
      ->delimiter(',');
  app.add_option("--uu-k-grid", grids.uu_k, "sweep values for uu_k")
      ->delimiter(',');
  app.add_option("--ii-k-grid", grids.ii_k, "sweep values for ii_k")
      ->delimiter(',');

  std::vector<int> cutoffs = {5, 10, 20};
  std::vector<int> boundaries = {3, 8};
  app.add_option("--cutoffs", cutoffs, "ranking cutoffs")->delimiter(',');
  app.add_option("--group-boundaries", boundaries,
                 "train-count boundaries for grouped reporting")
      ->delimiter(',');

  SyntheticConfig synth_cfg;
  std::string synth_out;
  app.add_option("--synth-out", synth_out, "where synth writes its TSV");
  app.add_option("--synth-users", synth_cfg.n_users, "synthetic user count");
  app.add_option("--synth-items", synth_cfg.n_items, "synthetic item count");
  app.add_option("--synth-blocks", synth_cfg.n_blocks, "preference blocks");
  app.add_option("--synth-noise", synth_cfg.noise_rate,
                 "probability of a cross-block interaction");
  app.add_option("--synth-mean", synth_cfg.mean_interactions,
                 "mean interactions per user");
  app.add_option("--synth-min", synth_cfg.min_interactions,
                 "minimum interactions per user");
  app.add_option("--synth-seed", synth_cfg.seed, "synthetic data seed");

  auto* cmd_prepare = app.add_subcommand("prepare", "load, filter and split");
  auto* cmd_pretrain =
      app.add_subcommand("pretrain", "train on the observed graph");
  auto* cmd_enhance = app.add_subcommand(
      "enhance", "rebuild the adjacency from pre-trained embeddings");
  auto* cmd_retrain =
      app.add_subcommand("retrain", "train on the enhanced graph");
  auto* cmd_evaluate =
      app.add_subcommand("evaluate", "report metrics for the chosen variant");
  auto* cmd_run = app.add_subcommand("run", "full pipeline for one variant");
  auto* cmd_sweep =
      app.add_subcommand("sweep", "grid-search the enhancement sizes");
  auto* cmd_synth =
      app.add_subcommand("synth", "generate a planted-block dataset");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_synth->parsed()) {
      if (synth_out.empty()) {
        throw std::runtime_error("synth: --synth-out is required");
      }
      InteractionLog log = gen_synthetic(synth_cfg);
      if (auto dir = fs::path(synth_out).parent_path(); !dir.empty()) {
        fs::create_directories(dir);
      }
      write_interactions_tsv(log, synth_out);
      std::printf("wrote %zu interactions (%d users, %d items) to %s\n",
                  log.interactions.size(), log.n_users, log.n_items,
                  synth_out.c_str());
      return 0;
    }

    ExperimentConfig cfg;
    cfg.data_path = data_path;
    cfg.format = parse_format(format);
    cfg.k_core = k_core;
    base.average_layers = !last_layer_only;
    cfg.pretrain = base;
    cfg.retrain = base;
    cfg.retrain.seed = retrain_seed >= 0
                           ? static_cast<std::uint64_t>(retrain_seed)
                           : base.seed + 1;
    if (retrain_lr > 0) cfg.retrain.learning_rate = retrain_lr;
    if (retrain_l2 >= 0) cfg.retrain.l2_weight = retrain_l2;
    if (retrain_epochs > 0) cfg.retrain.max_epochs = retrain_epochs;
    if (retrain_patience >= 0) cfg.retrain.patience = retrain_patience;
    cfg.enhance = enhance_cfg;
    cfg.variant = parse_variant(variant);
    cfg.out_dir = out_dir;
    cfg.grids = grids;
    cfg.force = force;
    cfg.cutoffs = cutoffs;
    cfg.group_boundaries = boundaries;
    if (cfg.out_dir.empty()) {
      throw std::runtime_error("--out is required");
    }

    if (cmd_prepare->parsed()) {
      SplitDataset split = stage_prepare(cfg);
      std::printf("split ready: %d users, %d items, %zu train interactions\n",
                  split.train.n_users, split.train.n_items,
                  split.train.interactions.size());
    } else if (cmd_pretrain->parsed()) {
      SplitDataset split = stage_prepare(cfg);
      std::string ckpt = stage_pretrain(cfg, split);
      std::printf("pre-train checkpoint: %s\n", ckpt.c_str());
    } else if (cmd_enhance->parsed()) {
      SplitDataset split = stage_prepare(cfg);
      std::string ckpt = stage_pretrain(cfg, split);
      std::string adjacency = stage_enhance(cfg, split, ckpt);
      std::printf("enhanced adjacency: %s\n", adjacency.c_str());
    } else if (cmd_retrain->parsed()) {
      SplitDataset split = stage_prepare(cfg);
      std::string ckpt = stage_pretrain(cfg, split);
      std::string adjacency = stage_enhance(cfg, split, ckpt);
      std::string retrained = stage_retrain(cfg, split, adjacency);
      std::printf("re-train checkpoint: %s\n", retrained.c_str());
    } else if (cmd_evaluate->parsed() || cmd_run->parsed()) {
      MetricsReport report = run(cfg);
      print_report("test", report);
    } else if (cmd_sweep->parsed()) {
      SweepResult result = sweep(cfg);
      const SweepCell& best = result.cells[result.best_index];
      std::printf("best cell: u_k=%d i_k=%d uu_k=%d ii_k=%d (val NDCG@20=%.5f)\n",
                  best.config.u_k, best.config.i_k, best.config.uu_k,
                  best.config.ii_k, best.val_ndcg);
      print_report("test", result.best_test);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
