#include "graphda/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <utility>

#include "graphda/textio.hpp"

namespace fs = std::filesystem;

namespace graphda {

namespace {

template <typename Fn>
auto with_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

fs::path ensure_dir(const fs::path& dir) {
  fs::create_directories(dir);
  return dir;
}

bool fresh(const ExperimentConfig& cfg, const fs::path& artifact) {
  return !cfg.force && fs::exists(artifact);
}

SparseMatrix train_interaction_matrix(const InteractionLog& train) {
  std::vector<std::tuple<int, int, double>> entries;
  entries.reserve(train.interactions.size());
  for (const auto& rec : train.interactions) {
    entries.emplace_back(rec.user, rec.item, 1.0);
  }
  return from_coo(train.n_users, train.n_items, std::move(entries));
}

MetricsReport report_for_checkpoint(const ExperimentConfig& cfg,
                                    const SplitDataset& split,
                                    const std::string& checkpoint_path,
                                    const std::string& csv_name,
                                    RankOutcome* test_outcome = nullptr) {
  Checkpoint ckpt = read_checkpoint(checkpoint_path);
  RankOutcome val = rank_phase(ckpt.table, split, Phase::validation);
  RankOutcome test = rank_phase(ckpt.table, split, Phase::test);
  MetricsReport val_report = grouped_report(val, split.train_count,
                                            cfg.group_boundaries, cfg.cutoffs);
  MetricsReport test_report = grouped_report(
      test, split.train_count, cfg.group_boundaries, cfg.cutoffs);
  const fs::path report_dir = ensure_dir(fs::path(cfg.out_dir) / "report");
  write_report_csv((report_dir / csv_name).string(),
                   {{"validation", val_report}, {"test", test_report}});
  if (test_outcome) *test_outcome = std::move(test);
  return test_report;
}

}  // namespace

SplitDataset stage_prepare(const ExperimentConfig& cfg) {
  return with_stage("prepare", [&] {
    const fs::path manifest = fs::path(cfg.out_dir) / "split.txt";
    if (fresh(cfg, manifest)) return read_split_manifest(manifest.string());
    auto raw = load_interactions(cfg.data_path, cfg.format);
    SplitDataset split = chronological_split(build_log(raw, cfg.k_core));
    ensure_dir(cfg.out_dir);
    write_split_manifest(split, manifest.string());
    return split;
  });
}

std::string stage_pretrain(const ExperimentConfig& cfg,
                           const SplitDataset& split) {
  return with_stage("pretrain", [&] {
    const fs::path dir = fs::path(cfg.out_dir) / "pretrain";
    const fs::path checkpoint = dir / "checkpoint.txt";
    if (fresh(cfg, checkpoint)) return checkpoint.string();

    SparseMatrix r = train_interaction_matrix(split.train);
    SparseMatrix l = normalize_sym(build_adjacency(r));
    TrainResult result = train(split, l, cfg.pretrain);
    ensure_dir(dir);
    write_checkpoint(result.output, cfg.pretrain.seed, checkpoint.string());
    write_trace_csv(result.trace, (dir / "trace.csv").string());
    return checkpoint.string();
  });
}

std::string stage_enhance(const ExperimentConfig& cfg,
                          const SplitDataset& split,
                          const std::string& checkpoint_path) {
  return with_stage("enhance", [&] {
    const fs::path dir = fs::path(cfg.out_dir) / "enhance";
    const fs::path adjacency = dir / "adjacency.coo";
    if (fresh(cfg, adjacency)) return adjacency.string();

    const int n_users = split.train.n_users;
    const int n_items = split.train.n_items;
    Checkpoint ckpt = read_checkpoint(checkpoint_path);
    if (ckpt.table.n_rows != n_users + n_items) {
      throw std::runtime_error("checkpoint does not cover users+items");
    }

    TopKResult user_side =
        topk_user_items(ckpt.table, n_users, n_items, cfg.enhance.u_k);
    TopKResult item_side =
        topk_item_users(ckpt.table, n_users, n_items, cfg.enhance.i_k);
    SparseMatrix r_tilde =
        union_enhanced_r(user_side, item_side, n_users, n_items);

    SparseMatrix w_uu = empty_matrix(n_users, n_users);
    SparseMatrix w_ii = empty_matrix(n_items, n_items);
    if (cfg.variant == Variant::graphda) {
      w_uu = topk_correlations(ckpt.table, n_users, n_items, Side::user,
                               cfg.enhance.uu_k);
      w_ii = topk_correlations(ckpt.table, n_users, n_items, Side::item,
                               cfg.enhance.ii_k);
    }
    SparseMatrix a_tilde = assemble(r_tilde, w_uu, w_ii, cfg.variant);

    ensure_dir(dir);
    write_coo(r_tilde, (dir / "r_tilde.coo").string());
    if (cfg.variant == Variant::graphda) {
      write_coo(w_uu, (dir / "w_uu.coo").string());
      write_coo(w_ii, (dir / "w_ii.coo").string());
    }
    write_coo(a_tilde, adjacency.string());
    write_enhance_manifest({cfg.enhance, checkpoint_path, cfg.variant},
                           (dir / "manifest.txt").string());
    return adjacency.string();
  });
}

std::string stage_retrain(const ExperimentConfig& cfg,
                          const SplitDataset& split,
                          const std::string& adjacency_path) {
  return with_stage("retrain", [&] {
    const fs::path dir = fs::path(cfg.out_dir) / "retrain";
    const fs::path checkpoint = dir / "checkpoint.txt";
    if (fresh(cfg, checkpoint)) return checkpoint.string();

    SparseMatrix l = normalize_sym(read_coo(adjacency_path));
    TrainResult result = train(split, l, cfg.retrain);
    ensure_dir(dir);
    write_checkpoint(result.output, cfg.retrain.seed, checkpoint.string());
    write_trace_csv(result.trace, (dir / "trace.csv").string());
    return checkpoint.string();
  });
}

MetricsReport stage_evaluate(const ExperimentConfig& cfg,
                             const SplitDataset& split,
                             const std::string& checkpoint_path) {
  return with_stage("evaluate", [&] {
    return report_for_checkpoint(cfg, split, checkpoint_path, "metrics.csv");
  });
}

MetricsReport run(const ExperimentConfig& cfg) {
  SplitDataset split = stage_prepare(cfg);
  std::string pretrain_ckpt = stage_pretrain(cfg, split);
  if (cfg.variant == Variant::baseline) {
    return stage_evaluate(cfg, split, pretrain_ckpt);
  }

  std::string adjacency = stage_enhance(cfg, split, pretrain_ckpt);
  std::string retrain_ckpt = stage_retrain(cfg, split, adjacency);
  MetricsReport report = stage_evaluate(cfg, split, retrain_ckpt);

  // Side-by-side per-group view against the pre-trained model.
  with_stage("report", [&] {
    MetricsReport baseline = report_for_checkpoint(
        cfg, split, pretrain_ckpt, "baseline_metrics.csv");
    const fs::path report_dir = ensure_dir(fs::path(cfg.out_dir) / "report");
    write_group_comparison_tsv((report_dir / "groups_compare.tsv").string(),
                               baseline, report);
    return 0;
  });
  return report;
}

SweepResult sweep(const ExperimentConfig& cfg) {
  if (cfg.grids.empty()) {
    throw StageError("sweep", "no parameter grid configured");
  }
  if (cfg.variant == Variant::baseline) {
    throw StageError("sweep", "sweep needs an enhanced variant");
  }
  auto grid_or = [](const std::vector<int>& grid, int fallback) {
    return grid.empty() ? std::vector<int>{fallback} : grid;
  };
  const auto u_grid = grid_or(cfg.grids.u_k, cfg.enhance.u_k);
  const auto i_grid = grid_or(cfg.grids.i_k, cfg.enhance.i_k);
  const auto uu_grid = grid_or(cfg.grids.uu_k, cfg.enhance.uu_k);
  const auto ii_grid = grid_or(cfg.grids.ii_k, cfg.enhance.ii_k);

  SplitDataset split = stage_prepare(cfg);
  const std::string pretrain_ckpt = stage_pretrain(cfg, split);

  SweepResult result;
  std::vector<std::string> cell_dirs;
  for (int u_k : u_grid) {
    for (int i_k : i_grid) {
      for (int uu_k : uu_grid) {
        for (int ii_k : ii_grid) {
          SweepCell cell;
          cell.config = {u_k, i_k, uu_k, ii_k};
          ExperimentConfig cell_cfg = cfg;
          cell_cfg.enhance = cell.config;
          const std::string name = "u" + std::to_string(u_k) + "_i" +
                                   std::to_string(i_k) + "_uu" +
                                   std::to_string(uu_k) + "_ii" +
                                   std::to_string(ii_k);
          cell_cfg.out_dir =
              (fs::path(cfg.out_dir) / "sweep" / name).string();
          cell_dirs.push_back(cell_cfg.out_dir);
          try {
            std::string adjacency =
                stage_enhance(cell_cfg, split, pretrain_ckpt);
            std::string ckpt = stage_retrain(cell_cfg, split, adjacency);
            Checkpoint loaded = read_checkpoint(ckpt);
            MetricsReport val =
                evaluate(loaded.table, split, Phase::validation, {20});
            cell.val_ndcg = val.ndcg.at(20);
            cell.ok = true;
          } catch (const std::exception& e) {
            cell.error = e.what();
          }
          result.cells.push_back(std::move(cell));
        }
      }
    }
  }

  for (std::size_t k = 0; k < result.cells.size(); ++k) {
    if (!result.cells[k].ok) continue;
    if (result.best_index < 0 ||
        result.cells[k].val_ndcg >
            result.cells[result.best_index].val_ndcg) {
      result.best_index = static_cast<int>(k);
    }
  }

  const fs::path sweep_dir = ensure_dir(fs::path(cfg.out_dir) / "sweep");
  {
    std::ofstream out(sweep_dir / "results.csv");
    if (!out) throw StageError("sweep", "cannot write results.csv");
    out << "u_k,i_k,uu_k,ii_k,val_ndcg20,status,best\n";
    for (std::size_t k = 0; k < result.cells.size(); ++k) {
      const SweepCell& cell = result.cells[k];
      out << cell.config.u_k << ',' << cell.config.i_k << ','
          << cell.config.uu_k << ',' << cell.config.ii_k << ',';
      if (cell.ok) {
        out << format_f64(cell.val_ndcg) << ",ok,";
      } else {
        out << "na,failed,";
      }
      out << (static_cast<int>(k) == result.best_index ? 1 : 0) << '\n';
    }
  }
  if (result.best_index < 0) {
    throw StageError("sweep", "every cell failed");
  }

  // Test metrics only for the winning cell.
  ExperimentConfig best_cfg = cfg;
  best_cfg.enhance = result.cells[result.best_index].config;
  best_cfg.out_dir = cell_dirs[result.best_index];
  const std::string best_ckpt =
      (fs::path(best_cfg.out_dir) / "retrain" / "checkpoint.txt").string();
  result.best_test = stage_evaluate(best_cfg, split, best_ckpt);
  return result;
}

}  // namespace graphda
