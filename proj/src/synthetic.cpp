#include <algorithm>
#include <fstream>
#include <random>
#include <stdexcept>
#include <vector>

#include "graphda/pipeline.hpp"

namespace graphda {

namespace {

// Contiguous block ranges: block b owns indices [b*n/n_blocks, (b+1)*n/n_blocks).
int block_of(int index, int n, int n_blocks) {
  return static_cast<int>(static_cast<std::int64_t>(index) * n_blocks / n);
}

std::pair<int, int> block_range(int b, int n, int n_blocks) {
  return {static_cast<int>(static_cast<std::int64_t>(b) * n / n_blocks),
          static_cast<int>(static_cast<std::int64_t>(b + 1) * n / n_blocks)};
}

}  // namespace

InteractionLog gen_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n_users < 1 || cfg.n_items < 1) {
    throw std::invalid_argument("need at least one user and one item");
  }
  if (cfg.n_blocks < 1 || cfg.n_blocks > cfg.n_users ||
      cfg.n_blocks > cfg.n_items) {
    throw std::invalid_argument("every block needs at least one user and item");
  }
  if (cfg.noise_rate < 0.0 || cfg.noise_rate > 1.0) {
    throw std::invalid_argument("noise_rate must be in [0, 1]");
  }
  if (cfg.min_interactions < 1) {
    throw std::invalid_argument("min_interactions must be >= 1");
  }

  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution crosses(cfg.noise_rate);
  // Geometric tail above the floor, tuned so the mean hits the target.
  const double extra = std::max(0.0, cfg.mean_interactions -
                                         cfg.min_interactions);
  std::geometric_distribution<int> tail(1.0 / (extra + 1.0));

  std::vector<RawInteraction> raw;
  std::int64_t clock = 0;
  for (int u = 0; u < cfg.n_users; ++u) {
    const int b = block_of(u, cfg.n_users, cfg.n_blocks);
    auto [lo, hi] = block_range(b, cfg.n_items, cfg.n_blocks);
    const int own_size = hi - lo;
    if (cfg.min_interactions > own_size) {
      throw std::runtime_error(
          "block " + std::to_string(b) + " has " + std::to_string(own_size) +
          " items, smaller than the requested " +
          std::to_string(cfg.min_interactions) + " distinct interactions");
    }
    // Cap at the block size so the own-block draws always stay feasible.
    const int count =
        std::min(own_size, cfg.min_interactions + tail(rng));

    std::vector<char> chosen(cfg.n_items, 0);
    for (int d = 0; d < count; ++d) {
      const bool cross = cfg.n_blocks > 1 && crosses(rng);
      std::vector<int> available;
      if (cross) {
        for (int i = 0; i < cfg.n_items; ++i) {
          if ((i < lo || i >= hi) && !chosen[i]) available.push_back(i);
        }
      } else {
        for (int i = lo; i < hi; ++i) {
          if (!chosen[i]) available.push_back(i);
        }
      }
      if (available.empty()) {
        throw std::runtime_error("no items left to draw for user " +
                                 std::to_string(u));
      }
      std::uniform_int_distribution<std::size_t> pick(0,
                                                      available.size() - 1);
      const int item = available[pick(rng)];
      chosen[item] = 1;
      raw.push_back(
          {"u" + std::to_string(u), "i" + std::to_string(item), clock++});
    }
  }
  // build_log compacts away any item that happened to never be drawn, which
  // keeps the id-coverage invariant intact.
  return build_log(raw, 1);
}

void write_interactions_tsv(const InteractionLog& log,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& rec : log.interactions) {
    out << log.user_keys[rec.user] << '\t' << log.item_keys[rec.item] << '\t'
        << rec.timestamp << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace graphda
