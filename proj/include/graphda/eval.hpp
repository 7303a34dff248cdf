#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "graphda/dataset.hpp"
#include "graphda/embedding.hpp"

namespace graphda {

enum class Phase { validation, test };

struct GroupMetrics {
  std::string label;
  int n_users = 0;
  // Empty maps mean the bucket had no users (metrics absent, not zero).
  std::map<int, double> hr;
  std::map<int, double> ndcg;
};

struct MetricsReport {
  std::vector<int> cutoffs;
  std::map<int, double> hr;    // cutoff -> value
  std::map<int, double> ndcg;  // cutoff -> value
  int n_users_evaluated = 0;
  std::vector<GroupMetrics> groups;
};

// 1-based rank of the target among non-excluded items: one plus the number
// of items scoring strictly higher, plus equal-scoring items with a smaller
// index. Throws if the target itself is excluded.
int rank_of_target(const EmbeddingTable& e, int n_users, int n_items, int user,
                   int target, const std::vector<int>& exclude_sorted);

// Per-user rank of the phase's held-out item. The candidate pool excludes the
// user's train items, and for the test phase also the validation item.
struct RankOutcome {
  std::vector<int> users;
  std::vector<int> ranks;
};
RankOutcome rank_phase(const EmbeddingTable& e, const SplitDataset& split,
                       Phase phase);

// HR@N = mean [rank <= N]; NDCG@N = mean (rank <= N ? 1/log2(rank+1) : 0).
MetricsReport summarize(const RankOutcome& outcome,
                        const std::vector<int>& cutoffs);

MetricsReport evaluate(const EmbeddingTable& e, const SplitDataset& split,
                       Phase phase, const std::vector<int>& cutoffs);

// Buckets users by train interaction count. Boundaries {b1 < b2 < ...} give
// buckets (-inf,b1), [b1,b2), ..., [bm,inf). Fills overall metrics too.
MetricsReport grouped_report(const RankOutcome& outcome,
                             const std::vector<int>& train_count,
                             const std::vector<int>& boundaries,
                             const std::vector<int>& cutoffs);

// CSV rows (phase, group, n_users, metric, cutoff, value); absent group
// metrics are written as "na".
void write_report_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, MetricsReport>>& phases);

// Plot-ready per-group baseline-vs-variant table (TSV).
void write_group_comparison_tsv(const std::string& path,
                                const MetricsReport& baseline,
                                const MetricsReport& variant);

}  // namespace graphda
