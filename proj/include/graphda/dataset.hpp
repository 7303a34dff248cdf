#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace graphda {

// One row of an implicit-feedback file, keys still opaque strings.
struct RawInteraction {
  std::string user_key;
  std::string item_key;
  std::int64_t timestamp = 0;
};

struct InteractionRecord {
  int user = 0;
  int item = 0;
  std::int64_t timestamp = 0;
};

// Deduplicated interaction log with contiguous integer ids. Immutable once
// built; safe to share across threads.
struct InteractionLog {
  int n_users = 0;
  int n_items = 0;
  std::vector<InteractionRecord> interactions;
  std::vector<std::string> user_keys;  // id -> original key
  std::vector<std::string> item_keys;
  std::unordered_map<std::string, int> user_ids;  // original key -> id
  std::unordered_map<std::string, int> item_ids;
};

// Leave-one-out split: per user, the chronologically last item goes to test,
// the second last to validation, the rest to train. The train log keeps the
// full log's id space (an item may survive only in val/test positions).
struct SplitDataset {
  InteractionLog train;
  std::vector<int> validation;  // user_id -> held-out item
  std::vector<int> test;
  std::vector<int> train_count;  // user_id -> #train interactions
};

enum class FileFormat { tsv, csv };

FileFormat parse_format(const std::string& name);

// Reads rows of (user_key, item_key, timestamp). A 3-field first row whose
// timestamp does not parse is treated as a header. Duplicates are kept.
std::vector<RawInteraction> load_interactions(const std::string& path,
                                              FileFormat format);

// Collapses duplicate (user,item) pairs keeping the earliest timestamp, then
// iteratively removes users with fewer than k_core distinct items until the
// set is stable. Items left with no interactions are dropped. Surviving
// users/items get contiguous ids in order of first appearance.
InteractionLog build_log(const std::vector<RawInteraction>& raw, int k_core);

// Ties on timestamp break by ascending item id. Every user needs >= 3
// interactions. Train interactions come out sorted by (user, time, item).
SplitDataset chronological_split(const InteractionLog& log);

void write_split_manifest(const SplitDataset& split, const std::string& path);
SplitDataset read_split_manifest(const std::string& path);

}  // namespace graphda
