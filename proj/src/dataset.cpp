#include "graphda/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "graphda/textio.hpp"

namespace graphda {

FileFormat parse_format(const std::string& name) {
  if (name == "tsv") return FileFormat::tsv;
  if (name == "csv") return FileFormat::csv;
  throw std::invalid_argument("unknown file format: " + name);
}

std::vector<RawInteraction> load_interactions(const std::string& path,
                                              FileFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const char delim = format == FileFormat::tsv ? '\t' : ',';

  std::vector<RawInteraction> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_fields(line, delim);
    if (fields.size() != 3) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": expected 3 fields, got " +
                               std::to_string(fields.size()));
    }
    auto ts = parse_i64(fields[2]);
    if (!ts) {
      // A non-numeric timestamp on the first row is a header.
      if (line_no == 1) continue;
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": unparsable timestamp '" +
                               std::string(fields[2]) + "'");
    }
    out.push_back({std::string(fields[0]), std::string(fields[1]), *ts});
  }
  if (out.empty()) throw std::runtime_error("empty file: " + path);
  return out;
}

InteractionLog build_log(const std::vector<RawInteraction>& raw, int k_core) {
  if (k_core < 1) throw std::invalid_argument("k_core must be >= 1");

  // Dedup on (user,item): keep the earliest timestamp but remember the first
  // occurrence position, which fixes the id assignment order.
  struct Entry {
    std::string user, item;
    std::int64_t timestamp;
  };
  std::vector<Entry> deduped;
  std::unordered_map<std::string, std::size_t> seen;  // "user\0item" -> pos
  deduped.reserve(raw.size());
  for (const auto& r : raw) {
    std::string key = r.user_key + '\0' + r.item_key;
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(std::move(key), deduped.size());
      deduped.push_back({r.user_key, r.item_key, r.timestamp});
    } else {
      Entry& e = deduped[it->second];
      e.timestamp = std::min(e.timestamp, r.timestamp);
    }
  }

  // User-side k-core: repeat until stable. Removing a user never changes
  // another user's item count, but the fixed-point loop keeps the contract
  // explicit.
  std::unordered_map<std::string, int> user_items;
  for (const auto& e : deduped) ++user_items[e.user];
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = user_items.begin(); it != user_items.end();) {
      if (it->second < k_core) {
        it = user_items.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }

  InteractionLog log;
  for (const auto& e : deduped) {
    if (!user_items.count(e.user)) continue;
    auto [uit, u_new] = log.user_ids.try_emplace(e.user, log.n_users);
    if (u_new) {
      log.user_keys.push_back(e.user);
      ++log.n_users;
    }
    auto [iit, i_new] = log.item_ids.try_emplace(e.item, log.n_items);
    if (i_new) {
      log.item_keys.push_back(e.item);
      ++log.n_items;
    }
    log.interactions.push_back({uit->second, iit->second, e.timestamp});
  }
  if (log.interactions.empty()) {
    throw std::runtime_error("no interactions left after k-core filtering");
  }
  return log;
}

SplitDataset chronological_split(const InteractionLog& log) {
  std::vector<std::vector<InteractionRecord>> per_user(log.n_users);
  for (const auto& rec : log.interactions) per_user[rec.user].push_back(rec);

  SplitDataset split;
  split.train.n_users = log.n_users;
  split.train.n_items = log.n_items;
  split.train.user_keys = log.user_keys;
  split.train.item_keys = log.item_keys;
  split.train.user_ids = log.user_ids;
  split.train.item_ids = log.item_ids;
  split.validation.resize(log.n_users);
  split.test.resize(log.n_users);
  split.train_count.resize(log.n_users);

  for (int u = 0; u < log.n_users; ++u) {
    auto& recs = per_user[u];
    if (recs.size() < 3) {
      throw std::runtime_error(
          "user '" + log.user_keys[u] + "' has " +
          std::to_string(recs.size()) +
          " interactions; leave-one-out needs at least 3");
    }
    std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
      return std::tie(a.timestamp, a.item) < std::tie(b.timestamp, b.item);
    });
    split.test[u] = recs.back().item;
    split.validation[u] = recs[recs.size() - 2].item;
    split.train_count[u] = static_cast<int>(recs.size()) - 2;
    for (std::size_t k = 0; k + 2 < recs.size(); ++k) {
      split.train.interactions.push_back(recs[k]);
    }
  }
  return split;
}

void write_split_manifest(const SplitDataset& split, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "users=" << split.train.n_users << " items=" << split.train.n_items
      << "\n";
  out << "[train]\n";
  for (const auto& rec : split.train.interactions) {
    out << rec.user << '\t' << rec.item << '\n';
  }
  out << "[validation]\n";
  for (int u = 0; u < split.train.n_users; ++u) {
    out << u << '\t' << split.validation[u] << '\n';
  }
  out << "[test]\n";
  for (int u = 0; u < split.train.n_users; ++u) {
    out << u << '\t' << split.test[u] << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

SplitDataset read_split_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  auto fail = [&](const std::string& what) {
    return std::runtime_error(path + ": " + what);
  };

  std::string line;
  if (!std::getline(in, line)) throw fail("missing header");
  strip_cr(line);
  int n_users = -1, n_items = -1;
  {
    auto parts = split_fields(line, ' ');
    for (auto part : parts) {
      if (part.starts_with("users=")) {
        if (auto v = parse_i64(part.substr(6))) n_users = static_cast<int>(*v);
      } else if (part.starts_with("items=")) {
        if (auto v = parse_i64(part.substr(6))) n_items = static_cast<int>(*v);
      }
    }
  }
  if (n_users < 0 || n_items < 0) throw fail("malformed header: " + line);

  SplitDataset split;
  split.train.n_users = n_users;
  split.train.n_items = n_items;
  split.validation.assign(n_users, -1);
  split.test.assign(n_users, -1);
  split.train_count.assign(n_users, 0);
  // Keys are not part of the manifest; synthesize id strings so the log
  // stays self-consistent.
  for (int u = 0; u < n_users; ++u) {
    split.train.user_keys.push_back(std::to_string(u));
    split.train.user_ids.emplace(split.train.user_keys.back(), u);
  }
  for (int i = 0; i < n_items; ++i) {
    split.train.item_keys.push_back(std::to_string(i));
    split.train.item_ids.emplace(split.train.item_keys.back(), i);
  }

  enum class Section { none, train, validation, test };
  Section section = Section::none;
  std::int64_t order = 0;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    if (line == "[train]") {
      section = Section::train;
      continue;
    }
    if (line == "[validation]") {
      section = Section::validation;
      continue;
    }
    if (line == "[test]") {
      section = Section::test;
      continue;
    }
    auto fields = split_fields(line, '\t');
    if (fields.size() != 2) throw fail("malformed row: " + line);
    auto u = parse_i64(fields[0]);
    auto i = parse_i64(fields[1]);
    if (!u || !i || *u < 0 || *u >= n_users || *i < 0 || *i >= n_items) {
      throw fail("ids out of range: " + line);
    }
    int user = static_cast<int>(*u), item = static_cast<int>(*i);
    switch (section) {
      case Section::train:
        // Line order stands in for timestamps; it matches the per-user
        // chronological order the manifest was written in.
        split.train.interactions.push_back({user, item, order++});
        ++split.train_count[user];
        break;
      case Section::validation:
        split.validation[user] = item;
        break;
      case Section::test:
        split.test[user] = item;
        break;
      case Section::none:
        throw fail("row before any section: " + line);
    }
  }
  for (int u = 0; u < n_users; ++u) {
    if (split.validation[u] < 0 || split.test[u] < 0) {
      throw fail("user " + std::to_string(u) + " missing validation/test row");
    }
  }
  return split;
}

}  // namespace graphda
