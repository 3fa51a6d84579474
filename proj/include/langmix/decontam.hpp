#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "langmix/errors.hpp"
#include "langmix/hash.hpp"
#include "langmix/record.hpp"
#include "langmix/text_metrics.hpp"

namespace langmix {

// Training records sharing any word n-gram (default n = 13) with a benchmark
// item are removed. Fingerprints are 64-bit, so a collision can only cause an
// extra drop, never a miss.

// Normalized word n-gram fingerprints. Texts shorter than n tokens emit
// nothing.
inline std::unordered_set<uint64_t> shingles(std::string_view text, size_t n) {
  std::unordered_set<uint64_t> out;
  auto tokens = normalized_tokens(text);
  if (tokens.size() < n) return out;
  for (size_t i = 0; i + n <= tokens.size(); i++) {
    std::string window;
    for (size_t k = 0; k < n; k++) {
      if (k > 0) window.push_back('\x1f');
      window.append(tokens[i + k]);
    }
    out.insert(fingerprint64(window));
  }
  return out;
}

class ShingleIndex {
 public:
  explicit ShingleIndex(size_t n = 13) : n_(n) {
    if (n_ < 2) throw ConfigError("shingle index: n must be >= 2");
  }

  size_t n() const { return n_; }
  size_t fingerprint_count() const { return source_map_.size(); }
  size_t item_count() const { return item_count_; }

  void add_item(const std::string& item_id, std::string_view text) {
    item_count_++;
    for (uint64_t fp : shingles(text, n_)) {
      auto& ids = source_map_[fp];
      if (std::find(ids.begin(), ids.end(), item_id) == ids.end()) {
        ids.push_back(item_id);
      }
    }
  }

  const std::vector<std::string>* lookup(uint64_t fp) const {
    auto it = source_map_.find(fp);
    return it == source_map_.end() ? nullptr : &it->second;
  }

 private:
  size_t n_;
  size_t item_count_ = 0;
  std::unordered_map<uint64_t, std::vector<std::string>> source_map_;
};

// Index over every item of every configured benchmark. An empty benchmark
// set is refused: decontaminating against nothing silently passes everything.
inline ShingleIndex build_benchmark_index(
    const std::vector<BenchmarkRecord>& items, size_t n = 13) {
  if (items.empty()) {
    throw DataError("decontamination refused: benchmark set is empty");
  }
  ShingleIndex index(n);
  for (const auto& item : items) {
    index.add_item(item.benchmark_name + "/" + item.id, item.text);
  }
  return index;
}

struct DecontamVerdict {
  bool keep = true;
  std::vector<std::string> matched_item_ids;  // sorted, unique
};

// Checks each text surface of a record (prompt text, answer text, ...)
// independently; windows never span surface boundaries.
inline DecontamVerdict decontaminate(
    const std::vector<std::string_view>& surfaces, const ShingleIndex& index) {
  DecontamVerdict v;
  for (std::string_view text : surfaces) {
    for (uint64_t fp : shingles(text, index.n())) {
      if (const auto* ids = index.lookup(fp)) {
        v.matched_item_ids.insert(v.matched_item_ids.end(), ids->begin(),
                                  ids->end());
      }
    }
  }
  if (!v.matched_item_ids.empty()) {
    v.keep = false;
    std::sort(v.matched_item_ids.begin(), v.matched_item_ids.end());
    v.matched_item_ids.erase(
        std::unique(v.matched_item_ids.begin(), v.matched_item_ids.end()),
        v.matched_item_ids.end());
  }
  return v;
}

}  // namespace langmix
