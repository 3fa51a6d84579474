#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "langmix/errors.hpp"
#include "langmix/hash.hpp"
#include "langmix/record.hpp"

namespace langmix {

// Composes the training set from per-category pools: exact quotas or ratio
// weights resolved against a total, uniform seeded sampling without
// replacement, optional per-entry up-sampling, and a final global shuffle.

struct MixEntry {
  Category category = Category::Daily;
  std::optional<size_t> quota;
  std::optional<double> weight;
  bool allow_upsampling = false;
};

struct MixSpec {
  std::vector<MixEntry> entries;
  uint64_t seed = 0;
  std::optional<size_t> total;  // required in ratio mode

  bool ratio_mode() const {
    return !entries.empty() && entries.front().weight.has_value();
  }

  std::vector<std::string> validate() const {
    std::vector<std::string> errors;
    if (entries.empty()) {
      errors.push_back("mix: no entries");
      return errors;
    }
    size_t quotas = 0;
    size_t weights = 0;
    for (const auto& e : entries) {
      if (e.quota) quotas++;
      if (e.weight) {
        weights++;
        if (*e.weight <= 0.0) {
          errors.push_back(std::string("mix: ratio weight for ") +
                           to_string(e.category) + " must be positive");
        }
      }
      if (e.quota && e.weight) {
        errors.push_back(std::string("mix: entry for ") + to_string(e.category) +
                         " has both quota and weight");
      }
    }
    if (quotas != entries.size() && weights != entries.size()) {
      errors.push_back("mix: entries must be all-quota or all-ratio");
    }
    if (weights == entries.size() && !total) {
      errors.push_back("mix: ratio mode requires a total");
    }
    return errors;
  }
};

inline void from_json(const json& j, MixEntry& e) {
  e.category = category_from_string(j.at("category").get<std::string>());
  if (j.contains("quota")) e.quota = j.at("quota").get<size_t>();
  if (j.contains("weight")) e.weight = j.at("weight").get<double>();
  e.allow_upsampling = j.value("allow_upsampling", false);
}

inline void to_json(json& j, const MixEntry& e) {
  j = json{{"category", to_string(e.category)},
           {"allow_upsampling", e.allow_upsampling}};
  if (e.quota) j["quota"] = *e.quota;
  if (e.weight) j["weight"] = *e.weight;
}

// Largest-remainder apportionment: floor the exact shares, then hand the
// leftover units to the largest fractional remainders (entry order on ties).
// The result always sums exactly to total.
inline std::vector<size_t> largest_remainder_quotas(
    const std::vector<double>& weights, size_t total) {
  double sum = 0.0;
  for (double w : weights) {
    if (w <= 0.0) throw ConfigError("ratio weights must be positive");
    sum += w;
  }
  std::vector<size_t> quotas(weights.size());
  std::vector<std::pair<double, size_t>> remainders;
  size_t assigned = 0;
  for (size_t i = 0; i < weights.size(); i++) {
    double exact = weights[i] / sum * static_cast<double>(total);
    quotas[i] = static_cast<size_t>(std::floor(exact));
    assigned += quotas[i];
    remainders.push_back({exact - std::floor(exact), i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t k = 0; k < total - assigned; k++) {
    quotas[remainders[k % remainders.size()].second]++;
  }
  return quotas;
}

struct CategoryOutcome {
  Category category = Category::Daily;
  size_t requested = 0;
  size_t realized = 0;
  bool shortfall = false;  // pool smaller than quota, up-sampling off
  size_t upsampled = 0;    // duplicates added to reach the quota
};

struct CompositionReport {
  std::vector<CategoryOutcome> entries;
  size_t total_realized = 0;
};

inline void to_json(json& j, const CategoryOutcome& o) {
  j = json{{"category", to_string(o.category)},
           {"requested", o.requested},
           {"realized", o.realized},
           {"shortfall", o.shortfall},
           {"upsampled", o.upsampled}};
}

inline void to_json(json& j, const CompositionReport& r) {
  j = json{{"entries", r.entries}, {"total_realized", r.total_realized}};
}

template <typename Record>
struct MixResult {
  std::vector<Record> records;
  CompositionReport report;
};

// Multiple entries for one category draw from the remaining pool, so nothing
// repeats across entries unless up-sampling is on. Selection is a partial
// Fisher-Yates over each pool's index space, then one global seeded shuffle.
template <typename Record>
MixResult<Record> mix(const std::map<Category, std::vector<Record>>& pools,
                      const MixSpec& spec) {
  auto errors = spec.validate();
  if (!errors.empty()) throw ConfigError(errors.front());
  for (const auto& e : spec.entries) {
    if (!pools.count(e.category)) {
      throw DataError(std::string("mix: missing pool for category ") +
                      to_string(e.category));
    }
  }

  std::vector<size_t> quotas(spec.entries.size());
  if (spec.ratio_mode()) {
    std::vector<double> weights;
    for (const auto& e : spec.entries) weights.push_back(*e.weight);
    quotas = largest_remainder_quotas(weights, *spec.total);
  } else {
    for (size_t i = 0; i < spec.entries.size(); i++) {
      quotas[i] = *spec.entries[i].quota;
    }
  }

  // Per-category index pools shared across entries of the same category.
  std::map<Category, std::vector<size_t>> remaining;
  for (const auto& [cat, pool] : pools) {
    std::vector<size_t> idx(pool.size());
    for (size_t i = 0; i < pool.size(); i++) idx[i] = i;
    remaining[cat] = std::move(idx);
  }

  MixResult<Record> result;
  for (size_t ei = 0; ei < spec.entries.size(); ei++) {
    const MixEntry& entry = spec.entries[ei];
    const auto& pool = pools.at(entry.category);
    auto& idx = remaining[entry.category];
    size_t quota = quotas[ei];

    SplitMix64 rng(derive_seed(spec.seed, std::string("mix:") +
                                              to_string(entry.category) + ":" +
                                              std::to_string(ei)));
    CategoryOutcome outcome;
    outcome.category = entry.category;
    outcome.requested = quota;

    size_t take = std::min(quota, idx.size());
    std::vector<size_t> picked;
    picked.reserve(quota);
    for (size_t k = 0; k < take; k++) {
      size_t j = k + static_cast<size_t>(rng.next_below(idx.size() - k));
      std::swap(idx[k], idx[j]);
      picked.push_back(idx[k]);
    }
    idx.erase(idx.begin(), idx.begin() + static_cast<long>(take));

    if (take < quota) {
      if (entry.allow_upsampling && take > 0) {
        size_t need = quota - take;
        for (size_t k = 0; k < need; k++) {
          picked.push_back(picked[k % take]);
        }
        outcome.upsampled = need;
      } else {
        outcome.shortfall = true;
      }
    }

    outcome.realized = picked.size();
    for (size_t p : picked) result.records.push_back(pool[p]);
    result.report.entries.push_back(outcome);
  }

  SplitMix64 shuffle_rng(derive_seed(spec.seed, "mix:global-shuffle"));
  seeded_shuffle(result.records, shuffle_rng);
  result.report.total_realized = result.records.size();
  return result;
}

// ---------------------------------------------------------------------------
// Category statistics
// ---------------------------------------------------------------------------

struct CategoryStats {
  size_t count = 0;
  // Power-of-two length buckets keyed by inclusive upper bound.
  std::map<uint64_t, size_t> char_len_hist;
  std::map<uint64_t, size_t> token_hist;
};

inline uint64_t stats_bucket(uint64_t v) {
  uint64_t bound = 16;
  while (v >= bound && bound < (1ULL << 32)) bound <<= 1;
  return bound - 1;
}

inline std::map<Category, CategoryStats> category_stats(
    const std::map<Category, std::vector<PromptRecord>>& pools) {
  std::map<Category, CategoryStats> out;
  for (const auto& [cat, pool] : pools) {
    CategoryStats s;
    s.count = pool.size();
    for (const auto& r : pool) {
      s.char_len_hist[stats_bucket(r.char_len)]++;
      s.token_hist[stats_bucket(whitespace_tokens(r.text).size())]++;
    }
    out[cat] = s;
  }
  return out;
}

}  // namespace langmix
