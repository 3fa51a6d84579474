#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <unordered_map>

#include "langmix/bm25.hpp"
#include "langmix/errors.hpp"
#include "langmix/hash.hpp"
#include "langmix/record.hpp"
#include "langmix/text_metrics.hpp"

namespace langmix {

// Robustness-oriented exam item variants: short stylistic directives attached
// to the question, and distractor options merged in from BM25-retrieved
// neighbor items. Negation-cued items are left alone to avoid semantic flips.

// ---------------------------------------------------------------------------
// Style templates
// ---------------------------------------------------------------------------

enum class StylePosition { prepend, append };

struct StyleTemplate {
  std::string text;
  StylePosition position = StylePosition::append;
};

// One template per line: directive text, TAB, "prepend" or "append".
inline std::vector<StyleTemplate> load_style_templates(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open style template file: " + path);
  std::vector<StyleTemplate> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    line_no++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 'text<TAB>prepend|append'");
    }
    StyleTemplate t;
    t.text = line.substr(0, tab);
    std::string pos = line.substr(tab + 1);
    if (pos == "prepend") {
      t.position = StylePosition::prepend;
    } else if (pos == "append") {
      t.position = StylePosition::append;
    } else {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": unknown position '" + pos + "'");
    }
    out.push_back(std::move(t));
  }
  if (out.empty()) throw ConfigError("style template file is empty: " + path);
  return out;
}

// Directive attachment only: options and gold stay untouched. Deterministic
// per (item id, seed).
inline ExamItem style_augment(const ExamItem& item,
                              const std::vector<StyleTemplate>& templates,
                              uint64_t seed) {
  if (templates.empty()) throw ConfigError("style template pool is empty");
  SplitMix64 rng(derive_seed(seed, "style:" + item.id));
  const StyleTemplate& t = templates[rng.next_below(templates.size())];
  ExamItem out = item;
  if (t.position == StylePosition::prepend) {
    out.question = t.text + "\n" + item.question;
  } else {
    out.question = item.question + "\n" + t.text;
  }
  out.lineage = Lineage::style_augmented;
  out.parent_ids = {item.id};
  out.id = exam_item_id(out.question, out.options);
  return out;
}

// ---------------------------------------------------------------------------
// Negation cues
// ---------------------------------------------------------------------------

// Korean "which is NOT ..." phrasings plus common English negation markers.
inline const std::vector<std::string>& default_negation_cues() {
  static const std::vector<std::string> cues = {
      "아닌", "않은", "않는", "없는", "틀린", "옳지 않", "거짓",
      "not", "incorrect", "false", "except", "wrong"};
  return cues;
}

inline std::vector<std::string> load_negation_cues(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open negation lexicon: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  if (out.empty()) throw ConfigError("negation lexicon is empty: " + path);
  return out;
}

// Substring membership after NFC + ASCII lowercasing.
inline bool has_negation_cue(std::string_view text,
                             const std::vector<std::string>& lexicon) {
  if (text.empty()) return false;
  std::string norm = ascii_lower(nfc(text));
  for (const auto& cue : lexicon) {
    if (norm.find(ascii_lower(nfc(cue))) != std::string::npos) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Option merging
// ---------------------------------------------------------------------------

struct OptionMergeConfig {
  size_t cap = 10;
  size_t retrieval_depth = 5;
  double jaccard_threshold = 0.9;
  uint64_t seed = 0;
};

struct OptionMergeResult {
  ExamItem item;
  bool augmented = false;   // false: no usable distractors, item unchanged
  size_t added = 0;
};

namespace detail {

inline double token_jaccard(const std::vector<std::string>& a,
                            const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::unordered_set<std::string> sa(a.begin(), a.end());
  std::unordered_set<std::string> sb(b.begin(), b.end());
  size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  size_t uni = sa.size() + sb.size() - inter;
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

}  // namespace detail

// True when `candidate` near-duplicates any accepted option: exact match on
// the collapsed normal form, or whitespace-token Jaccard at/above threshold.
inline bool is_near_duplicate_option(std::string_view candidate,
                                     const std::vector<std::string>& accepted,
                                     double jaccard_threshold = 0.9) {
  std::string cn = collapse_normalize(candidate);
  auto ct = whitespace_tokens(cn);
  std::vector<std::string> ctok(ct.begin(), ct.end());
  for (const auto& opt : accepted) {
    std::string on = collapse_normalize(opt);
    if (cn == on) return true;
    auto ot = whitespace_tokens(on);
    std::vector<std::string> otok(ot.begin(), ot.end());
    if (detail::token_jaccard(ctok, otok) >= jaccard_threshold) return true;
  }
  return false;
}

// Id-indexed exam pool with its retrieval index built once.
struct ExamPool {
  std::vector<ExamItem> items;
  std::unordered_map<std::string, size_t> by_id;
  Bm25Index index;

  static ExamPool build(std::vector<ExamItem> items, double k1 = 1.5,
                        double b = 0.75) {
    ExamPool pool;
    pool.items = std::move(items);
    pool.index = Bm25Index(k1, b);
    for (size_t i = 0; i < pool.items.size(); i++) {
      pool.by_id.emplace(pool.items[i].id, i);
      pool.index.add_document(pool.items[i].id, pool.items[i].question);
    }
    pool.index.finalize();
    return pool;
  }

  const ExamItem* find(const std::string& id) const {
    auto it = by_id.find(id);
    return it == by_id.end() ? nullptr : &items[it->second];
  }
};

// Merges distractors from retrieved neighbor items into `item`. The caller
// guarantees `item` itself is negation-free; neighbors with cues are skipped
// entirely, as are individual cue-bearing options. The original gold string
// survives every merge and the final list is reshuffled with a recorded seed.
inline OptionMergeResult option_merge(
    const ExamItem& item, const ExamPool& pool,
    const std::vector<std::string>& negation_lexicon,
    const OptionMergeConfig& cfg = {}) {
  OptionMergeResult result{item, false, 0};
  // +1 so retrieval depth survives the self-hit, filtered below.
  auto hits = pool.index.top_k(item.question, cfg.retrieval_depth + 1);
  std::vector<const ExamItem*> neighbors;
  for (const auto& hit : hits) {
    if (hit.id == item.id) continue;
    if (neighbors.size() >= cfg.retrieval_depth) break;
    if (const ExamItem* n = pool.find(hit.id)) neighbors.push_back(n);
  }

  std::vector<std::string> merged = item.options;
  std::vector<std::string> parents = {item.id};
  for (const ExamItem* neighbor : neighbors) {
    if (merged.size() >= cfg.cap) break;
    if (has_negation_cue(neighbor->question, negation_lexicon)) continue;
    size_t added_here = 0;
    for (size_t i = 0; i < neighbor->options.size(); i++) {
      if (merged.size() >= cfg.cap) break;
      if (i == neighbor->gold_index) continue;  // distractors only
      const std::string& cand = neighbor->options[i];
      if (has_negation_cue(cand, negation_lexicon)) continue;
      if (is_near_duplicate_option(cand, merged, cfg.jaccard_threshold)) continue;
      merged.push_back(cand);
      added_here++;
    }
    if (added_here > 0) parents.push_back(neighbor->id);
    result.added += added_here;
  }

  if (result.added == 0) return result;  // pass through unchanged, flagged

  const std::string gold = item.gold();
  SplitMix64 rng(derive_seed(cfg.seed, "merge:" + item.id));
  seeded_shuffle(merged, rng);

  ExamItem out = item;
  out.options = std::move(merged);
  auto it = std::find(out.options.begin(), out.options.end(), gold);
  out.gold_index = static_cast<size_t>(it - out.options.begin());
  out.lineage = Lineage::option_augmented;
  out.parent_ids = std::move(parents);
  out.id = exam_item_id(out.question, out.options);
  result.item = std::move(out);
  result.augmented = true;
  return result;
}

}  // namespace langmix
