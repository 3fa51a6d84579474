#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "langmix/errors.hpp"
#include "langmix/hash.hpp"
#include "langmix/text_metrics.hpp"
#include "langmix/unicode.hpp"

namespace langmix {

using json = nlohmann::json;

enum class Category { OpenThought, Daily, Medical, Code, Exams, Science };

inline const char* to_string(Category c) {
  switch (c) {
    case Category::OpenThought: return "OpenThought";
    case Category::Daily: return "Daily";
    case Category::Medical: return "Medical";
    case Category::Code: return "Code";
    case Category::Exams: return "Exams";
    case Category::Science: return "Science";
  }
  return "?";
}

inline Category category_from_string(std::string_view s) {
  if (s == "OpenThought") return Category::OpenThought;
  if (s == "Daily") return Category::Daily;
  if (s == "Medical") return Category::Medical;
  if (s == "Code") return Category::Code;
  if (s == "Exams") return Category::Exams;
  if (s == "Science") return Category::Science;
  throw DataError("unknown category: " + std::string(s));
}

inline const std::vector<Category>& all_categories() {
  static const std::vector<Category> cats = {
      Category::OpenThought, Category::Daily, Category::Medical,
      Category::Code,        Category::Exams, Category::Science};
  return cats;
}

// License classes: A crawl+redistribute, B crawl only, C prohibited.
enum class License { A, B, C };

inline const char* to_string(License l) {
  switch (l) {
    case License::A: return "A";
    case License::B: return "B";
    case License::C: return "C";
  }
  return "?";
}

inline License license_from_string(std::string_view s) {
  if (s == "A") return License::A;
  if (s == "B") return License::B;
  if (s == "C") return License::C;
  throw DataError("unknown license class: " + std::string(s));
}

enum class Route { train_and_redistribute, train_only, exclude };

inline const char* to_string(Route r) {
  switch (r) {
    case Route::train_and_redistribute: return "train_and_redistribute";
    case Route::train_only: return "train_only";
    case Route::exclude: return "exclude";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// PromptRecord
// ---------------------------------------------------------------------------

struct PromptRecord {
  std::string id;          // 128-bit content digest, hex
  std::string source_id;
  Category category = Category::Daily;
  License license = License::C;
  std::string text;        // NFC-normalized at ingest
  uint64_t char_len = 0;   // code points of text
  double hangul_ratio = 0.0;
  bool redistributable = false;
};

// Content id over the canonical (source_id, NFC text) pair. The separator
// byte keeps ("ab","c") and ("a","bc") from colliding.
inline std::string record_id(std::string_view source_id,
                             std::string_view nfc_text) {
  std::string canon;
  canon.reserve(source_id.size() + 1 + nfc_text.size());
  canon.append(source_id);
  canon.push_back('\x1e');
  canon.append(nfc_text);
  return to_hex(murmur3_128(canon));
}

inline PromptRecord make_prompt_record(std::string source_id, Category category,
                                       License license, std::string_view text) {
  PromptRecord r;
  r.text = nfc(text);
  r.id = record_id(source_id, r.text);
  r.source_id = std::move(source_id);
  r.category = category;
  r.license = license;
  r.char_len = code_point_count(r.text);
  r.hangul_ratio = langmix::hangul_ratio(r.text);
  r.redistributable = (license == License::A);
  return r;
}

inline Route triage_license(const PromptRecord& r) {
  switch (r.license) {
    case License::A: return Route::train_and_redistribute;
    case License::B: return Route::train_only;
    case License::C: return Route::exclude;
  }
  return Route::exclude;
}

inline void to_json(json& j, const PromptRecord& r) {
  j = json{{"id", r.id},
           {"source_id", r.source_id},
           {"category", to_string(r.category)},
           {"license", to_string(r.license)},
           {"text", r.text},
           {"char_len", r.char_len},
           {"hangul_ratio", r.hangul_ratio},
           {"redistributable", r.redistributable}};
}

inline void from_json(const json& j, PromptRecord& r) {
  j.at("id").get_to(r.id);
  j.at("source_id").get_to(r.source_id);
  r.category = category_from_string(j.at("category").get<std::string>());
  r.license = license_from_string(j.at("license").get<std::string>());
  j.at("text").get_to(r.text);
  j.at("char_len").get_to(r.char_len);
  j.at("hangul_ratio").get_to(r.hangul_ratio);
  j.at("redistributable").get_to(r.redistributable);
}

// Pre-canonicalization input: metrics and id not yet computed.
struct RawPrompt {
  std::string source_id;
  Category category = Category::Daily;
  License license = License::C;
  std::string text;
};

inline void from_json(const json& j, RawPrompt& r) {
  j.at("source_id").get_to(r.source_id);
  r.category = category_from_string(j.at("category").get<std::string>());
  r.license = license_from_string(j.at("license").get<std::string>());
  j.at("text").get_to(r.text);
}

// ---------------------------------------------------------------------------
// TraceRecord
// ---------------------------------------------------------------------------

struct GateCheck {
  std::string gate;
  bool pass = true;
  std::string detail;
};

inline void to_json(json& j, const GateCheck& c) {
  j = json{{"gate", c.gate}, {"pass", c.pass}, {"detail", c.detail}};
}

inline void from_json(const json& j, GateCheck& c) {
  j.at("gate").get_to(c.gate);
  j.at("pass").get_to(c.pass);
  j.at("detail").get_to(c.detail);
}

struct TraceRecord {
  std::string prompt_id;
  std::string raw;
  std::optional<std::string> think;
  std::optional<std::string> answer;
  double think_hangul_ratio = 0.0;
  double answer_hangul_ratio = 0.0;
  uint64_t token_count = 0;
  std::vector<GateCheck> gate_verdicts;  // at most one entry per gate name

  bool segmented() const { return think.has_value() && answer.has_value(); }
};

inline void to_json(json& j, const TraceRecord& t) {
  j = json{{"prompt_id", t.prompt_id},
           {"raw", t.raw},
           {"think_hangul_ratio", t.think_hangul_ratio},
           {"answer_hangul_ratio", t.answer_hangul_ratio},
           {"token_count", t.token_count},
           {"gate_verdicts", t.gate_verdicts}};
  if (t.think) j["think"] = *t.think;
  if (t.answer) j["answer"] = *t.answer;
}

inline void from_json(const json& j, TraceRecord& t) {
  j.at("prompt_id").get_to(t.prompt_id);
  j.at("raw").get_to(t.raw);
  if (j.contains("think")) t.think = j.at("think").get<std::string>();
  if (j.contains("answer")) t.answer = j.at("answer").get<std::string>();
  j.at("think_hangul_ratio").get_to(t.think_hangul_ratio);
  j.at("answer_hangul_ratio").get_to(t.answer_hangul_ratio);
  j.at("token_count").get_to(t.token_count);
  if (j.contains("gate_verdicts")) {
    t.gate_verdicts = j.at("gate_verdicts").get<std::vector<GateCheck>>();
  }
}

// Minimal generated-output form: completions not yet segmented or gated.
struct RawTrace {
  std::string prompt_id;
  std::string raw;
};

inline void from_json(const json& j, RawTrace& t) {
  j.at("prompt_id").get_to(t.prompt_id);
  j.at("raw").get_to(t.raw);
}

// ---------------------------------------------------------------------------
// ExamItem
// ---------------------------------------------------------------------------

enum class Lineage { original, style_augmented, option_augmented };

inline const char* to_string(Lineage l) {
  switch (l) {
    case Lineage::original: return "original";
    case Lineage::style_augmented: return "style_augmented";
    case Lineage::option_augmented: return "option_augmented";
  }
  return "?";
}

inline Lineage lineage_from_string(std::string_view s) {
  if (s == "original") return Lineage::original;
  if (s == "style_augmented") return Lineage::style_augmented;
  if (s == "option_augmented") return Lineage::option_augmented;
  throw DataError("unknown lineage: " + std::string(s));
}

struct ExamItem {
  std::string id;
  std::string question;
  std::vector<std::string> options;
  size_t gold_index = 0;
  Lineage lineage = Lineage::original;
  std::vector<std::string> parent_ids;

  const std::string& gold() const { return options.at(gold_index); }

  void validate() const {
    if (options.size() < 2 || options.size() > 10) {
      throw DataError("exam item " + id + ": option count " +
                      std::to_string(options.size()) + " outside [2,10]");
    }
    if (gold_index >= options.size()) {
      throw DataError("exam item " + id + ": gold_index out of range");
    }
    for (size_t i = 0; i < options.size(); i++) {
      for (size_t k = i + 1; k < options.size(); k++) {
        if (collapse_normalize(options[i]) == collapse_normalize(options[k])) {
          throw DataError("exam item " + id + ": duplicate options " +
                          std::to_string(i) + "/" + std::to_string(k));
        }
      }
    }
  }
};

inline std::string exam_item_id(std::string_view question,
                                const std::vector<std::string>& options) {
  std::string canon(question);
  for (const auto& o : options) {
    canon.push_back('\x1e');
    canon.append(o);
  }
  return to_hex(murmur3_128(canon));
}

inline void to_json(json& j, const ExamItem& e) {
  j = json{{"id", e.id},
           {"question", e.question},
           {"options", e.options},
           {"gold_index", e.gold_index},
           {"lineage", to_string(e.lineage)},
           {"parent_ids", e.parent_ids}};
}

inline void from_json(const json& j, ExamItem& e) {
  j.at("id").get_to(e.id);
  j.at("question").get_to(e.question);
  j.at("options").get_to(e.options);
  j.at("gold_index").get_to(e.gold_index);
  e.lineage = lineage_from_string(j.at("lineage").get<std::string>());
  if (j.contains("parent_ids")) {
    e.parent_ids = j.at("parent_ids").get<std::vector<std::string>>();
  }
  e.validate();
}

// ---------------------------------------------------------------------------
// Benchmark + evaluation records
// ---------------------------------------------------------------------------

// Benchmark items share the corpus record shape plus benchmark_name; text is
// the matching surface (question + options concatenated upstream).
struct BenchmarkRecord {
  std::string id;
  std::string benchmark_name;
  std::string text;
};

inline void to_json(json& j, const BenchmarkRecord& b) {
  j = json{{"id", b.id},
           {"benchmark_name", b.benchmark_name},
           {"text", b.text}};
}

inline void from_json(const json& j, BenchmarkRecord& b) {
  j.at("id").get_to(b.id);
  j.at("benchmark_name").get_to(b.benchmark_name);
  j.at("text").get_to(b.text);
}

enum class Termination { stopped, max_tokens, runtime_failure };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::stopped: return "stopped";
    case Termination::max_tokens: return "max_tokens";
    case Termination::runtime_failure: return "runtime_failure";
  }
  return "?";
}

inline Termination termination_from_string(std::string_view s) {
  if (s == "stopped") return Termination::stopped;
  if (s == "max_tokens") return Termination::max_tokens;
  if (s == "runtime_failure") return Termination::runtime_failure;
  throw DataError("unknown termination: " + std::string(s));
}

// One model completion to grade. `retry` marks the re-run issued after a
// runtime failure of the primary attempt.
struct CompletionRecord {
  std::string item_id;
  std::string gold;
  std::string completion;
  Termination termination = Termination::stopped;
  bool retry = false;
};

inline void to_json(json& j, const CompletionRecord& c) {
  j = json{{"item_id", c.item_id},
           {"gold", c.gold},
           {"completion", c.completion},
           {"termination", to_string(c.termination)},
           {"retry", c.retry}};
}

inline void from_json(const json& j, CompletionRecord& c) {
  j.at("item_id").get_to(c.item_id);
  j.at("gold").get_to(c.gold);
  j.at("completion").get_to(c.completion);
  c.termination = termination_from_string(j.at("termination").get<std::string>());
  c.retry = j.value("retry", false);
}

}  // namespace langmix
