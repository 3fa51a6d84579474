#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "langmix/record.hpp"
#include "langmix/text_metrics.hpp"

namespace langmix {

// Accept/reject rules for prompts and teacher traces. Threshold wording is
// strict-exclusion throughout: "below 0.30" drops < 0.30 and keeps 0.30,
// "outside [0.05, 0.20]" keeps both endpoints, "exceeding 16384" keeps 16384.

enum class RatioScope { think_only, full_completion };

struct GateConfig {
  // prompt gates
  double prompt_min_ratio = 0.30;
  uint64_t prompt_min_chars = 50;
  uint64_t prompt_max_chars = 8192;
  // trace gates
  double think_ratio_low = 0.05;
  double think_ratio_high = 0.20;
  double answer_min_ratio = 0.50;
  uint64_t token_cap = 16384;
  TokenizerSpec tokenizer;
  // degeneration thresholds
  size_t repetition_run_threshold = 4;
  double tail_repetition_threshold = 0.5;
  size_t min_phrase_tokens = 3;
  // trace structure
  std::string think_open = "<think>";
  std::string think_close = "</think>";
  bool require_think = true;  // false: whole completion treated as answer
  RatioScope ratio_scope = RatioScope::think_only;

  std::vector<std::string> validate() const {
    std::vector<std::string> errors;
    if (!(think_ratio_low >= 0.0 && think_ratio_low < think_ratio_high &&
          think_ratio_high <= 1.0)) {
      errors.push_back("gates: need 0 <= think_ratio_low < think_ratio_high <= 1 "
                       "(low=" + std::to_string(think_ratio_low) +
                       ", high=" + std::to_string(think_ratio_high) + ")");
    }
    if (prompt_min_chars >= prompt_max_chars) {
      errors.push_back("gates: prompt_min_chars must be < prompt_max_chars");
    }
    if (prompt_min_ratio < 0.0 || prompt_min_ratio > 1.0) {
      errors.push_back("gates: prompt_min_ratio outside [0,1]");
    }
    if (answer_min_ratio < 0.0 || answer_min_ratio > 1.0) {
      errors.push_back("gates: answer_min_ratio outside [0,1]");
    }
    if (tail_repetition_threshold < 0.0 || tail_repetition_threshold > 1.0) {
      errors.push_back("gates: tail_repetition_threshold outside [0,1]");
    }
    if (min_phrase_tokens < 1) {
      errors.push_back("gates: min_phrase_tokens must be >= 1");
    }
    if (think_open.empty() || think_close.empty()) {
      errors.push_back("gates: think delimiters must be non-empty");
    }
    return errors;
  }
};

// Closed drop-reason vocabulary; these strings appear verbatim in manifests.
namespace gate_names {
inline constexpr const char* ratio = "ratio";
inline constexpr const char* too_short = "too_short";
inline constexpr const char* too_long = "too_long";
inline constexpr const char* missing_think = "missing_think";
inline constexpr const char* multiple_think = "multiple_think";
inline constexpr const char* unclosed_think = "unclosed_think";
inline constexpr const char* think_ratio = "think_ratio";
inline constexpr const char* answer_language = "answer_language";
inline constexpr const char* degeneration = "degeneration";
inline constexpr const char* token_cap = "token_cap";
}  // namespace gate_names

namespace detail {
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Prompt gate
// ---------------------------------------------------------------------------

struct PromptVerdict {
  bool keep = true;
  std::string reason;  // primary drop reason; first failing check wins
  std::string detail;
};

inline PromptVerdict gate_prompt(const PromptRecord& r, const GateConfig& cfg) {
  if (r.hangul_ratio < cfg.prompt_min_ratio) {
    return {false, gate_names::ratio, detail::fmt_double(r.hangul_ratio)};
  }
  if (r.char_len < cfg.prompt_min_chars) {
    return {false, gate_names::too_short, std::to_string(r.char_len)};
  }
  if (r.char_len > cfg.prompt_max_chars) {
    return {false, gate_names::too_long, std::to_string(r.char_len)};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Trace segmentation
// ---------------------------------------------------------------------------

enum class SegmentError { none, missing_block, multiple_blocks, unclosed_block };

inline const char* drop_reason(SegmentError e) {
  switch (e) {
    case SegmentError::missing_block: return gate_names::missing_think;
    case SegmentError::multiple_blocks: return gate_names::multiple_think;
    case SegmentError::unclosed_block: return gate_names::unclosed_think;
    case SegmentError::none: break;
  }
  return "";
}

// raw == preamble + open + think + close + answer_gap + answer, exactly.
// answer_gap holds the whitespace trimmed off the answer's front so the
// decomposition stays lossless.
struct Segments {
  std::string preamble;
  std::string think;
  std::string answer_gap;
  std::string answer;
};

struct SegmentResult {
  SegmentError error = SegmentError::none;
  Segments segments;
  bool ok() const { return error == SegmentError::none; }
};

inline SegmentResult segment_trace(std::string_view raw,
                                   std::string_view open_tag = "<think>",
                                   std::string_view close_tag = "</think>") {
  size_t open_pos = raw.find(open_tag);
  if (open_pos == std::string_view::npos) {
    return {SegmentError::missing_block, {}};
  }
  if (raw.find(open_tag, open_pos + open_tag.size()) != std::string_view::npos) {
    return {SegmentError::multiple_blocks, {}};
  }
  size_t close_pos = raw.find(close_tag, open_pos + open_tag.size());
  if (close_pos == std::string_view::npos) {
    return {SegmentError::unclosed_block, {}};
  }
  SegmentResult res;
  res.segments.preamble = std::string(raw.substr(0, open_pos));
  res.segments.think = std::string(
      raw.substr(open_pos + open_tag.size(), close_pos - open_pos - open_tag.size()));
  std::string_view rest = raw.substr(close_pos + close_tag.size());
  size_t trim = 0;
  while (trim < rest.size()) {
    size_t next = trim;
    char32_t cp = decode_utf8_at(rest, next);
    if (!is_space_cp(cp)) break;
    trim = next;
  }
  res.segments.answer_gap = std::string(rest.substr(0, trim));
  res.segments.answer = std::string(rest.substr(trim));
  return res;
}

inline SegmentResult segment_trace(std::string_view raw, const GateConfig& cfg) {
  return segment_trace(raw, cfg.think_open, cfg.think_close);
}

// ---------------------------------------------------------------------------
// Trace gate
// ---------------------------------------------------------------------------

struct TraceVerdict {
  bool keep = true;
  std::vector<GateCheck> checks;  // every gate evaluated, not just the first failure

  std::vector<std::string> failed() const {
    std::vector<std::string> out;
    for (const auto& c : checks) {
      if (!c.pass) out.push_back(c.gate);
    }
    return out;
  }
};

// Runs every trace gate and reports all failures. The trace must carry its
// metrics already (see make_trace_record); repetition is re-measured on raw.
inline TraceVerdict gate_trace(const TraceRecord& trace, const GateConfig& cfg) {
  TraceVerdict v;
  auto check = [&](const char* gate, bool pass, std::string detail) {
    v.checks.push_back({gate, pass, std::move(detail)});
    if (!pass) v.keep = false;
  };

  if (cfg.require_think) {
    if (!trace.segmented()) {
      auto seg = segment_trace(trace.raw, cfg);
      check(drop_reason(seg.error == SegmentError::none
                            ? SegmentError::missing_block
                            : seg.error),
            false, "trace not segmented");
      return v;
    }
    double ratio = cfg.ratio_scope == RatioScope::think_only
                       ? trace.think_hangul_ratio
                       : hangul_ratio(trace.raw);
    check(gate_names::think_ratio,
          ratio >= cfg.think_ratio_low && ratio <= cfg.think_ratio_high,
          detail::fmt_double(ratio));
    check(gate_names::answer_language,
          trace.answer_hangul_ratio >= cfg.answer_min_ratio,
          detail::fmt_double(trace.answer_hangul_ratio));
  } else {
    check(gate_names::answer_language,
          trace.answer_hangul_ratio >= cfg.answer_min_ratio,
          detail::fmt_double(trace.answer_hangul_ratio));
  }

  RepetitionReport rep = repetition_report(trace.raw, cfg.min_phrase_tokens);
  bool degenerate = rep.max_repeat_run >= cfg.repetition_run_threshold ||
                    rep.tail_repetition_fraction >= cfg.tail_repetition_threshold;
  check(gate_names::degeneration, !degenerate,
        "run=" + std::to_string(rep.max_repeat_run) +
            " tail=" + detail::fmt_double(rep.tail_repetition_fraction));

  check(gate_names::token_cap, trace.token_count <= cfg.token_cap,
        std::to_string(trace.token_count));
  return v;
}

// Segments a raw completion, computes its metrics, runs the gates, and
// returns the fully populated record plus the verdict. Segmentation failures
// leave think/answer absent with the structural gate recorded as failed.
inline std::pair<TraceRecord, TraceVerdict> make_trace_record(
    std::string prompt_id, std::string raw, const GateConfig& cfg,
    const Tokenizer& tokenizer) {
  TraceRecord t;
  t.prompt_id = std::move(prompt_id);
  t.raw = std::move(raw);
  t.token_count = tokenizer.count(t.raw);

  if (cfg.require_think) {
    auto seg = segment_trace(t.raw, cfg);
    if (!seg.ok()) {
      TraceVerdict v;
      v.keep = false;
      v.checks.push_back({drop_reason(seg.error), false, ""});
      t.gate_verdicts = v.checks;
      return {std::move(t), std::move(v)};
    }
    t.think = std::move(seg.segments.think);
    t.answer = std::move(seg.segments.answer);
    t.think_hangul_ratio = hangul_ratio(*t.think);
    t.answer_hangul_ratio = hangul_ratio(*t.answer);
  } else {
    t.answer = t.raw;
    t.answer_hangul_ratio = hangul_ratio(*t.answer);
  }

  TraceVerdict v = gate_trace(t, cfg);
  t.gate_verdicts = v.checks;
  return {std::move(t), std::move(v)};
}

}  // namespace langmix
