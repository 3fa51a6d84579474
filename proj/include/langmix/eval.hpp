#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "langmix/errors.hpp"
#include "langmix/record.hpp"

namespace langmix {

// Grading for boxed-answer benchmarks. Only the first \boxed{...} after the
// final </think> counts; later boxes are ignored even when they contradict
// it, and a correct value in plain text is still incorrect.

inline constexpr std::string_view kEvalSystemPrompt =
    "문제 풀이를 마친 후, 최종 정답을 다음 형식으로 작성해 주세요: \\boxed{N}.";

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

// Balanced-brace contents of the first \boxed{...} in the post-think region.
// An unbalanced first box is unparsable: no fallback to later boxes.
inline std::optional<std::string> extract_boxed(
    std::string_view completion, std::string_view think_close = "</think>") {
  size_t region_start = 0;
  size_t close = completion.rfind(think_close);
  if (close != std::string_view::npos) {
    region_start = close + think_close.size();
  }
  std::string_view region = completion.substr(region_start);

  constexpr std::string_view marker = "\\boxed{";
  size_t pos = region.find(marker);
  if (pos == std::string_view::npos) return std::nullopt;

  size_t i = pos + marker.size();
  int depth = 1;
  size_t start = i;
  while (i < region.size()) {
    char c = region[i];
    if (c == '{') {
      depth++;
    } else if (c == '}') {
      depth--;
      if (depth == 0) return std::string(region.substr(start, i - start));
    }
    i++;
  }
  return std::nullopt;  // unbalanced
}

// ---------------------------------------------------------------------------
// Answer equivalence
// ---------------------------------------------------------------------------

namespace eval_detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

inline bool braces_balanced_span(std::string_view s) {
  int depth = 0;
  for (size_t i = 0; i < s.size(); i++) {
    if (s[i] == '{') depth++;
    if (s[i] == '}') {
      depth--;
      if (depth < 0) return false;
      if (depth == 0 && i + 1 < s.size()) return false;  // closes early
    }
  }
  return depth == 0;
}

// Peels whitespace and formatting shells: $...$, \(...\), \[...\],
// \text{...}, \mathrm{...}, \boxed{...}, and redundant outer braces.
inline std::string strip_wrappers(std::string_view s) {
  std::string_view cur = trim(s);
  bool changed = true;
  while (changed && !cur.empty()) {
    changed = false;
    if (cur.size() >= 2 && cur.front() == '$' && cur.back() == '$') {
      cur = trim(cur.substr(1, cur.size() - 2));
      changed = true;
      continue;
    }
    auto peel_pair = [&](std::string_view open, std::string_view close) {
      if (cur.size() >= open.size() + close.size() &&
          cur.substr(0, open.size()) == open &&
          cur.substr(cur.size() - close.size()) == close) {
        cur = trim(cur.substr(open.size(),
                              cur.size() - open.size() - close.size()));
        return true;
      }
      return false;
    };
    if (peel_pair("\\(", "\\)") || peel_pair("\\[", "\\]")) {
      changed = true;
      continue;
    }
    for (std::string_view cmd : {"\\text{", "\\mathrm{", "\\boxed{"}) {
      if (cur.size() > cmd.size() && cur.substr(0, cmd.size()) == cmd &&
          cur.back() == '}' &&
          braces_balanced_span(cur.substr(cmd.size() - 1))) {
        cur = trim(cur.substr(cmd.size(), cur.size() - cmd.size() - 1));
        changed = true;
        break;
      }
    }
    if (changed) continue;
    if (cur.size() >= 2 && cur.front() == '{' && cur.back() == '}' &&
        braces_balanced_span(cur)) {
      cur = trim(cur.substr(1, cur.size() - 2));
      changed = true;
    }
  }
  return std::string(cur);
}

struct Rational {
  __int128 num = 0;
  __int128 den = 1;
};

inline std::optional<__int128> parse_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  bool neg = false;
  if (s.front() == '+' || s.front() == '-') {
    neg = s.front() == '-';
    s.remove_prefix(1);
  }
  if (s.empty() || s.size() > 18) return std::nullopt;
  __int128 v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return neg ? -v : v;
}

// Exact rational forms: integers, finite decimals, A/B, and \frac{A}{B}
// (\dfrac, \tfrac). Anything longer than 18 digits falls back to string
// comparison upstream.
inline std::optional<Rational> parse_rational(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  bool neg = false;
  if (s.front() == '+' || s.front() == '-') {
    neg = s.front() == '-';
    s.remove_prefix(1);
    s = trim(s);
  }
  auto signed_r = [&](Rational r) {
    if (neg) r.num = -r.num;
    return r;
  };

  for (std::string_view frac : {"\\frac", "\\dfrac", "\\tfrac"}) {
    if (s.size() > frac.size() && s.substr(0, frac.size()) == frac) {
      std::string_view rest = trim(s.substr(frac.size()));
      if (rest.size() < 4 || rest.front() != '{') return std::nullopt;
      size_t close1 = rest.find('}');
      if (close1 == std::string_view::npos) return std::nullopt;
      std::string_view a = rest.substr(1, close1 - 1);
      std::string_view tail = trim(rest.substr(close1 + 1));
      if (tail.size() < 2 || tail.front() != '{' || tail.back() != '}') {
        return std::nullopt;
      }
      std::string_view b = tail.substr(1, tail.size() - 2);
      auto na = parse_int(a);
      auto nb = parse_int(b);
      if (!na || !nb || *nb == 0) return std::nullopt;
      Rational r{*na, *nb};
      if (r.den < 0) {
        r.num = -r.num;
        r.den = -r.den;
      }
      return signed_r(r);
    }
  }

  if (size_t slash = s.find('/'); slash != std::string_view::npos) {
    auto na = parse_int(s.substr(0, slash));
    auto nb = parse_int(s.substr(slash + 1));
    if (!na || !nb || *nb == 0) return std::nullopt;
    Rational r{*na, *nb};
    if (r.den < 0) {
      r.num = -r.num;
      r.den = -r.den;
    }
    return signed_r(r);
  }

  if (size_t dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view whole = s.substr(0, dot);
    std::string_view frac = s.substr(dot + 1);
    if (whole.empty() && frac.empty()) return std::nullopt;
    if (frac.size() > 18 || whole.size() > 18) return std::nullopt;
    auto nw = whole.empty() ? std::optional<__int128>(0) : parse_int(whole);
    if (!nw || *nw < 0) return std::nullopt;  // sign already consumed
    __int128 scale = 1;
    __int128 f = 0;
    for (char c : frac) {
      if (c < '0' || c > '9') return std::nullopt;
      f = f * 10 + (c - '0');
      scale *= 10;
    }
    return signed_r(Rational{*nw * scale + f, scale});
  }

  auto n = parse_int(s);
  if (!n) return std::nullopt;
  if (*n < 0) return std::nullopt;  // sign already consumed
  return signed_r(Rational{*n, 1});
}

inline bool rational_eq(const Rational& a, const Rational& b) {
  return a.num * b.den == b.num * a.den;
}

inline std::string squash_spaces(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
    } else {
      if (pending) out.push_back(' ');
      pending = false;
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace eval_detail

// Equivalence after normalization: exact rationals for numeric strings
// (1/2 == 0.5 == \frac{1}{2}), case-insensitive single-letter choice labels,
// plain normalized equality otherwise.
inline bool grade(std::string_view extracted, std::string_view gold) {
  std::string e = eval_detail::strip_wrappers(extracted);
  std::string g = eval_detail::strip_wrappers(gold);

  auto re = eval_detail::parse_rational(e);
  auto rg = eval_detail::parse_rational(g);
  if (re && rg) return eval_detail::rational_eq(*re, *rg);

  if (e.size() == 1 && g.size() == 1 &&
      std::isalpha(static_cast<unsigned char>(e[0])) &&
      std::isalpha(static_cast<unsigned char>(g[0]))) {
    return std::tolower(static_cast<unsigned char>(e[0])) ==
           std::tolower(static_cast<unsigned char>(g[0]));
  }

  return eval_detail::squash_spaces(e) == eval_detail::squash_spaces(g);
}

// ---------------------------------------------------------------------------
// Outcomes and scoring
// ---------------------------------------------------------------------------

// Plug-in seam: external verifiers cover more LaTeX forms than the built-in
// grader; swap one in per run without touching extraction or scoring.
using Grader = std::function<bool(std::string_view extracted, std::string_view gold)>;

struct EvalOutcome {
  std::string item_id;
  std::string raw_completion;
  std::optional<std::string> extracted;
  bool parse_ok = false;
  bool correct = false;
  Termination termination = Termination::stopped;
};

inline EvalOutcome judge_completion(const CompletionRecord& rec,
                                    const Grader& grader = grade,
                                    std::string_view think_close = "</think>") {
  EvalOutcome out;
  out.item_id = rec.item_id;
  out.raw_completion = rec.completion;
  out.termination = rec.termination;
  if (rec.termination == Termination::runtime_failure) {
    return out;  // must be replaced by a retry before scoring
  }
  out.extracted = extract_boxed(rec.completion, think_close);
  out.parse_ok = out.extracted.has_value();
  out.correct = out.parse_ok && grader(*out.extracted, rec.gold);
  return out;
}

// Folds primary/retry completion rows into one outcome per item. A runtime
// failure takes its retry's outcome; without a retry it stays marked
// runtime_failure and score_run refuses the run.
inline std::vector<EvalOutcome> collate_run(
    const std::vector<CompletionRecord>& records,
    const Grader& grader = grade,
    std::string_view think_close = "</think>") {
  std::vector<std::string> order;
  std::map<std::string, const CompletionRecord*> primaries;
  std::map<std::string, const CompletionRecord*> retries;
  for (const auto& rec : records) {
    auto& slot = rec.retry ? retries : primaries;
    if (slot.count(rec.item_id)) {
      throw DataError("duplicate " + std::string(rec.retry ? "retry" : "primary") +
                      " completion for item " + rec.item_id);
    }
    if (!primaries.count(rec.item_id) && !retries.count(rec.item_id)) {
      order.push_back(rec.item_id);
    }
    slot[rec.item_id] = &rec;
  }

  std::vector<EvalOutcome> outcomes;
  for (const auto& id : order) {
    auto pit = primaries.find(id);
    if (pit == primaries.end()) {
      throw DataError("retry without primary completion for item " + id);
    }
    const CompletionRecord* chosen = pit->second;
    if (chosen->termination == Termination::runtime_failure) {
      auto rit = retries.find(id);
      if (rit != retries.end()) chosen = rit->second;
    }
    outcomes.push_back(judge_completion(*chosen, grader, think_close));
  }
  return outcomes;
}

// Accuracy = correct / total. Missing, unparsable, and truncated-unparsed
// completions all stay in the denominator as incorrect.
inline double score_run(const std::vector<EvalOutcome>& outcomes) {
  if (outcomes.empty()) throw DataError("cannot score an empty run");
  size_t correct = 0;
  for (const auto& o : outcomes) {
    if (o.termination == Termination::runtime_failure) {
      throw DataError("item " + o.item_id +
                      " ended in runtime_failure with no retry recorded");
    }
    if (o.correct) correct++;
  }
  return static_cast<double>(correct) / static_cast<double>(outcomes.size());
}

struct RunAggregate {
  std::string benchmark;
  size_t n_runs = 0;
  std::vector<double> per_run_accuracy;
  double mean = 0.0;
  std::optional<double> standard_error;  // absent at n = 1
};

// Mean and sample standard error (n-1 denominator) over independent trials.
inline RunAggregate aggregate(std::string benchmark,
                              const std::vector<double>& runs) {
  if (runs.empty()) throw DataError("aggregate: empty run list");
  RunAggregate agg;
  agg.benchmark = std::move(benchmark);
  agg.n_runs = runs.size();
  agg.per_run_accuracy = runs;
  double sum = 0.0;
  for (double r : runs) sum += r;
  agg.mean = sum / static_cast<double>(runs.size());
  if (runs.size() > 1) {
    double ss = 0.0;
    for (double r : runs) ss += (r - agg.mean) * (r - agg.mean);
    double sd = std::sqrt(ss / static_cast<double>(runs.size() - 1));
    agg.standard_error = sd / std::sqrt(static_cast<double>(runs.size()));
  }
  return agg;
}

}  // namespace langmix
