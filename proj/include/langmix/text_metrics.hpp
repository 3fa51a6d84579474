#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "langmix/errors.hpp"
#include "langmix/unicode.hpp"

namespace langmix {

// ---------------------------------------------------------------------------
// Script ratio
// ---------------------------------------------------------------------------

// Fraction of letter-class code points that fall in the Hangul blocks.
// Digits, punctuation, whitespace and symbols are outside the denominator so
// code-heavy mixed prompts are not penalized. Empty denominator -> 0.
// Pure bag-of-characters statistic: no internal normalization.
inline double hangul_ratio(std::string_view text) {
  size_t hangul = 0;
  size_t letters = 0;
  for_each_code_point(text, [&](char32_t cp) {
    if (is_ratio_letter(cp)) {
      letters++;
      if (is_hangul(cp)) hangul++;
    }
  });
  if (letters == 0) return 0.0;
  return static_cast<double>(hangul) / static_cast<double>(letters);
}

// ---------------------------------------------------------------------------
// Tokenization helpers
// ---------------------------------------------------------------------------

// Maximal non-whitespace runs (Unicode White_Space). Views into `text`.
inline std::vector<std::string_view> whitespace_tokens(std::string_view text) {
  std::vector<std::string_view> tokens;
  size_t i = 0;
  size_t start = 0;
  bool in_token = false;
  while (i < text.size()) {
    size_t next = i;
    char32_t cp = decode_utf8_at(text, next);
    if (is_space_cp(cp)) {
      if (in_token) {
        tokens.push_back(text.substr(start, i - start));
        in_token = false;
      }
    } else if (!in_token) {
      start = i;
      in_token = true;
    }
    i = next;
  }
  if (in_token) tokens.push_back(text.substr(start));
  return tokens;
}

// NFC + ASCII lowercase + punctuation replaced with spaces, split on
// whitespace. Shared by BM25 document tokenization and shingle extraction.
inline std::vector<std::string> normalized_tokens(std::string_view text) {
  std::string composed = nfc(text);
  std::string cleaned;
  cleaned.reserve(composed.size());
  for_each_code_point(composed, [&](char32_t cp) {
    if (is_punct_cp(cp)) {
      cleaned.push_back(' ');
    } else if (cp >= 'A' && cp <= 'Z') {
      cleaned.push_back(static_cast<char>(cp - 'A' + 'a'));
    } else {
      append_utf8(cleaned, cp);
    }
  });
  std::vector<std::string> out;
  for (std::string_view tok : whitespace_tokens(cleaned)) out.emplace_back(tok);
  return out;
}

// NFC + ASCII lowercase + whitespace runs collapsed to single spaces,
// trimmed. Used for near-duplicate option comparison (punctuation kept).
inline std::string collapse_normalize(std::string_view text) {
  std::string composed = ascii_lower(nfc(text));
  std::string out;
  out.reserve(composed.size());
  bool pending_space = false;
  for_each_code_point(composed, [&](char32_t cp) {
    if (is_space_cp(cp)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      append_utf8(out, cp);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Token counting
// ---------------------------------------------------------------------------

enum class TokenizerKind { whitespace, chars, external_vocab };

struct TokenizerSpec {
  std::string name = "whitespace";
  TokenizerKind kind = TokenizerKind::whitespace;
  std::optional<std::string> vocab_ref;
};

// Resolved tokenizer. The external_vocab kind applies greedy longest-match
// against a loaded vocabulary (one token per line); spans not covered by any
// vocabulary entry count one token per code point.
class Tokenizer {
 public:
  static Tokenizer resolve(const TokenizerSpec& spec) {
    Tokenizer t;
    t.kind_ = spec.kind;
    if (spec.kind == TokenizerKind::external_vocab) {
      if (!spec.vocab_ref) {
        throw ConfigError("tokenizer '" + spec.name + "': external_vocab requires vocab_ref");
      }
      std::ifstream in(*spec.vocab_ref, std::ios::binary);
      if (!in) {
        throw ConfigError("tokenizer '" + spec.name + "': cannot open vocab file " + *spec.vocab_ref);
      }
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        t.max_token_bytes_ = std::max(t.max_token_bytes_, line.size());
        t.vocab_.insert(line);
      }
      if (t.vocab_.empty()) {
        throw ConfigError("tokenizer '" + spec.name + "': vocab file is empty");
      }
    }
    return t;
  }

  size_t count(std::string_view text) const {
    switch (kind_) {
      case TokenizerKind::whitespace:
        return whitespace_tokens(text).size();
      case TokenizerKind::chars:
        return code_point_count(text);
      case TokenizerKind::external_vocab:
        return count_vocab(text);
    }
    return 0;
  }

 private:
  size_t count_vocab(std::string_view text) const {
    size_t tokens = 0;
    size_t i = 0;
    while (i < text.size()) {
      size_t longest = 0;
      size_t limit = std::min(max_token_bytes_, text.size() - i);
      for (size_t len = limit; len >= 1; len--) {
        if (vocab_.count(std::string(text.substr(i, len)))) {
          longest = len;
          break;
        }
      }
      if (longest > 0) {
        i += longest;
      } else {
        size_t next = i;
        decode_utf8_at(text, next);
        i = next;
      }
      tokens++;
    }
    return tokens;
  }

  TokenizerKind kind_ = TokenizerKind::whitespace;
  std::unordered_set<std::string> vocab_;
  size_t max_token_bytes_ = 0;
};

inline size_t count_tokens(std::string_view text, const TokenizerSpec& spec) {
  return Tokenizer::resolve(spec).count(text);
}

// ---------------------------------------------------------------------------
// Repetition / degeneration
// ---------------------------------------------------------------------------

struct RepetitionReport {
  size_t max_repeat_run = 1;          // consecutive repeats of the phrase below
  std::string repeated_phrase;        // tokens joined by single spaces
  double tail_repetition_fraction = 0.0;  // repeat coverage of the final 25%
};

// Finds the longest whitespace-token phrase (>= min_phrase tokens) repeated
// consecutively at least twice. Ties prefer higher run count, then earliest
// start. Tail coverage marks every token lying inside any such repeat span.
//
// Period-scan over phrase lengths: O(n^2) over the token count, intended for
// per-instance gating, not corpus-wide scans.
inline RepetitionReport repetition_report(std::string_view text,
                                          size_t min_phrase = 3) {
  RepetitionReport report;
  auto token_views = whitespace_tokens(text);
  const size_t n = token_views.size();
  if (n == 0) return report;

  // Intern tokens so the inner loop compares ints.
  std::vector<int> tok(n);
  {
    std::unordered_map<std::string_view, int> interned;
    interned.reserve(n);
    for (size_t i = 0; i < n; i++) {
      auto [it, inserted] =
          interned.emplace(token_views[i], static_cast<int>(interned.size()));
      tok[i] = it->second;
    }
  }

  std::vector<char> covered(n, 0);
  size_t best_len = 0;
  size_t best_run = 0;
  size_t best_start = 0;

  for (size_t p = min_phrase; p * 2 <= n; p++) {
    size_t i = 0;
    const size_t last = n - p;  // eq defined for indices [0, last)
    while (i < last) {
      if (tok[i] != tok[i + p]) {
        i++;
        continue;
      }
      size_t a = i;
      while (i < last && tok[i] == tok[i + p]) i++;
      size_t m = i - a;
      if (m < p) continue;  // span shorter than two full phrases
      size_t run = (m + p) / p;
      std::fill(covered.begin() + static_cast<long>(a),
                covered.begin() + static_cast<long>(a + m + p), 1);
      bool better = p > best_len || (p == best_len && run > best_run) ||
                    (p == best_len && run == best_run && a < best_start);
      if (better) {
        best_len = p;
        best_run = run;
        best_start = a;
      }
    }
  }

  if (best_len > 0) {
    report.max_repeat_run = best_run;
    std::string phrase;
    for (size_t i = 0; i < best_len; i++) {
      if (i > 0) phrase.push_back(' ');
      phrase.append(token_views[best_start + i]);
    }
    report.repeated_phrase = std::move(phrase);
  }

  const size_t tail_start = (3 * n) / 4;
  const size_t tail_len = n - tail_start;
  if (tail_len > 0) {
    size_t hit = 0;
    for (size_t i = tail_start; i < n; i++) hit += covered[i] ? 1 : 0;
    report.tail_repetition_fraction =
        static_cast<double>(hit) / static_cast<double>(tail_len);
  }
  return report;
}

}  // namespace langmix
