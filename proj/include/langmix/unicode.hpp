#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>

#include "langmix/errors.hpp"

namespace langmix {

inline constexpr char32_t kReplacementChar = 0xFFFD;

// Decodes the code point starting at byte offset i, advancing i past it.
// Invalid sequences yield U+FFFD and consume a single byte.
inline char32_t decode_utf8_at(std::string_view s, size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    i += 1;
    return b0;
  }
  auto cont = [&](size_t k) {
    return i + k < s.size() &&
           (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  auto cb = [&](size_t k) {
    return static_cast<char32_t>(static_cast<unsigned char>(s[i + k]) & 0x3F);
  };
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    char32_t cp = (char32_t(b0 & 0x1F) << 6) | cb(1);
    i += 2;
    return cp < 0x80 ? kReplacementChar : cp;
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    char32_t cp = (char32_t(b0 & 0x0F) << 12) | (cb(1) << 6) | cb(2);
    i += 3;
    if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF)) return kReplacementChar;
    return cp;
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    char32_t cp =
        (char32_t(b0 & 0x07) << 18) | (cb(1) << 12) | (cb(2) << 6) | cb(3);
    i += 4;
    return (cp < 0x10000 || cp > 0x10FFFF) ? kReplacementChar : cp;
  }
  i += 1;
  return kReplacementChar;
}

template <typename Fn>
void for_each_code_point(std::string_view s, Fn&& fn) {
  size_t i = 0;
  while (i < s.size()) fn(decode_utf8_at(s, i));
}

inline std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  for_each_code_point(s, [&](char32_t cp) { out.push_back(cp); });
  return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode_utf8(const std::vector<char32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append_utf8(out, cp);
  return out;
}

inline size_t code_point_count(std::string_view s) {
  size_t n = 0;
  for_each_code_point(s, [&](char32_t) { n++; });
  return n;
}

// Hangul blocks: Syllables, Jamo, Compatibility Jamo.
inline bool is_hangul(char32_t cp) {
  return (cp >= 0xAC00 && cp <= 0xD7A3) || (cp >= 0x1100 && cp <= 0x11FF) ||
         (cp >= 0x3130 && cp <= 0x318F);
}

// Letter-class denominator for script ratios: Unicode alphabetic plus the
// Hangul blocks above, so the Hangul numerator is always a subset.
inline bool is_ratio_letter(char32_t cp) {
  return u_isalpha(static_cast<UChar32>(cp)) || is_hangul(cp);
}

inline bool is_space_cp(char32_t cp) {
  return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0;
}

inline bool is_punct_cp(char32_t cp) {
  return u_ispunct(static_cast<UChar32>(cp)) != 0;
}

// Canonical composition (NFC), ICU-backed. Applied once at ingest; everything
// downstream assumes composed Hangul.
inline std::string nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || norm == nullptr) {
    throw DataError("unicode: NFC normalizer unavailable");
  }
  std::string out;
  icu::StringByteSink<std::string> sink(&out);
  norm->normalizeUTF8(0, icu::StringPiece(s.data(), static_cast<int>(s.size())),
                      sink, nullptr, status);
  if (U_FAILURE(status)) throw DataError("unicode: NFC normalization failed");
  return out;
}

// ASCII-range lowercasing; multibyte UTF-8 units are untouched.
inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace langmix
