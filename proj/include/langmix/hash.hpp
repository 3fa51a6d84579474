#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace langmix {

// MurmurHash3 x64 128-bit (Austin Appleby, public domain). Used for content
// ids and shingle fingerprints; not suitable for adversarial inputs.
namespace detail {

inline uint64_t rotl64(uint64_t x, int8_t r) { return (x << r) | (x >> (64 - r)); }

inline uint64_t fmix64(uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

inline uint64_t load64(const unsigned char* p) {
  uint64_t v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

}  // namespace detail

struct Hash128 {
  uint64_t hi = 0;
  uint64_t lo = 0;
  friend bool operator==(const Hash128&, const Hash128&) = default;
};

inline Hash128 murmur3_128(const void* data, size_t len, uint64_t seed = 0) {
  const auto* blocks = static_cast<const unsigned char*>(data);
  const size_t nblocks = len / 16;

  uint64_t h1 = seed;
  uint64_t h2 = seed;
  const uint64_t c1 = 0x87c37b91114253d5ULL;
  const uint64_t c2 = 0x4cf5ad432745937fULL;

  for (size_t i = 0; i < nblocks; i++) {
    uint64_t k1 = detail::load64(blocks + i * 16);
    uint64_t k2 = detail::load64(blocks + i * 16 + 8);

    k1 *= c1; k1 = detail::rotl64(k1, 31); k1 *= c2; h1 ^= k1;
    h1 = detail::rotl64(h1, 27); h1 += h2; h1 = h1 * 5 + 0x52dce729;
    k2 *= c2; k2 = detail::rotl64(k2, 33); k2 *= c1; h2 ^= k2;
    h2 = detail::rotl64(h2, 31); h2 += h1; h2 = h2 * 5 + 0x38495ab5;
  }

  const unsigned char* tail = blocks + nblocks * 16;
  uint64_t k1 = 0;
  uint64_t k2 = 0;
  switch (len & 15) {
    case 15: k2 ^= uint64_t(tail[14]) << 48; [[fallthrough]];
    case 14: k2 ^= uint64_t(tail[13]) << 40; [[fallthrough]];
    case 13: k2 ^= uint64_t(tail[12]) << 32; [[fallthrough]];
    case 12: k2 ^= uint64_t(tail[11]) << 24; [[fallthrough]];
    case 11: k2 ^= uint64_t(tail[10]) << 16; [[fallthrough]];
    case 10: k2 ^= uint64_t(tail[9]) << 8; [[fallthrough]];
    case 9:  k2 ^= uint64_t(tail[8]);
             k2 *= c2; k2 = detail::rotl64(k2, 33); k2 *= c1; h2 ^= k2;
             [[fallthrough]];
    case 8:  k1 ^= uint64_t(tail[7]) << 56; [[fallthrough]];
    case 7:  k1 ^= uint64_t(tail[6]) << 48; [[fallthrough]];
    case 6:  k1 ^= uint64_t(tail[5]) << 40; [[fallthrough]];
    case 5:  k1 ^= uint64_t(tail[4]) << 32; [[fallthrough]];
    case 4:  k1 ^= uint64_t(tail[3]) << 24; [[fallthrough]];
    case 3:  k1 ^= uint64_t(tail[2]) << 16; [[fallthrough]];
    case 2:  k1 ^= uint64_t(tail[1]) << 8; [[fallthrough]];
    case 1:  k1 ^= uint64_t(tail[0]);
             k1 *= c1; k1 = detail::rotl64(k1, 31); k1 *= c2; h1 ^= k1;
  }

  h1 ^= uint64_t(len);
  h2 ^= uint64_t(len);
  h1 += h2;
  h2 += h1;
  h1 = detail::fmix64(h1);
  h2 = detail::fmix64(h2);
  h1 += h2;
  h2 += h1;
  return Hash128{h1, h2};
}

inline Hash128 murmur3_128(std::string_view s, uint64_t seed = 0) {
  return murmur3_128(s.data(), s.size(), seed);
}

inline uint64_t fingerprint64(std::string_view s, uint64_t seed = 0) {
  return murmur3_128(s, seed).hi;
}

inline std::string to_hex(Hash128 h) {
  static const char* digits = "0123456789abcdef";
  std::string out(32, '0');
  for (int i = 15; i >= 0; i--) {
    out[i] = digits[h.hi & 0xf];
    h.hi >>= 4;
    out[16 + i] = digits[h.lo & 0xf];
    h.lo >>= 4;
  }
  return out;
}

// Incremental digest over streamed chunks. Chains murmur over 64-byte blocks
// so file digests do not require the whole input in memory.
class StreamDigest {
 public:
  void update(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    total_ += len;
    while (len > 0) {
      size_t take = std::min(len, sizeof(buf_) - fill_);
      std::memcpy(buf_ + fill_, p, take);
      fill_ += take;
      p += take;
      len -= take;
      if (fill_ == sizeof(buf_)) flush_block();
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }

  Hash128 digest() const {
    Hash128 h = state_;
    if (fill_ > 0) {
      Hash128 block = murmur3_128(buf_, fill_, h.lo);
      h.hi ^= block.hi;
      h.lo = block.lo;
    }
    h.lo ^= total_;
    h.hi = detail::fmix64(h.hi ^ total_);
    return h;
  }
  std::string hex() const { return to_hex(digest()); }

 private:
  void flush_block() {
    Hash128 block = murmur3_128(buf_, sizeof(buf_), state_.lo);
    state_.hi ^= block.hi;
    state_.lo = block.lo;
    fill_ = 0;
  }
  Hash128 state_{0x9368e53c2f6af274ULL, 0x586dcd208f7cd3fdULL};
  unsigned char buf_[64];
  size_t fill_ = 0;
  uint64_t total_ = 0;
};

// Deterministic RNG for seeded sampling and shuffles. splitmix64 keeps the
// byte-identical-output guarantee portable across standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform-enough draw in [0, n); modulo bias is negligible at 64 bits.
  uint64_t next_below(uint64_t n) { return n == 0 ? 0 : next() % n; }

 private:
  uint64_t state_;
};

// Derive a child seed so per-item determinism does not depend on batch order.
inline uint64_t derive_seed(uint64_t seed, std::string_view label) {
  return fingerprint64(label, seed ^ 0xa24baed4963ee407ULL);
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (size_t i = v.size(); i > 1; i--) {
    size_t j = static_cast<size_t>(rng.next_below(i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

}  // namespace langmix
