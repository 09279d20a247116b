#pragma once

#include <cstdint>
#include <string_view>

namespace liftperc {

// Counter-based random streams. A stream is a 64-bit key plus a counter; the
// i-th draw is a SplitMix64 finalizer applied to key + i * golden gamma, so any
// draw is a pure function of (key, i). Keys are derived by hashing a master
// seed together with a command tag and per-trial indices, which makes every
// result independent of how trials are scheduled across workers.

constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Stream {
 public:
  constexpr explicit Stream(std::uint64_t key = 0) noexcept : key_(key) {}

  constexpr std::uint64_t next() noexcept {
    return mix64(key_ + (++counter_) * kGoldenGamma);
  }

  // Uniform on [0, 1) with 53 bits of resolution.
  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  constexpr bool bernoulli(double p) noexcept { return uniform() < p; }

  // Unbiased integer in [0, n) by rejection; n > 0.
  constexpr std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  // A child stream whose key depends on this stream's key and `index` only.
  constexpr Stream split(std::uint64_t index) const noexcept {
    return Stream(mix64(key_ ^ mix64(index + kGoldenGamma)));
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Root stream for (master seed, command tag). Trials use root.split(trial).
constexpr Stream make_stream(std::uint64_t seed, std::string_view tag) noexcept {
  return Stream(mix64(mix64(seed) ^ hash_tag(tag)));
}

}  // namespace liftperc
