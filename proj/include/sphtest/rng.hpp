#pragma once

// Counter-based random streams.
//
// Every random quantity in the library is drawn from a Philox4x32-10 stream
// identified by a 128-bit StreamKey. Keys are derived by hashing a base seed
// with a list of integer coordinates (replicate index, cell coordinates, ...),
// so any replicate can be regenerated in isolation and results do not depend
// on how work is scheduled across threads. Within a stream the Philox counter
// is the draw index.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace sphtest {

struct StreamKey {
  std::uint64_t key = 0;      // Philox key
  std::uint64_t counter = 0;  // high half of the Philox counter
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Hashes (seed, ids...) into a stream key. Order of ids matters.
constexpr StreamKey stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t a = mix64(seed);
  std::uint64_t b = mix64(seed ^ 0x6A09E667F3BCC909ULL);
  for (std::uint64_t id : ids) {
    a = mix64(a ^ mix64(id));
    b = mix64(b + 0x3C6EF372FE94F82BULL * (id + 1));
  }
  return {a, mix64(a ^ b)};
}

/// Philox4x32-10 as a UniformRandomBitGenerator producing 64-bit words.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(StreamKey key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (buffered_ == 0) refill();
    return buffer_[--buffered_];
  }

  /// Uniform double in the open interval (0, 1).
  double uniform01() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Number of Philox blocks consumed so far.
  std::uint64_t blocks() const { return block_; }

 private:
  void refill();

  StreamKey key_;
  std::uint64_t block_ = 0;
  std::array<result_type, 2> buffer_{};
  int buffered_ = 0;
};

/// One Philox4x32-10 block (Salmon et al. constants).
constexpr std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> c,
                                                     std::array<std::uint32_t, 2> k) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kM0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * c[2];
    c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

inline void CounterRng::refill() {
  const auto out = philox4x32_10(
      {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
       static_cast<std::uint32_t>(key_.counter), static_cast<std::uint32_t>(key_.counter >> 32)},
      {static_cast<std::uint32_t>(key_.key), static_cast<std::uint32_t>(key_.key >> 32)});
  buffer_[1] = (std::uint64_t{out[0]} << 32) | out[1];
  buffer_[0] = (std::uint64_t{out[2]} << 32) | out[3];
  buffered_ = 2;
  ++block_;
}

}  // namespace sphtest
