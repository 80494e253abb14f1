#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace armarecon {

/// The project-wide PRNG. SplitMix64 (Steele/Lea/Flood 2014): a 64-bit counter scrambled
/// by a fixed finalizer. Every random draw in the artifact flows through this generator so
/// that runs are bit-reproducible across platforms; std::random distributions are never
/// used because their output is implementation-defined.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Uniform integer in [0, bound) via rejection-free modulo of a 64-bit draw.
  /// Bias is < 2^-53 for the small bounds used here (shuffles over a few hundred items).
  std::uint64_t next_below(std::uint64_t bound) { return next_u64() % bound; }

  /// Standard normal via Box-Muller; the second variate is discarded so the state
  /// advance per call is fixed (two u64 draws).
  double next_normal() {
    // u1 in (0,1] so log() stays finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t state_;
};

/// Derives the seed of an independent child stream: one SplitMix64 scramble of
/// (seed + (tag+1) * golden gamma). Used everywhere a run seed fans out into
/// per-subsystem or per-fold streams, e.g. mix(seed, fold_index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  SplitMix64 r(seed + (tag + 1) * 0x9E3779B97F4A7C15ULL);
  return r.next_u64();
}

/// Stream tags. Fixed constants so that adding or removing one consumer (e.g. the decoder
/// in an ablated model) cannot shift the draws seen by any other consumer.
namespace rng_tags {
inline constexpr std::uint64_t kSynthCohort = 0x01;
inline constexpr std::uint64_t kSplits = 0x02;
inline constexpr std::uint64_t kFoldTrain = 0x03;
inline constexpr std::uint64_t kInitConv = 0x10;
inline constexpr std::uint64_t kInitHead = 0x11;
inline constexpr std::uint64_t kInitDecoder = 0x12;
inline constexpr std::uint64_t kDropout = 0x13;
}  // namespace rng_tags

/// Fisher-Yates shuffle driven by the documented generator.
template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace armarecon
