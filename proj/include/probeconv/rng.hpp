#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace probeconv {

// =============================================================================
/// Identifies one random stream. The same (seed, stream) pair regenerates the
/// same values on every call, which is what lets the backward pass rebuild a
/// probing matrix from a stored seed instead of storing the matrix.
///
/// `seed` is the run-level master seed; `stream` discriminates independent
/// consumers (layers, iterations, trials).
struct ProbeSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  friend bool operator==(const ProbeSeed&, const ProbeSeed&) = default;

  /// Derived stream for (layer, iteration) pairs; see derive_stream below.
  ProbeSeed child(std::uint64_t a, std::uint64_t b = 0) const;
};

namespace rng_detail {

// Philox2x64-10: counter-based generator. One invocation maps a 128-bit
// counter (c0, c1) and a 64-bit key to two 64-bit words through ten rounds of
// multiply-xor mixing. Randomness is addressable -- word i of any stream can
// be computed without generating its predecessors -- which keeps probe replay
// and parallel Monte Carlo cheap and order-independent.
inline constexpr std::uint64_t kPhiloxMultiplier = 0xD2B74407B1CE6E93ULL;
inline constexpr std::uint64_t kPhiloxWeylStep = 0x9E3779B97F4A7C15ULL;

struct Words {
  std::uint64_t a = 0;
  std::uint64_t b = 0;
};

inline Words philox2x64(std::uint64_t c0, std::uint64_t c1, std::uint64_t key) {
  for (int round = 0; round < 10; ++round) {
    const unsigned __int128 product =
        static_cast<unsigned __int128>(kPhiloxMultiplier) * c0;
    const std::uint64_t hi = static_cast<std::uint64_t>(product >> 64);
    const std::uint64_t lo = static_cast<std::uint64_t>(product);
    c0 = hi ^ key ^ c1;
    c1 = lo;
    key += kPhiloxWeylStep;
  }
  return {c0, c1};
}

// SplitMix64 finalizer, used only to mix discriminators into stream ids.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter layout: the low 58 bits index words/pairs within a domain, two bits
// select the domain and four bits the redraw attempt. Domains keep value,
// mask, and general-purpose draws of one stream from colliding.
enum class Domain : std::uint64_t { values = 0, mask = 1, general = 2 };

inline std::uint64_t counter0(Domain d, unsigned attempt, std::uint64_t index) {
  return (static_cast<std::uint64_t>(attempt) << 60) |
         (static_cast<std::uint64_t>(d) << 58) | index;
}

inline double to_unit_open(std::uint64_t x) {
  // (0, 1]: never 0, so log() below is safe.
  return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

inline double to_unit_halfopen(std::uint64_t x) {
  // [0, 1)
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

}  // namespace rng_detail

/// Derives an independent stream id from up to three discriminators
/// (layer index, iteration, trial, ...). Deterministic and documented:
/// stream' = mix64(stream ^ mix64(a ^ mix64(b))).
inline std::uint64_t derive_stream(std::uint64_t stream, std::uint64_t a,
                                   std::uint64_t b = 0) {
  return rng_detail::mix64(stream ^ rng_detail::mix64(a ^ rng_detail::mix64(b)));
}

inline ProbeSeed ProbeSeed::child(std::uint64_t a, std::uint64_t b) const {
  return ProbeSeed{seed, derive_stream(stream, a, b)};
}

// =============================================================================
/// Addressable stream of N(0,1) values.
///
/// Normal q is produced by Box-Muller with a fixed pairing convention: Philox
/// block q/2 yields words (a, b); u1 = (0,1] from a, u2 = [0,1) from b, and
///
///   n_{2q}   = sqrt(-2 ln u1) * cos(2 pi u2)
///   n_{2q+1} = sqrt(-2 ln u1) * sin(2 pi u2)
///
/// The sequence is fully determined by (seed, stream, attempt); values at any
/// index can be regenerated without touching other indices.
class NormalStream {
 public:
  explicit NormalStream(ProbeSeed s, unsigned attempt = 0)
      : seed_(s), attempt_(attempt) {}

  double at(std::uint64_t index) const {
    const auto [n0, n1] = pair(index >> 1);
    return (index & 1) ? n1 : n0;
  }

  /// Fills out[k] with normal number first_index + k.
  void fill(std::uint64_t first_index, std::span<double> out) const {
    std::uint64_t i = first_index;
    std::size_t k = 0;
    if ((i & 1) && k < out.size()) {
      out[k++] = at(i++);
    }
    while (k + 1 < out.size()) {
      const auto [n0, n1] = pair(i >> 1);
      out[k++] = n0;
      out[k++] = n1;
      i += 2;
    }
    if (k < out.size()) {
      out[k] = at(i);
    }
  }

 private:
  struct NormalPair {
    double n0, n1;
  };

  NormalPair pair(std::uint64_t q) const {
    using namespace rng_detail;
    const Words w = philox2x64(counter0(Domain::values, attempt_, q),
                               seed_.stream, seed_.seed);
    const double u1 = to_unit_open(w.a);
    const double u2 = to_unit_halfopen(w.b);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

  ProbeSeed seed_;
  unsigned attempt_;
};

// =============================================================================
/// Addressable stream of uniform doubles in [0, 1), one per index, drawn from
/// the mask domain (independent of the values domain above).
class MaskStream {
 public:
  explicit MaskStream(ProbeSeed s, unsigned attempt = 0)
      : seed_(s), attempt_(attempt) {}

  double at(std::uint64_t index) const {
    using namespace rng_detail;
    const Words w = philox2x64(counter0(Domain::mask, attempt_, index >> 1),
                               seed_.stream, seed_.seed);
    return to_unit_halfopen((index & 1) ? w.b : w.a);
  }

 private:
  ProbeSeed seed_;
  unsigned attempt_;
};

// =============================================================================
/// Sequential convenience RNG over the general-purpose domain of a stream.
/// Used for weight init, shuffles, dropout masks, and test instances.
class CounterRng {
 public:
  explicit CounterRng(ProbeSeed s) : seed_(s) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : seed_{seed, stream} {}

  std::uint64_t next_u64() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    using namespace rng_detail;
    const Words w = philox2x64(counter0(Domain::general, 0, counter_++),
                               seed_.stream, seed_.seed);
    spare_ = w.b;
    have_spare_ = true;
    return w.a;
  }

  /// [0, 1)
  double next_double() { return rng_detail::to_unit_halfopen(next_u64()); }

  /// Unbiased integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  /// N(0,1); consumes two words per pair, same transform as NormalStream.
  double normal() {
    if (have_normal_) {
      have_normal_ = false;
      return spare_normal_;
    }
    const double u1 = rng_detail::to_unit_open(next_u64());
    const double u2 = rng_detail::to_unit_halfopen(next_u64());
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    have_normal_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

 private:
  ProbeSeed seed_;
  std::uint64_t counter_ = 0;
  std::uint64_t spare_ = 0;
  bool have_spare_ = false;
  double spare_normal_ = 0.0;
  bool have_normal_ = false;
};

}  // namespace probeconv
