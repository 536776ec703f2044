#ifndef BNN_NUMERICS_RNG_HPP
#define BNN_NUMERICS_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace bnn {

/// SplitMix64 finalizer. Used to derive independent seeds and as the
/// mixing function for keyed (counter-based) draws.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive combination of a list of 64-bit keys.
constexpr std::uint64_t hash_keys(std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

/// Maps 64 random bits to a double in [0, 1) using the top 53 bits.
constexpr double bits_to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Stateless uniform in (0, 1) addressed by a key. Never returns 0.
inline double keyed_uniform(std::uint64_t key) noexcept {
  return (static_cast<double>(splitmix64(key) >> 11) + 0.5) * 0x1.0p-53;
}

/// Stateless standard-normal draw addressed by a key (Box-Muller on two
/// keyed uniforms).
inline double keyed_normal(std::uint64_t key) noexcept {
  const double u1 = keyed_uniform(hash_keys({key, 1}));
  const double u2 = keyed_uniform(hash_keys({key, 2}));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// A deterministic random stream identified by (master_seed, stream_id).
///
/// The engine is mt19937_64 seeded through a seed_seq built from the
/// mixed identifiers, so its output is fixed by the standard. Uniform
/// and normal draws are computed here rather than through <random>
/// distributions, whose algorithms are implementation-defined; this keeps
/// sample dumps identical across standard libraries.
///
/// A stream is single-owner. Use substream() to hand independent streams
/// to concurrent tasks.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : master_seed_(master_seed), stream_id_(stream_id) {
    const std::uint64_t a = hash_keys({master_seed, stream_id});
    const std::uint64_t b = splitmix64(a ^ 0x5851f42d4c957f2dULL);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Independent stream for a sub-task (chain, member, purpose tag).
  RngStream substream(std::uint64_t sub_id) const {
    return RngStream(master_seed_, hash_keys({stream_id_, sub_id}));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return bits_to_unit(engine_()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Lemire's rejection keeps the result unbiased for any n.
    const std::uint64_t threshold = (0 - n) % n;
    while (true) {
      const std::uint64_t r = engine_();
      const auto m = static_cast<unsigned __int128>(r) * n;
      if (static_cast<std::uint64_t>(m) >= threshold) {
        return static_cast<std::uint64_t>(m >> 64);
      }
    }
  }

  /// Standard normal via the Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Laplace(location, scale) by inversion.
  double laplace(double location, double scale) {
    double u;
    do {
      u = uniform() - 0.5;
    } while (u == -0.5);
    const double sign = u < 0 ? -1.0 : 1.0;
    return location - scale * sign * std::log1p(-2.0 * std::abs(u));
  }

  /// In-place Fisher-Yates shuffle.
  template <class Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bnn

#endif  // BNN_NUMERICS_RNG_HPP
