#ifndef BNN_DIAGNOSTICS_COVERAGE_HPP
#define BNN_DIAGNOSTICS_COVERAGE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bnn/error.hpp"
#include "bnn/network/predictive.hpp"
#include "bnn/numerics/rng.hpp"

namespace bnn {

inline const std::vector<double>& default_coverage_levels() {
  static const std::vector<double> levels{0.05, 0.1, 0.2, 0.5, 0.8, 0.9, 0.95};
  return levels;
}

struct CoverageResult {
  std::vector<double> levels;
  std::vector<double> empirical;
  bool few_components = false;  // fewer than 20 draws per point
};

/// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
inline double quantile_sorted(const std::vector<double>& s, double p) {
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

/// One predictive draw per component, central empirical intervals at each
/// level, fraction of labels inside. Draw (i, j) uses a keyed stream from
/// (seed, i, j) so the result does not depend on evaluation order.
inline CoverageResult coverage(const PredictiveMixture& mix, const Vector& y, const std::vector<double>& levels,
                               std::uint64_t seed) {
  if (static_cast<std::size_t>(y.size()) != mix.points()) {
    throw Error(ErrorKind::dimension, "coverage: label count differs from mixture point count");
  }
  for (double l : levels) {
    if (!(l > 0.0 && l < 1.0)) throw Error(ErrorKind::invalid_parameter, "coverage levels must lie in (0, 1)");
  }
  if (mix.components() == 0) throw Error(ErrorKind::dimension, "coverage: mixture has no components");
  CoverageResult r;
  r.levels = levels;
  r.few_components = mix.components() < 20;
  std::vector<std::size_t> inside(levels.size(), 0);
  std::vector<double> draws(mix.components());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    for (std::size_t j = 0; j < draws.size(); ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      const double z = keyed_normal(hash_keys({seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)}));
      draws[j] = mix.mu(i, c) + mix.sd(i, c) * z;
    }
    std::sort(draws.begin(), draws.end());
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const double a = 1.0 - levels[l];
      const double lo = quantile_sorted(draws, 0.5 * a), hi = quantile_sorted(draws, 1.0 - 0.5 * a);
      if (y[i] >= lo && y[i] <= hi) ++inside[l];
    }
  }
  for (std::size_t l = 0; l < levels.size(); ++l) {
    r.empirical.push_back(static_cast<double>(inside[l]) / static_cast<double>(y.size()));
  }
  return r;
}

}  // namespace bnn

#endif  // BNN_DIAGNOSTICS_COVERAGE_HPP
