#ifndef BNN_NUMERICS_DENSITY_HPP
#define BNN_NUMERICS_DENSITY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>

#include "bnn/error.hpp"

namespace bnn {

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

enum class DensityFamily { gaussian, laplace };

inline const char* to_string(DensityFamily f) noexcept {
  return f == DensityFamily::gaussian ? "gaussian" : "laplace";
}

/// A univariate location-scale density. For the Gaussian `scale` is the
/// standard deviation; for the Laplace it is the diversity b.
struct DensityParams {
  DensityFamily family = DensityFamily::gaussian;
  double location = 0.0;
  double scale = 1.0;

  void validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw Error(ErrorKind::invalid_parameter,
                  "density scale must be positive and finite, got " + std::to_string(scale));
    }
  }
};

/// log N(x; mean, sd^2) without argument checks; shared by the hot paths.
inline double gaussian_log_density(double x, double mean, double sd) noexcept {
  const double z = (x - mean) / sd;
  return -kHalfLog2Pi - std::log(sd) - 0.5 * z * z;
}

/// Gaussian log density parameterized by the log variance.
inline double gaussian_log_density_logvar(double x, double mean, double log_var) noexcept {
  const double r = x - mean;
  return -kHalfLog2Pi - 0.5 * log_var - 0.5 * r * r * std::exp(-log_var);
}

inline double log_density(const DensityParams& params, double x) {
  params.validate();
  if (params.family == DensityFamily::gaussian) {
    return gaussian_log_density(x, params.location, params.scale);
  }
  return -std::log(2.0 * params.scale) - std::abs(x - params.location) / params.scale;
}

/// d/dx log density. The Laplace derivative at the location is taken as 0.
inline double log_density_derivative(const DensityParams& params, double x) noexcept {
  const double r = x - params.location;
  if (params.family == DensityFamily::gaussian) {
    return -r / (params.scale * params.scale);
  }
  if (r == 0.0) return 0.0;
  return (r > 0 ? -1.0 : 1.0) / params.scale;
}

inline double log_add_exp(double a, double b) noexcept {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double log_sum_exp(std::span<const double> values) noexcept {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

}  // namespace bnn

#endif  // BNN_NUMERICS_DENSITY_HPP
