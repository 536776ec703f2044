#ifndef BNN_NUMERICS_AUTOCORRELATION_HPP
#define BNN_NUMERICS_AUTOCORRELATION_HPP

#include <span>
#include <string>
#include <vector>

#include "bnn/error.hpp"

namespace bnn {

/// Biased sample autocorrelation of a series, evaluated lag by lag: the
/// lag-t autocovariance sum over the S - t available pairs divided by the
/// total sum of squares.
class AutocorrelationSeries {
 public:
  explicit AutocorrelationSeries(std::span<const double> x) : centered_(x.begin(), x.end()) {
    double mean = 0.0;
    for (double v : centered_) mean += v;
    mean /= static_cast<double>(centered_.size());
    for (double& v : centered_) {
      v -= mean;
      sum_squares_ += v * v;
    }
  }

  std::size_t size() const noexcept { return centered_.size(); }
  bool degenerate() const noexcept { return !(sum_squares_ > 0.0); }

  double operator()(std::size_t lag) const noexcept {
    if (lag == 0) return 1.0;
    double acc = 0.0;
    const std::size_t n = centered_.size();
    for (std::size_t i = 0; i + lag < n; ++i) acc += centered_[i] * centered_[i + lag];
    return acc / sum_squares_;
  }

 private:
  std::vector<double> centered_;
  double sum_squares_ = 0.0;
};

struct Autocorrelation {
  /// rho[t] for t = 0..max_lag; empty when degenerate.
  std::vector<double> rho;
  /// Zero-variance input: the autocorrelation is undefined.
  bool degenerate = false;
};

inline Autocorrelation autocorrelation(std::span<const double> x, std::size_t max_lag) {
  const std::size_t n = x.size();
  if (n < 4) {
    throw Error(ErrorKind::dimension,
                "autocorrelation needs at least 4 values, got " + std::to_string(n));
  }
  if (max_lag >= n) {
    throw Error(ErrorKind::dimension, "autocorrelation max_lag " + std::to_string(max_lag) +
                                          " must be below the series length " + std::to_string(n));
  }
  const AutocorrelationSeries series(x);
  Autocorrelation out;
  if (series.degenerate()) {
    out.degenerate = true;
    return out;
  }
  out.rho.resize(max_lag + 1);
  for (std::size_t t = 0; t <= max_lag; ++t) out.rho[t] = series(t);
  return out;
}

}  // namespace bnn

#endif  // BNN_NUMERICS_AUTOCORRELATION_HPP
