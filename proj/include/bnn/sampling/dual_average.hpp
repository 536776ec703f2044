#ifndef BNN_SAMPLING_DUAL_AVERAGE_HPP
#define BNN_SAMPLING_DUAL_AVERAGE_HPP

#include <algorithm>
#include <cmath>

namespace bnn {

/// Nesterov dual averaging of log step size toward a target acceptance.
class DualAverage {
 public:
  DualAverage(double initial_step, double target, double gamma = 0.05, double t0 = 10.0, double kappa = 0.75)
      : mu_(std::log(10.0 * initial_step)), target_(target), gamma_(gamma), t0_(t0), kappa_(kappa) {}

  /// Feeds one acceptance statistic; returns the next step size to use.
  double update(double accept_stat) {
    ++count_;
    const double a = std::min(1.0, accept_stat);
    const double m = static_cast<double>(count_);
    const double eta = 1.0 / (m + t0_);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (target_ - a);
    const double x = mu_ - s_bar_ * std::sqrt(m) / gamma_;
    const double w = std::pow(m, -kappa_);
    x_bar_ = (1.0 - w) * x_bar_ + w * x;
    return std::exp(x);
  }

  /// The averaged step size used after warmup.
  double final_step() const { return std::exp(x_bar_); }
  std::size_t count() const noexcept { return count_; }

 private:
  double mu_;
  double target_;
  double gamma_;
  double t0_;
  double kappa_;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
  std::size_t count_ = 0;
};

}  // namespace bnn

#endif  // BNN_SAMPLING_DUAL_AVERAGE_HPP
