#ifndef BNN_DIAGNOSTICS_LPPD_HPP
#define BNN_DIAGNOSTICS_LPPD_HPP

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bnn/error.hpp"
#include "bnn/network/predictive.hpp"
#include "bnn/numerics/density.hpp"

namespace bnn {

/// log( (1/J) sum_j N(y_i; mu_ij, sd_ij^2) ) for every point i.
inline Vector pointwise_log_predictive(const PredictiveMixture& mix, const Vector& y) {
  if (static_cast<std::size_t>(y.size()) != mix.points()) {
    throw Error(ErrorKind::dimension, "lppd: label count differs from mixture point count");
  }
  if (mix.components() == 0) throw Error(ErrorKind::dimension, "lppd: mixture has no components");
  Vector out(y.size());
  const double log_j = std::log(static_cast<double>(mix.components()));
  std::vector<double> terms(mix.components());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    for (std::size_t j = 0; j < terms.size(); ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      terms[j] = gaussian_log_density(y[i], mix.mu(i, c), mix.sd(i, c));
    }
    out[i] = log_sum_exp(terms) - log_j;
  }
  return out;
}

inline double lppd(const PredictiveMixture& mix, const Vector& y) { return pointwise_log_predictive(mix, y).mean(); }

/// Expanding-window LPPD for one chain, fed one posterior draw at a time.
/// Memory is one running log-sum per test point.
class CumulativeLppd {
 public:
  explicit CumulativeLppd(Vector y)
      : y_(std::move(y)), log_sum_(Vector::Constant(y_.size(), -std::numeric_limits<double>::infinity())) {}

  /// Adds the component (mu_i, sd_i) for every point; returns LPPD_l.
  double push(const Vector& mu, const Vector& sd) {
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      log_sum_[i] = log_add_exp(log_sum_[i], gaussian_log_density(y_[i], mu[i], sd[i]));
    }
    ++count_;
    return current();
  }

  double current() const {
    if (count_ == 0) throw Error(ErrorKind::dimension, "cumulative lppd: no samples yet");
    return log_sum_.mean() - std::log(static_cast<double>(count_));
  }

  std::size_t count() const noexcept { return count_; }

 private:
  Vector y_;
  Vector log_sum_;
  std::size_t count_ = 0;
};

/// LPPD_l for l = 1..S over a stream of per-sample components, where
/// mu.row(s) and sd.row(s) hold sample s's predictions at every point.
inline std::vector<double> cumulative_lppd(const Matrix& mu, const Matrix& sd, const Vector& y) {
  CumulativeLppd acc(y);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(mu.rows()));
  for (Eigen::Index s = 0; s < mu.rows(); ++s) out.push_back(acc.push(mu.row(s).transpose(), sd.row(s).transpose()));
  return out;
}

enum class ConvergenceState { converged, running, insufficient_history };

inline const char* to_string(ConvergenceState s) noexcept {
  switch (s) {
    case ConvergenceState::converged: return "converged";
    case ConvergenceState::running: return "running";
    case ConvergenceState::insufficient_history: return "insufficient_history";
  }
  return "?";
}

/// |mean(LPPD_{l-w} .. LPPD_{l-1}) - LPPD_l| < epsilon, l 1-based.
struct ConvergenceMonitor {
  double epsilon = 0.01;
  std::size_t window = 50;
  std::vector<double> history;  // LPPD_1, LPPD_2, ...

  void validate() const {
    if (!(epsilon > 0.0)) throw Error(ErrorKind::invalid_parameter, "convergence epsilon must be positive");
    if (window < 1) throw Error(ErrorKind::invalid_parameter, "convergence window must be at least 1");
  }

  void push(double lppd_l) { history.push_back(lppd_l); }
};

inline ConvergenceState convergence_check(const ConvergenceMonitor& m, std::size_t l) {
  if (l <= m.window) return ConvergenceState::insufficient_history;
  if (l > m.history.size()) throw Error(ErrorKind::dimension, "convergence_check: index beyond recorded history");
  double trailing = 0.0;
  for (std::size_t t = l - m.window; t < l; ++t) trailing += m.history[t - 1];
  trailing /= static_cast<double>(m.window);
  return std::abs(trailing - m.history[l - 1]) < m.epsilon ? ConvergenceState::converged : ConvergenceState::running;
}

}  // namespace bnn

#endif  // BNN_DIAGNOSTICS_LPPD_HPP
