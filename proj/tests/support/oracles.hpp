#ifndef BNN_TESTS_ORACLES_HPP
#define BNN_TESTS_ORACLES_HPP

// Test-only reference implementations. These deliberately avoid the
// library's batched code paths so they can serve as independent checks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <vector>

#include "bnn/network/dataset.hpp"
#include "bnn/network/spec.hpp"
#include "bnn/numerics/rng.hpp"

namespace oracle {

/// Scalar loop-based forward pass; returns (mu, unclamped head output).
inline std::pair<double, double> forward(const bnn::NetworkSpec& spec, const bnn::Vector& theta,
                                         const std::vector<double>& x) {
  std::vector<double> a = x;
  std::size_t offset = 0;
  std::vector<std::size_t> widths = spec.hidden_widths;
  widths.push_back(spec.output_units());
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const std::size_t in = a.size(), out = widths[l];
    std::vector<double> z(out, 0.0);
    for (std::size_t j = 0; j < out; ++j) {
      for (std::size_t i = 0; i < in; ++i) z[j] += theta[offset + j * in + i] * a[i];
    }
    offset += in * out;
    if (spec.bias) {
      for (std::size_t j = 0; j < out; ++j) z[j] += theta[offset + j];
      offset += out;
    }
    if (l + 1 < widths.size()) {
      for (auto& v : z) v = spec.activation.value(v);
    }
    a = z;
  }
  const double lv = spec.head == bnn::OutputHead::heteroscedastic
                        ? std::clamp(a[1], -15.0, 15.0)
                        : 2.0 * std::log(spec.noise_sd);
  return {a[0], lv};
}

inline double log_likelihood(const bnn::NetworkSpec& spec, const bnn::Vector& theta,
                             const bnn::Dataset& data) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    std::vector<double> x(data.X.cols());
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) x[j] = data.X(i, j);
    auto [mu, lv] = forward(spec, theta, x);
    const double var = std::exp(lv);
    ll += -0.5 * std::log(2.0 * M_PI * var) - 0.5 * (data.y[i] - mu) * (data.y[i] - mu) / var;
  }
  return ll;
}

/// Central finite differences of f at theta with step h.
inline bnn::Vector finite_difference(const std::function<double(const bnn::Vector&)>& f,
                                     const bnn::Vector& theta, double h = 1e-5) {
  bnn::Vector g(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    bnn::Vector up = theta, down = theta;
    up[i] += h;
    down[i] -= h;
    g[i] = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

inline bnn::Dataset random_dataset(std::size_t n, std::size_t p, bnn::RngStream& rng) {
  bnn::Dataset d;
  d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  d.y.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < d.X.size(); ++i) d.X.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < d.y.size(); ++i) d.y[i] = rng.normal();
  d.normalization = bnn::Normalization::identity(p);
  return d;
}

inline bnn::Vector random_theta(std::size_t d, bnn::RngStream& rng, double sd = 0.5) {
  bnn::Vector t(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, sd);
  return t;
}

/// Smallest distance from any hidden pre-activation to a kink of the
/// activation, over all rows of X. Infinite for smooth activations.
inline double kink_distance(const bnn::NetworkSpec& spec, const bnn::Vector& theta,
                            const bnn::Matrix& X) {
  const auto kinks = spec.activation.kinks();
  if (kinks.empty()) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    std::vector<double> a(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) a[j] = X(r, j);
    std::size_t offset = 0;
    for (std::size_t w : spec.hidden_widths) {
      std::vector<double> z(w, 0.0);
      for (std::size_t j = 0; j < w; ++j) {
        for (std::size_t i = 0; i < a.size(); ++i) z[j] += theta[offset + j * a.size() + i] * a[i];
      }
      offset += a.size() * w;
      if (spec.bias) {
        for (std::size_t j = 0; j < w; ++j) z[j] += theta[offset + j];
        offset += w;
      }
      for (double v : z) {
        for (double k : kinks) best = std::min(best, std::abs(v - k));
      }
      for (auto& v : z) v = spec.activation.value(v);
      a = z;
    }
  }
  return best;
}

}  // namespace oracle

#endif  // BNN_TESTS_ORACLES_HPP
