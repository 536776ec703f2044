#ifndef BNN_NETWORK_MODEL_HPP
#define BNN_NETWORK_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "bnn/network/dataset.hpp"
#include "bnn/network/spec.hpp"
#include "bnn/numerics/density.hpp"

namespace bnn {

/// Parameters of the Gaussian predictive p(y | x, theta).
struct Prediction {
  double mu = 0.0;
  double log_var = 0.0;

  double sd() const { return std::exp(0.5 * log_var); }
};

struct BatchPrediction {
  Vector mu;
  Vector log_var;
};

namespace detail {

inline Eigen::Map<const RowMatrix> weights(const LayerBlock& b, const double* theta) {
  return {theta + b.weight_offset, static_cast<Eigen::Index>(b.out), static_cast<Eigen::Index>(b.in)};
}

inline Eigen::Map<const Eigen::RowVectorXd> biases(const LayerBlock& b, const double* theta) {
  return {theta + b.bias_offset, static_cast<Eigen::Index>(b.out)};
}

inline double clamp_log_var(double v) { return std::clamp(v, -kLogVarBound, kLogVarBound); }

/// Pre-activations of every layer for a batch (one n x width matrix per
/// layer, the last being the raw output layer).
struct ForwardTrace {
  std::vector<Matrix> pre;   // Z_l
  std::vector<Matrix> post;  // A_l = h(Z_l) for hidden layers; post[0] = X
};

inline ForwardTrace trace_forward(const NetworkSpec& spec, const Layout& layout,
                                  const Eigen::Ref<const Vector>& theta, const Matrix& X) {
  ForwardTrace t;
  t.post.reserve(layout.layer_count());
  t.pre.reserve(layout.layer_count());
  t.post.push_back(X);
  const double* th = theta.data();
  for (std::size_t l = 0; l < layout.layer_count(); ++l) {
    const LayerBlock& b = layout.layer(l);
    Matrix z = t.post.back() * weights(b, th).transpose();
    if (b.has_bias) z.rowwise() += biases(b, th);
    if (l + 1 < layout.layer_count()) {
      Matrix a = z.unaryExpr([&](double v) { return spec.activation.value(v); });
      t.post.push_back(std::move(a));
    }
    t.pre.push_back(std::move(z));
  }
  return t;
}

inline BatchPrediction head_outputs(const NetworkSpec& spec, const Matrix& out) {
  BatchPrediction p;
  p.mu = out.col(0);
  if (spec.head == OutputHead::heteroscedastic) {
    p.log_var = out.col(1).unaryExpr([](double v) { return clamp_log_var(v); });
  } else {
    p.log_var = Vector::Constant(out.rows(), 2.0 * std::log(spec.noise_sd));
  }
  return p;
}

}  // namespace detail

/// Predictions for every row of X. log_var is clamped to [-15, 15].
inline BatchPrediction forward_batch(const NetworkSpec& spec, const Eigen::Ref<const Vector>& theta,
                                     const Matrix& X) {
  const Layout layout(spec);
  layout.check(theta);
  if (static_cast<std::size_t>(X.cols()) != spec.input_dim) {
    throw Error(ErrorKind::layout, "input has " + std::to_string(X.cols()) +
                                       " features but layer 0 expects " +
                                       std::to_string(spec.input_dim));
  }
  auto t = detail::trace_forward(spec, layout, theta, X);
  return detail::head_outputs(spec, t.pre.back());
}

inline Prediction forward(const NetworkSpec& spec, const Eigen::Ref<const Vector>& theta,
                          const Eigen::Ref<const Vector>& x) {
  Matrix X = x.transpose();
  const auto p = forward_batch(spec, theta, X);
  return {p.mu[0], p.log_var[0]};
}

/// Sum of Gaussian log densities of y_i under the network's (mu_i, sigma_i^2).
/// An empty dataset contributes 0.
inline double log_likelihood(const NetworkSpec& spec, const Eigen::Ref<const Vector>& theta,
                             const Dataset& data) {
  if (data.empty()) return 0.0;
  const auto p = forward_batch(spec, theta, data.X);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < p.mu.size(); ++i) {
    ll += gaussian_log_density_logvar(data.y[i], p.mu[i], p.log_var[i]);
  }
  return ll;
}

inline double log_prior(const Eigen::Ref<const Vector>& theta, const PriorSpec& prior) {
  prior.validate();
  const double s = prior.scale;
  if (prior.family == DensityFamily::gaussian) {
    return -static_cast<double>(theta.size()) * (kHalfLog2Pi + std::log(s)) -
           0.5 * theta.squaredNorm() / (s * s);
  }
  return -static_cast<double>(theta.size()) * std::log(2.0 * s) - theta.lpNorm<1>() / s;
}

inline Vector grad_log_prior(const Eigen::Ref<const Vector>& theta, const PriorSpec& prior) {
  const DensityParams d = prior.density();
  return theta.unaryExpr([&](double v) { return log_density_derivative(d, v); });
}

inline double log_posterior_unnorm(const NetworkSpec& spec, const Eigen::Ref<const Vector>& theta,
                                   const Dataset& data, const PriorSpec& prior) {
  return log_likelihood(spec, theta, data) + log_prior(theta, prior);
}

/// Log-likelihood and its reverse-mode gradient in one pass.
inline double log_likelihood_and_gradient(const NetworkSpec& spec, const Layout& layout,
                                          const Eigen::Ref<const Vector>& theta, const Dataset& data,
                                          Eigen::Ref<Vector> grad) {
  grad.setZero();
  if (data.empty()) return 0.0;
  const auto t = detail::trace_forward(spec, layout, theta, data.X);
  const Matrix& out = t.pre.back();
  const Eigen::Index n = out.rows();
  const bool hetero = spec.head == OutputHead::heteroscedastic;
  const double fixed_log_var = hetero ? 0.0 : 2.0 * std::log(spec.noise_sd);

  Matrix delta(n, out.cols());
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double raw = hetero ? out(i, 1) : fixed_log_var;
    const double lv = hetero ? detail::clamp_log_var(raw) : fixed_log_var;
    const double prec = std::exp(-lv);
    const double r = data.y[i] - out(i, 0);
    ll += -kHalfLog2Pi - 0.5 * lv - 0.5 * r * r * prec;
    delta(i, 0) = r * prec;
    if (hetero) {
      const bool inside = raw > -kLogVarBound && raw < kLogVarBound;
      delta(i, 1) = inside ? 0.5 * (r * r * prec - 1.0) : 0.0;
    }
  }

  const double* th = theta.data();
  for (std::size_t l = layout.layer_count(); l-- > 0;) {
    const LayerBlock& b = layout.layer(l);
    Eigen::Map<RowMatrix> gw(grad.data() + b.weight_offset, static_cast<Eigen::Index>(b.out),
                             static_cast<Eigen::Index>(b.in));
    gw.noalias() = delta.transpose() * t.post[l];
    if (b.has_bias) {
      Eigen::Map<Eigen::RowVectorXd>(grad.data() + b.bias_offset, static_cast<Eigen::Index>(b.out)) =
          delta.colwise().sum();
    }
    if (l == 0) break;
    Matrix back = delta * detail::weights(b, th);
    const Matrix& z = t.pre[l - 1];
    delta = back.cwiseProduct(z.unaryExpr([&](double v) { return spec.activation.derivative(v); }));
  }
  return ll;
}

/// The sampler's target: unnormalized log posterior with its gradient.
/// Holds references; spec, data and prior must outlive it.
class Posterior {
 public:
  Posterior(const NetworkSpec& spec, const Dataset& data, const PriorSpec& prior)
      : spec_(spec), layout_(spec), data_(data), prior_(prior) {
    prior_.validate();
    if (!data_.empty() && data_.features() != spec_.input_dim) {
      throw Error(ErrorKind::layout, "dataset has " + std::to_string(data_.features()) +
                                         " features but layer 0 expects " +
                                         std::to_string(spec_.input_dim));
    }
  }

  std::size_t dimension() const noexcept { return layout_.size(); }
  const Layout& layout() const noexcept { return layout_; }
  const NetworkSpec& spec() const noexcept { return spec_; }

  double log_density(const Eigen::Ref<const Vector>& theta) const {
    return log_posterior_unnorm(spec_, theta, data_, prior_);
  }

  double operator()(const Eigen::Ref<const Vector>& theta, Eigen::Ref<Vector> grad) const {
    layout_.check(theta);
    const double ll = log_likelihood_and_gradient(spec_, layout_, theta, data_, grad);
    grad += grad_log_prior(theta, prior_);
    return ll + log_prior(theta, prior_);
  }

 private:
  const NetworkSpec& spec_;
  Layout layout_;
  const Dataset& data_;
  PriorSpec prior_;
};

inline Vector grad_log_posterior(const NetworkSpec& spec, const Eigen::Ref<const Vector>& theta,
                                 const Dataset& data, const PriorSpec& prior) {
  Posterior target(spec, data, prior);
  Vector g(theta.size());
  target(theta, g);
  return g;
}

}  // namespace bnn

#endif  // BNN_NETWORK_MODEL_HPP
