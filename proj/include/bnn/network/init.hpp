#ifndef BNN_NETWORK_INIT_HPP
#define BNN_NETWORK_INIT_HPP

#include <cmath>

#include "bnn/network/spec.hpp"
#include "bnn/numerics/rng.hpp"

namespace bnn {

/// Weights uniform on +-1/sqrt(fan_in), biases zero.
inline Vector fan_in_uniform_init(const NetworkSpec& spec, RngStream& rng) {
  const Layout layout(spec);
  Vector theta = Vector::Zero(static_cast<Eigen::Index>(layout.size()));
  for (const auto& b : layout.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(b.in));
    for (std::size_t i = 0; i < b.weight_count(); ++i) {
      theta[static_cast<Eigen::Index>(b.weight_offset + i)] = rng.uniform(-bound, bound);
    }
  }
  return theta;
}

/// One draw from the i.i.d. prior.
inline Vector prior_draw(const NetworkSpec& spec, const PriorSpec& prior, RngStream& rng) {
  prior.validate();
  Vector theta(static_cast<Eigen::Index>(parameter_count(spec)));
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    theta[i] = prior.family == DensityFamily::gaussian ? rng.normal(0.0, prior.scale)
                                                       : rng.laplace(0.0, prior.scale);
  }
  return theta;
}

}  // namespace bnn

#endif  // BNN_NETWORK_INIT_HPP
