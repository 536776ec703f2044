#ifndef BNN_TRAINING_ADAM_HPP
#define BNN_TRAINING_ADAM_HPP

#include <cmath>
#include <cstddef>
#include <string>

#include "bnn/error.hpp"
#include "bnn/numerics/types.hpp"

namespace bnn {

struct AdamConfig {
  double learning_rate = 1e-2;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 5000;

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::invalid_parameter, "adam: " + what); };
    if (!(learning_rate > 0.0)) bad("learning_rate must be positive");
    if (!(weight_decay >= 0.0)) bad("weight_decay must be non-negative");
    if (!(beta1 > 0.0 && beta1 < 1.0)) bad("beta1 must lie in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) bad("beta2 must lie in (0, 1)");
    if (!(epsilon > 0.0)) bad("epsilon must be positive");
  }
};

struct AdamState {
  Vector m;
  Vector v;
  std::size_t step = 0;

  explicit AdamState(Eigen::Index d = 0) : m(Vector::Zero(d)), v(Vector::Zero(d)) {}
};

/// One bias-corrected Adam step on a loss to be minimized. Weight decay is
/// decoupled: theta <- theta - lr * wd * theta on coordinates where decay_mask
/// is 1. An empty mask decays nothing.
inline void adam_step(Eigen::Ref<Vector> theta, const Eigen::Ref<const Vector>& grad, AdamState& state,
                      const AdamConfig& config, const Eigen::Ref<const Vector>& decay_mask = Vector()) {
  if (state.m.size() != theta.size()) state = AdamState(theta.size());
  state.step += 1;
  const double t = static_cast<double>(state.step);
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * grad;
  state.v = config.beta2 * state.v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  if (config.weight_decay > 0.0 && decay_mask.size() == theta.size()) {
    theta -= config.learning_rate * config.weight_decay * theta.cwiseProduct(decay_mask);
  }
  theta.array() -= config.learning_rate * (state.m.array() / c1) /
                   ((state.v.array() / c2).sqrt() + config.epsilon);
}

}  // namespace bnn

#endif  // BNN_TRAINING_ADAM_HPP
