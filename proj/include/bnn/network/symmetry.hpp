#ifndef BNN_NETWORK_SYMMETRY_HPP
#define BNN_NETWORK_SYMMETRY_HPP

#include <algorithm>
#include <string>
#include <vector>

#include "bnn/network/spec.hpp"

// Transforms that map theta to a different parameter vector computing the
// same function. `layer` always indexes a hidden layer (0-based); the
// outgoing weights live in layer + 1.

namespace bnn {

namespace detail {

inline const LayerBlock& hidden_block(const Layout& layout, std::size_t layer) {
  if (layer + 1 >= layout.layer_count()) {
    throw Error(ErrorKind::layout, "layer " + std::to_string(layer) +
                                       " is not a hidden layer (network has " +
                                       std::to_string(layout.layer_count() - 1) + " hidden layers)");
  }
  return layout.layer(layer);
}

inline void check_unit(const LayerBlock& b, std::size_t layer, std::size_t unit) {
  if (unit >= b.out) {
    throw Error(ErrorKind::layout, "unit " + std::to_string(unit) + " out of range for layer " +
                                       std::to_string(layer) + " of width " + std::to_string(b.out));
  }
}

}  // namespace detail

/// Reorders the units of a hidden layer: unit j of the result is unit
/// perm[j] of the input.
inline Vector permute_hidden(const NetworkSpec& spec, const Eigen::Ref<const Vector>& theta,
                             std::size_t layer, const std::vector<std::size_t>& perm) {
  const Layout layout(spec);
  layout.check(theta);
  const LayerBlock& b = detail::hidden_block(layout, layer);
  const LayerBlock& next = layout.layer(layer + 1);
  if (perm.size() != b.out) {
    throw Error(ErrorKind::invalid_parameter, "permutation has length " + std::to_string(perm.size()) +
                                                  " but layer " + std::to_string(layer) +
                                                  " has width " + std::to_string(b.out));
  }
  std::vector<bool> seen(b.out, false);
  for (std::size_t p : perm) {
    if (p >= b.out || seen[p]) {
      throw Error(ErrorKind::invalid_parameter, "not a permutation of 0.." + std::to_string(b.out - 1));
    }
    seen[p] = true;
  }
  Vector out = theta;
  for (std::size_t j = 0; j < b.out; ++j) {
    const std::size_t src = perm[j];
    for (std::size_t i = 0; i < b.in; ++i) {
      out[b.weight_offset + j * b.in + i] = theta[b.weight_offset + src * b.in + i];
    }
    if (b.has_bias) out[b.bias_offset + j] = theta[b.bias_offset + src];
    for (std::size_t r = 0; r < next.out; ++r) {
      out[next.weight_offset + r * next.in + j] = theta[next.weight_offset + r * next.in + src];
    }
  }
  return out;
}

/// Negates a tanh unit's incoming weights, bias and outgoing weights.
inline Vector tanh_sign_flip(const NetworkSpec& spec, const Eigen::Ref<const Vector>& theta,
                             std::size_t layer, std::size_t unit) {
  if (!spec.activation.odd()) {
    throw Error(ErrorKind::unsupported_transform,
                "sign flip needs an odd activation, got " + to_string(spec.activation));
  }
  const Layout layout(spec);
  layout.check(theta);
  const LayerBlock& b = detail::hidden_block(layout, layer);
  detail::check_unit(b, layer, unit);
  const LayerBlock& next = layout.layer(layer + 1);
  Vector out = theta;
  for (std::size_t i = 0; i < b.in; ++i) out[b.weight_offset + unit * b.in + i] *= -1.0;
  if (b.has_bias) out[b.bias_offset + unit] *= -1.0;
  for (std::size_t r = 0; r < next.out; ++r) out[next.weight_offset + r * next.in + unit] *= -1.0;
  return out;
}

/// Scales a unit's incoming weights and bias by a and its outgoing weights
/// by 1/a. Output-preserving for positively homogeneous activations.
inline Vector relu_rescale(const NetworkSpec& spec, const Eigen::Ref<const Vector>& theta,
                           std::size_t layer, std::size_t unit, double a) {
  if (!(a > 0.0)) throw Error(ErrorKind::domain, "rescale factor must be positive");
  if (!spec.activation.positively_homogeneous()) {
    throw Error(ErrorKind::unsupported_transform,
                "rescaling needs a positively homogeneous activation, got " + to_string(spec.activation));
  }
  const Layout layout(spec);
  layout.check(theta);
  const LayerBlock& b = detail::hidden_block(layout, layer);
  detail::check_unit(b, layer, unit);
  const LayerBlock& next = layout.layer(layer + 1);
  Vector out = theta;
  for (std::size_t i = 0; i < b.in; ++i) out[b.weight_offset + unit * b.in + i] *= a;
  if (b.has_bias) out[b.bias_offset + unit] *= a;
  for (std::size_t r = 0; r < next.out; ++r) out[next.weight_offset + r * next.in + unit] /= a;
  return out;
}

}  // namespace bnn

#endif  // BNN_NETWORK_SYMMETRY_HPP
