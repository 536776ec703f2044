#ifndef BNN_NETWORK_SPEC_HPP
#define BNN_NETWORK_SPEC_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "bnn/error.hpp"
#include "bnn/numerics/density.hpp"
#include "bnn/numerics/types.hpp"

namespace bnn {

enum class ActivationKind { tanh, relu, leaky_relu, silu, truncated_relu };

/// Hidden-layer nonlinearity. `parameter` is the negative slope for
/// leaky_relu and the upper cap for truncated_relu; unused otherwise.
struct Activation {
  ActivationKind kind = ActivationKind::tanh;
  double parameter = 0.0;

  static Activation tanh() { return {ActivationKind::tanh, 0.0}; }
  static Activation relu() { return {ActivationKind::relu, 0.0}; }
  static Activation leaky_relu(double slope = 0.01) { return {ActivationKind::leaky_relu, slope}; }
  static Activation silu() { return {ActivationKind::silu, 0.0}; }
  static Activation truncated_relu(double cap = 1.0) {
    return {ActivationKind::truncated_relu, cap};
  }

  double value(double x) const noexcept {
    switch (kind) {
      case ActivationKind::tanh: return std::tanh(x);
      case ActivationKind::relu: return x > 0.0 ? x : 0.0;
      case ActivationKind::leaky_relu: return x > 0.0 ? x : parameter * x;
      case ActivationKind::silu: return x / (1.0 + std::exp(-x));
      case ActivationKind::truncated_relu: return x <= 0.0 ? 0.0 : (x >= parameter ? parameter : x);
    }
    return 0.0;
  }

  /// Derivative; at kinks the subgradient 0 is used (leaky: the negative
  /// slope at exactly 0).
  double derivative(double x) const noexcept {
    switch (kind) {
      case ActivationKind::tanh: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
      }
      case ActivationKind::relu: return x > 0.0 ? 1.0 : 0.0;
      case ActivationKind::leaky_relu: return x > 0.0 ? 1.0 : parameter;
      case ActivationKind::silu: {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 + x * (1.0 - s));
      }
      case ActivationKind::truncated_relu: return (x > 0.0 && x < parameter) ? 1.0 : 0.0;
    }
    return 0.0;
  }

  bool odd() const noexcept { return kind == ActivationKind::tanh; }

  bool positively_homogeneous() const noexcept {
    return kind == ActivationKind::relu || kind == ActivationKind::leaky_relu;
  }

  /// Points where the derivative jumps (used to keep finite-difference
  /// checks away from non-differentiable inputs).
  std::vector<double> kinks() const {
    switch (kind) {
      case ActivationKind::relu:
      case ActivationKind::leaky_relu: return {0.0};
      case ActivationKind::truncated_relu: return {0.0, parameter};
      default: return {};
    }
  }

  void validate() const {
    if (kind == ActivationKind::leaky_relu && !(parameter > 0.0 && parameter < 1.0)) {
      throw Error(ErrorKind::invalid_parameter, "leaky_relu slope must be in (0, 1)");
    }
    if (kind == ActivationKind::truncated_relu && !(parameter > 0.0)) {
      throw Error(ErrorKind::invalid_parameter, "truncated_relu cap must be positive");
    }
  }
};

inline std::string to_string(const Activation& a) {
  switch (a.kind) {
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::relu: return "relu";
    case ActivationKind::leaky_relu: return "leaky_relu";
    case ActivationKind::silu: return "silu";
    case ActivationKind::truncated_relu: return "truncated_relu";
  }
  return "unknown";
}

/// Parses "tanh", "relu", "silu", "leaky_relu[:slope]", "truncated_relu[:cap]".
inline Activation parse_activation(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const bool has_arg = colon != std::string::npos;
  const double arg = has_arg ? std::stod(text.substr(colon + 1)) : 0.0;
  Activation a;
  if (name == "tanh") a = Activation::tanh();
  else if (name == "relu") a = Activation::relu();
  else if (name == "silu") a = Activation::silu();
  else if (name == "leaky_relu") a = Activation::leaky_relu(has_arg ? arg : 0.01);
  else if (name == "truncated_relu") a = Activation::truncated_relu(has_arg ? arg : 1.0);
  else throw Error(ErrorKind::validation, "unknown activation '" + text + "'");
  a.validate();
  return a;
}

/// How the network's outputs parameterize the Gaussian observation model.
/// heteroscedastic: two output units (mu, log variance).
/// fixed_noise: one output unit (mu) with a constant noise_sd.
enum class OutputHead { heteroscedastic, fixed_noise };

inline constexpr double kLogVarBound = 15.0;

struct NetworkSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_widths;
  Activation activation;
  bool bias = true;
  OutputHead head = OutputHead::heteroscedastic;
  double noise_sd = 1.0;

  std::size_t output_units() const noexcept { return head == OutputHead::heteroscedastic ? 2 : 1; }
  std::size_t layer_count() const noexcept { return hidden_widths.size() + 1; }

  void validate() const {
    if (input_dim == 0) throw Error(ErrorKind::invalid_parameter, "input_dim must be >= 1");
    for (std::size_t w : hidden_widths) {
      if (w == 0) throw Error(ErrorKind::invalid_parameter, "hidden widths must be >= 1");
    }
    if (head == OutputHead::fixed_noise && !(noise_sd > 0.0)) {
      throw Error(ErrorKind::invalid_parameter, "noise_sd must be positive");
    }
    activation.validate();
  }
};

/// One dense layer's slice of the flat parameter vector. Weights are
/// stored row-major (out x in, row = receiving unit) followed by biases.
struct LayerBlock {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
  bool has_bias = true;

  std::size_t weight_count() const noexcept { return in * out; }
  std::size_t bias_count() const noexcept { return has_bias ? out : 0; }
  std::size_t end() const noexcept { return weight_offset + weight_count() + bias_count(); }
};

class Layout {
 public:
  Layout() = default;

  explicit Layout(const NetworkSpec& spec) {
    spec.validate();
    std::size_t in = spec.input_dim;
    std::size_t offset = 0;
    auto add = [&](std::size_t out) {
      LayerBlock b;
      b.in = in;
      b.out = out;
      b.has_bias = spec.bias;
      b.weight_offset = offset;
      b.bias_offset = offset + in * out;
      offset = b.end();
      blocks_.push_back(b);
      in = out;
    };
    for (std::size_t w : spec.hidden_widths) add(w);
    add(spec.output_units());
    size_ = offset;
  }

  std::size_t size() const noexcept { return size_; }
  std::size_t layer_count() const noexcept { return blocks_.size(); }
  const LayerBlock& layer(std::size_t l) const { return blocks_.at(l); }
  const std::vector<LayerBlock>& layers() const noexcept { return blocks_; }

  /// Index of the layer owning flat coordinate i.
  std::size_t layer_of(std::size_t i) const {
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
      if (i < blocks_[l].end()) return l;
    }
    throw Error(ErrorKind::layout, "coordinate " + std::to_string(i) + " outside layout of size " +
                                       std::to_string(size_));
  }

  bool is_weight(std::size_t i) const {
    const auto& b = blocks_[layer_of(i)];
    return i < b.bias_offset;
  }

  /// 1 for weight coordinates, 0 for biases.
  Vector weight_mask() const {
    Vector mask = Vector::Zero(static_cast<Eigen::Index>(size_));
    for (const auto& b : blocks_) {
      mask.segment(static_cast<Eigen::Index>(b.weight_offset), static_cast<Eigen::Index>(b.weight_count()))
          .setOnes();
    }
    return mask;
  }

  void check(const Eigen::Ref<const Vector>& theta) const {
    if (static_cast<std::size_t>(theta.size()) != size_) {
      throw Error(ErrorKind::layout, "parameter vector has " + std::to_string(theta.size()) +
                                         " entries but the network layout needs " +
                                         std::to_string(size_) + " (" +
                                         std::to_string(blocks_.size()) + " layers)");
    }
  }

 private:
  std::vector<LayerBlock> blocks_;
  std::size_t size_ = 0;
};

inline std::size_t parameter_count(const NetworkSpec& spec) { return Layout(spec).size(); }

/// theta together with the layout that gives its coordinates meaning.
struct ParameterVector {
  Layout layout;
  Vector values;

  ParameterVector() = default;
  ParameterVector(Layout l, Vector v) : layout(std::move(l)), values(std::move(v)) { layout.check(values); }
  ParameterVector(const NetworkSpec& spec, Vector v) : ParameterVector(Layout(spec), std::move(v)) {}

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
};

/// I.i.d. zero-location prior over every coordinate.
struct PriorSpec {
  DensityFamily family = DensityFamily::gaussian;
  double scale = 1.0;

  DensityParams density() const { return {family, 0.0, scale}; }

  void validate() const { density().validate(); }
};

}  // namespace bnn

#endif  // BNN_NETWORK_SPEC_HPP
