#ifndef BNN_DATA_SYNTHETIC_HPP
#define BNN_DATA_SYNTHETIC_HPP

#include <cmath>
#include <numbers>
#include <string>

#include "bnn/network/dataset.hpp"
#include "bnn/numerics/rng.hpp"

namespace bnn {

enum class SynthKind { linear, sine, friedman };

inline SynthKind parse_synth_kind(const std::string& s) {
  if (s == "linear") return SynthKind::linear;
  if (s == "sine") return SynthKind::sine;
  if (s == "friedman") return SynthKind::friedman;
  throw Error(ErrorKind::invalid_parameter, "unknown synthetic kind '" + s + "'");
}

struct SynthData {
  Dataset data;
  /// linear: intercept then slopes. sine: (frequency). friedman: the four
  /// term weights.
  Vector generating;
  /// Noise-free regression function at each row.
  Vector truth;
};

/// linear: x ~ N(0, I_p), coefficients ~ N(0, 1) including the intercept.
/// sine: one feature x ~ U(-pi, pi), y = sin(2x).
/// friedman: five features ~ U(0, 1),
///   y = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5.
inline SynthData synth_regression(SynthKind kind, std::size_t n, double noise_sd, RngStream& rng,
                                  std::size_t p = 3) {
  SynthData out;
  Dataset& d = out.data;
  switch (kind) {
    case SynthKind::linear: {
      out.generating.resize(static_cast<Eigen::Index>(p + 1));
      for (auto& c : out.generating) c = rng.normal();
      d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
      for (Eigen::Index i = 0; i < d.X.rows(); ++i)
        for (Eigen::Index j = 0; j < d.X.cols(); ++j) d.X(i, j) = rng.normal();
      out.truth = (d.X * out.generating.tail(static_cast<Eigen::Index>(p))).array() + out.generating[0];
      break;
    }
    case SynthKind::sine: {
      out.generating = Vector::Constant(1, 2.0);
      d.X.resize(static_cast<Eigen::Index>(n), 1);
      for (Eigen::Index i = 0; i < d.X.rows(); ++i) d.X(i, 0) = rng.uniform(-std::numbers::pi, std::numbers::pi);
      out.truth = (2.0 * d.X.col(0).array()).sin();
      break;
    }
    case SynthKind::friedman: {
      out.generating.resize(4);
      out.generating << 10, 20, 10, 5;
      d.X.resize(static_cast<Eigen::Index>(n), 5);
      for (Eigen::Index i = 0; i < d.X.rows(); ++i)
        for (Eigen::Index j = 0; j < 5; ++j) d.X(i, j) = rng.uniform();
      out.truth.resize(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        const auto x = d.X.row(i);
        out.truth[i] = 10.0 * std::sin(std::numbers::pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) +
                       10.0 * x[3] + 5.0 * x[4];
      }
      break;
    }
  }
  d.y = out.truth;
  for (auto& v : d.y) v += noise_sd * rng.normal();
  d.normalization = Normalization::identity(d.features());
  return out;
}

}  // namespace bnn

#endif  // BNN_DATA_SYNTHETIC_HPP
