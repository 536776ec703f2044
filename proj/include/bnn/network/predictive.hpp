#ifndef BNN_NETWORK_PREDICTIVE_HPP
#define BNN_NETWORK_PREDICTIVE_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "bnn/network/model.hpp"

namespace bnn {

/// Where a mixture component came from: a posterior sample (chain, index)
/// or an ensemble member (chain = member, sample = 0).
struct ComponentSource {
  std::size_t chain = 0;
  std::size_t sample = 0;
};

/// Gaussian components of the Monte Carlo predictive at each test point.
/// Row i holds the components for point i; column j is component j.
struct PredictiveMixture {
  Matrix mu;
  Matrix sd;
  std::vector<ComponentSource> sources;

  std::size_t points() const noexcept { return static_cast<std::size_t>(mu.rows()); }
  std::size_t components() const noexcept { return static_cast<std::size_t>(mu.cols()); }

  /// Mixture mean per point.
  Vector mean() const { return mu.rowwise().mean(); }

  /// Mixture variance per point: E[sd^2 + mu^2] - mean^2.
  Vector variance() const {
    const Vector m = mean();
    Vector second = (sd.array().square() + mu.array().square()).matrix().rowwise().mean();
    return (second.array() - m.array().square()).cwiseMax(0.0).matrix();
  }

  /// Keeps only the listed components (in order).
  PredictiveMixture select(const std::vector<std::size_t>& columns) const {
    PredictiveMixture out;
    out.mu.resize(mu.rows(), static_cast<Eigen::Index>(columns.size()));
    out.sd.resize(sd.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
      const auto c = static_cast<Eigen::Index>(columns[j]);
      out.mu.col(static_cast<Eigen::Index>(j)) = mu.col(c);
      out.sd.col(static_cast<Eigen::Index>(j)) = sd.col(c);
      if (!sources.empty()) out.sources.push_back(sources[columns[j]]);
    }
    return out;
  }
};

/// Appends one component per parameter vector, evaluated on X.
inline void append_components(PredictiveMixture& mix, const NetworkSpec& spec,
                              const std::vector<Vector>& thetas, const Matrix& X,
                              const std::vector<ComponentSource>& sources) {
  const Eigen::Index old = mix.mu.cols();
  const auto add = static_cast<Eigen::Index>(thetas.size());
  if (old == 0) {
    mix.mu.resize(X.rows(), add);
    mix.sd.resize(X.rows(), add);
  } else {
    if (mix.mu.rows() != X.rows()) throw Error(ErrorKind::dimension, "mixture point count mismatch");
    mix.mu.conservativeResize(Eigen::NoChange, old + add);
    mix.sd.conservativeResize(Eigen::NoChange, old + add);
  }
  for (Eigen::Index j = 0; j < add; ++j) {
    const auto p = forward_batch(spec, thetas[static_cast<std::size_t>(j)], X);
    mix.mu.col(old + j) = p.mu;
    mix.sd.col(old + j) = (0.5 * p.log_var.array()).exp().matrix();
  }
  mix.sources.insert(mix.sources.end(), sources.begin(), sources.end());
}

inline PredictiveMixture predictive_mixture(const NetworkSpec& spec, const std::vector<Vector>& thetas,
                                            const Matrix& X,
                                            const std::vector<ComponentSource>& sources = {}) {
  PredictiveMixture mix;
  std::vector<ComponentSource> src = sources;
  if (src.empty()) {
    for (std::size_t j = 0; j < thetas.size(); ++j) src.push_back({j, 0});
  }
  append_components(mix, spec, thetas, X, src);
  return mix;
}

}  // namespace bnn

#endif  // BNN_NETWORK_PREDICTIVE_HPP
