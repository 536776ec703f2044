#ifndef BNN_SAMPLING_HAMILTONIAN_HPP
#define BNN_SAMPLING_HAMILTONIAN_HPP

#include <cmath>
#include <concepts>
#include <limits>

#include "bnn/numerics/rng.hpp"
#include "bnn/numerics/types.hpp"

namespace bnn {

/// A log density with gradient: returns log p(theta) and writes its
/// gradient into grad.
template <class T>
concept LogDensityTarget = requires(const T& t, const Vector& x, Vector& g) {
  { t.dimension() } -> std::convertible_to<std::size_t>;
  { t(x, g) } -> std::convertible_to<double>;
};

/// Position, momentum and the cached log density/gradient at the position.
/// Unit mass matrix throughout.
struct PhasePoint {
  Vector theta;
  Vector r;
  Vector grad;
  double log_p = -std::numeric_limits<double>::infinity();

  /// H = -log p + |r|^2 / 2. Non-finite values map to +inf.
  double hamiltonian() const {
    const double h = -log_p + 0.5 * r.squaredNorm();
    return std::isnan(h) ? std::numeric_limits<double>::infinity() : h;
  }
};

template <LogDensityTarget Target>
void evaluate(PhasePoint& z, const Target& target) {
  z.grad.resize(z.theta.size());
  z.log_p = target(z.theta, z.grad);
  if (!std::isfinite(z.log_p) || !z.grad.allFinite()) {
    z.log_p = -std::numeric_limits<double>::infinity();
  }
}

/// One half-kick / drift / half-kick step of size eps (negative eps runs
/// backwards). Returns false when the new state has a non-finite density
/// or gradient.
template <LogDensityTarget Target>
bool leapfrog(PhasePoint& z, double eps, const Target& target) {
  z.r.noalias() += 0.5 * eps * z.grad;
  z.theta.noalias() += eps * z.r;
  evaluate(z, target);
  if (!std::isfinite(z.log_p)) return false;
  z.r.noalias() += 0.5 * eps * z.grad;
  return true;
}

/// Free-function form over (theta, momentum) with a gradient callback
/// g(theta) -> grad log p.
template <class GradFn>
std::pair<Vector, Vector> leapfrog(const Vector& theta, const Vector& r, double eps, GradFn&& grad_fn) {
  Vector rr = r + 0.5 * eps * grad_fn(theta);
  Vector th = theta + eps * rr;
  rr += 0.5 * eps * grad_fn(th);
  return {th, rr};
}

inline void resample_momentum(PhasePoint& z, RngStream& rng) {
  z.r.resize(z.theta.size());
  for (auto& v : z.r) v = rng.normal();
}

}  // namespace bnn

#endif  // BNN_SAMPLING_HAMILTONIAN_HPP
