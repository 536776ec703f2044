#ifndef BNN_SAMPLING_NUTS_HPP
#define BNN_SAMPLING_NUTS_HPP

#include <cmath>
#include <limits>
#include <string>

#include "bnn/error.hpp"
#include "bnn/numerics/density.hpp"
#include "bnn/sampling/dual_average.hpp"
#include "bnn/sampling/hamiltonian.hpp"
#include "bnn/sampling/hmc.hpp"

namespace bnn {

struct NutsConfig {
  double target_accept = 0.8;
  std::size_t max_tree_depth = 10;
  std::size_t warmup_steps = 1000;
  double gamma = 0.05;
  double t0 = 10.0;
  double kappa = 0.75;
  double max_energy_error = 1000.0;
  /// Starting point for the step size search.
  double initial_step = 1.0;

  void validate() const {
    if (!(target_accept > 0.0 && target_accept < 1.0)) {
      throw Error(ErrorKind::invalid_parameter, "nuts: target_accept must lie in (0, 1)");
    }
    if (max_tree_depth < 1 || max_tree_depth > 12) {
      throw Error(ErrorKind::invalid_parameter, "nuts: max_tree_depth must lie in [1, 12]");
    }
    if (!(initial_step > 0.0)) throw Error(ErrorKind::invalid_parameter, "nuts: initial_step must be positive");
  }
};

inline constexpr double kMinStepSize = 1e-12;

namespace detail {

/// Multinomial NUTS with the generalized no-U-turn check, including the
/// extra checks across the boundary of each merged pair of subtrees.
template <LogDensityTarget Target>
class NutsTree {
 public:
  NutsTree(const Target& target, double eps, double h0, double max_de, RngStream& rng)
      : target_(target), eps_(eps), h0_(h0), max_de_(max_de), rng_(rng) {}

  std::size_t n_leapfrog = 0;
  double sum_metro_prob = 0.0;
  bool divergent = false;

  // Extends z by 2^depth leapfrog steps in direction sign. p_beg/p_end are
  // the momenta at the subtree's ends, rho accumulates the momentum sum.
  bool build(std::size_t depth, PhasePoint& z, PhasePoint& propose, Vector& p_beg, Vector& p_end, Vector& rho,
             double sign, double& log_sum_weight) {
    if (depth == 0) {
      ++n_leapfrog;
      double h = std::numeric_limits<double>::infinity();
      if (leapfrog(z, sign * eps_, target_)) h = z.hamiltonian();
      if (h - h0_ > max_de_) divergent = true;
      log_sum_weight = log_add_exp(log_sum_weight, h0_ - h);
      sum_metro_prob += h0_ - h > 0.0 ? 1.0 : std::exp(h0_ - h);
      propose = z;
      rho += z.r;
      p_beg = z.r;
      p_end = z.r;
      return !divergent;
    }
    const Eigen::Index d = z.theta.size();
    double lsw_init = -std::numeric_limits<double>::infinity();
    Vector p_init_end(d);
    Vector rho_init = Vector::Zero(d);
    if (!build(depth - 1, z, propose, p_beg, p_init_end, rho_init, sign, lsw_init)) return false;

    PhasePoint propose_final;
    double lsw_final = -std::numeric_limits<double>::infinity();
    Vector p_final_beg(d);
    Vector rho_final = Vector::Zero(d);
    if (!build(depth - 1, z, propose_final, p_final_beg, p_end, rho_final, sign, lsw_final)) return false;

    const double lsw_subtree = log_add_exp(lsw_init, lsw_final);
    log_sum_weight = log_add_exp(log_sum_weight, lsw_subtree);
    if (lsw_final > lsw_subtree) {
      propose = std::move(propose_final);
    } else if (rng_.uniform() < std::exp(lsw_final - lsw_subtree)) {
      propose = std::move(propose_final);
    }

    const Vector rho_subtree = rho_init + rho_final;
    rho += rho_subtree;
    bool persist = no_u_turn(p_beg, p_end, rho_subtree);
    persist = persist && no_u_turn(p_beg, p_final_beg, rho_init + p_final_beg);
    persist = persist && no_u_turn(p_init_end, p_end, rho_final + p_init_end);
    return persist;
  }

  static bool no_u_turn(const Vector& p_minus, const Vector& p_plus, const Vector& rho) {
    return p_plus.dot(rho) > 0.0 && p_minus.dot(rho) > 0.0;
  }

 private:
  const Target& target_;
  double eps_;
  double h0_;
  double max_de_;
  RngStream& rng_;
};

}  // namespace detail

/// One NUTS transition with step size eps. Never uses more than
/// 2^max_tree_depth - 1 leapfrog steps.
template <LogDensityTarget Target>
TransitionStats nuts_step(PhasePoint& state, double eps, const NutsConfig& config, const Target& target,
                          RngStream& rng) {
  if (!std::isfinite(state.log_p) || !state.grad.allFinite()) {
    throw Error(ErrorKind::unrecoverable_state, "nuts: current state has non-finite log density or gradient");
  }
  resample_momentum(state, rng);
  const double h0 = state.hamiltonian();
  const Eigen::Index d = state.theta.size();

  PhasePoint z_fwd = state, z_bck = state, sample = state;
  Vector p_fwd_fwd = state.r, p_fwd_bck = state.r, p_bck_fwd = state.r, p_bck_bck = state.r;
  Vector rho = state.r;
  double log_sum_weight = 0.0;

  detail::NutsTree<Target> tree(target, eps, h0, config.max_energy_error, rng);
  TransitionStats st;
  while (st.tree_depth < config.max_tree_depth) {
    Vector rho_fwd = Vector::Zero(d), rho_bck = Vector::Zero(d);
    double lsw_subtree = -std::numeric_limits<double>::infinity();
    PhasePoint propose;
    bool valid;
    if (rng.uniform() > 0.5) {
      rho_bck = rho;
      p_bck_fwd = p_fwd_fwd;
      valid = tree.build(st.tree_depth, z_fwd, propose, p_fwd_bck, p_fwd_fwd, rho_fwd, 1.0, lsw_subtree);
    } else {
      rho_fwd = rho;
      p_fwd_bck = p_bck_bck;
      valid = tree.build(st.tree_depth, z_bck, propose, p_bck_fwd, p_bck_bck, rho_bck, -1.0, lsw_subtree);
    }
    if (!valid) break;
    ++st.tree_depth;

    if (lsw_subtree > log_sum_weight) {
      sample = std::move(propose);
    } else if (rng.uniform() < std::exp(lsw_subtree - log_sum_weight)) {
      sample = std::move(propose);
    }
    log_sum_weight = log_add_exp(log_sum_weight, lsw_subtree);

    rho = rho_bck + rho_fwd;
    bool persist = detail::NutsTree<Target>::no_u_turn(p_bck_bck, p_fwd_fwd, rho);
    persist = persist && detail::NutsTree<Target>::no_u_turn(p_bck_bck, p_fwd_bck, rho_bck + p_fwd_bck);
    persist = persist && detail::NutsTree<Target>::no_u_turn(p_bck_fwd, p_fwd_fwd, rho_fwd + p_bck_fwd);
    if (!persist) break;
  }

  st.n_leapfrog = tree.n_leapfrog;
  st.divergent = tree.divergent;
  st.accept_stat = tree.n_leapfrog > 0 ? tree.sum_metro_prob / static_cast<double>(tree.n_leapfrog) : 0.0;
  st.energy_error = sample.hamiltonian() - h0;
  st.accepted = sample.theta != state.theta;
  state = std::move(sample);
  return st;
}

/// Doubles or halves eps until the one-step acceptance exp(-dH) crosses 0.5.
template <LogDensityTarget Target>
double find_initial_step(const PhasePoint& start, double eps, const Target& target, RngStream& rng) {
  if (!std::isfinite(start.log_p)) {
    throw Error(ErrorKind::unrecoverable_state, "step size search: initial state has non-finite log density");
  }
  const double threshold = std::log(0.5);
  auto delta_h = [&](double e) {
    PhasePoint z = start;
    resample_momentum(z, rng);
    const double h0 = z.hamiltonian();
    if (!leapfrog(z, e, target)) return -std::numeric_limits<double>::infinity();
    return h0 - z.hamiltonian();
  };
  const int direction = delta_h(eps) > threshold ? 1 : -1;
  for (int iter = 0; iter < 200; ++iter) {
    const double dh = delta_h(eps);
    if (direction == 1 && !(dh > threshold)) break;
    if (direction == -1 && !(dh < threshold)) break;
    eps = direction == 1 ? 2.0 * eps : 0.5 * eps;
    if (eps > 1e7) throw Error(ErrorKind::invalid_parameter, "step size search diverged: target looks improper");
    if (eps < kMinStepSize) {
      throw Error(ErrorKind::step_size_underflow, "step size fell below 1e-12 during the initial search");
    }
  }
  return eps;
}

}  // namespace bnn

#endif  // BNN_SAMPLING_NUTS_HPP
