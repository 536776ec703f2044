#ifndef BNN_SAMPLING_HMC_HPP
#define BNN_SAMPLING_HMC_HPP

#include <algorithm>
#include <cmath>

#include "bnn/error.hpp"
#include "bnn/sampling/hamiltonian.hpp"

namespace bnn {

struct HmcConfig {
  double step_size = 0.1;
  double trajectory_length = 1.0;
  std::size_t warmup_steps = 10;

  std::size_t leapfrog_steps() const {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(trajectory_length / step_size)));
  }

  void validate() const {
    if (!(step_size > 0.0) || !(trajectory_length > 0.0)) {
      throw Error(ErrorKind::invalid_parameter, "hmc: step_size and trajectory_length must be positive");
    }
  }
};

struct TransitionStats {
  double accept_stat = 0.0;
  bool accepted = false;
  bool divergent = false;
  std::size_t n_leapfrog = 0;
  std::size_t tree_depth = 0;
  double energy_error = 0.0;  // H(new) - H(old)
};

/// Metropolis-corrected HMC with L = max(1, round(lambda / eps)) leapfrog
/// steps. A proposal that becomes non-finite is rejected and counted as
/// divergent.
template <LogDensityTarget Target>
TransitionStats hmc_step(PhasePoint& state, const HmcConfig& config, const Target& target, RngStream& rng) {
  if (!std::isfinite(state.log_p)) {
    throw Error(ErrorKind::unrecoverable_state, "hmc: current state has non-finite log density");
  }
  resample_momentum(state, rng);
  const double h0 = state.hamiltonian();
  PhasePoint z = state;
  TransitionStats st;
  const std::size_t L = config.leapfrog_steps();
  for (std::size_t i = 0; i < L; ++i) {
    ++st.n_leapfrog;
    if (!leapfrog(z, config.step_size, target)) {
      st.divergent = true;
      break;
    }
  }
  const double h1 = st.divergent ? std::numeric_limits<double>::infinity() : z.hamiltonian();
  st.accept_stat = std::isfinite(h1) ? std::min(1.0, std::exp(h0 - h1)) : 0.0;
  if (h1 - h0 > 1000.0) st.divergent = true;
  if (rng.uniform() < st.accept_stat) {
    st.accepted = true;
    st.energy_error = h1 - h0;
    state = std::move(z);
  }
  return st;
}

}  // namespace bnn

#endif  // BNN_SAMPLING_HMC_HPP
