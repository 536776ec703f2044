#ifndef BNN_DIAGNOSTICS_ESS_HPP
#define BNN_DIAGNOSTICS_ESS_HPP

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "bnn/error.hpp"
#include "bnn/numerics/autocorrelation.hpp"

namespace bnn {

struct EssResult {
  double ess = 0.0;
  std::size_t truncation_lag = 0;  // last lag included in the sum
  std::vector<double> rho;         // rho_0 .. rho_truncation_lag
  bool degenerate = false;
};

/// S / (1 + 2 sum rho_t), truncated by Geyer's initial positive sequence:
/// pairs rho_{2m} + rho_{2m+1} are summed until the first negative pair.
/// Clamped to [1, S].
inline EssResult ess(std::span<const double> chain) {
  const std::size_t S = chain.size();
  if (S < 8) throw Error(ErrorKind::dimension, "ess needs at least 8 values, got " + std::to_string(S));
  AutocorrelationSeries acf(chain);
  EssResult r;
  if (acf.degenerate()) {
    r.degenerate = true;
    return r;
  }
  double pair_sum = 0.0;  // sum over accepted pairs of (rho_2m + rho_2m+1)
  r.rho.push_back(1.0);
  std::size_t m = 0;
  for (; 2 * m + 1 < S; ++m) {
    const double a = acf(2 * m), b = acf(2 * m + 1);
    const double gamma = a + b;
    if (gamma < 0.0) break;
    pair_sum += gamma;
    if (m > 0) r.rho.push_back(a);
    r.rho.push_back(b);
  }
  r.truncation_lag = m == 0 ? 0 : 2 * m - 1;
  const double tau = -1.0 + 2.0 * pair_sum;
  const double Sd = static_cast<double>(S);
  r.ess = tau > 0.0 ? std::clamp(Sd / tau, 1.0, Sd) : Sd;
  return r;
}

inline EssResult ess(const std::vector<double>& chain) { return ess(std::span<const double>(chain)); }

}  // namespace bnn

#endif  // BNN_DIAGNOSTICS_ESS_HPP
