#ifndef BNN_DIAGNOSTICS_FILTER_HPP
#define BNN_DIAGNOSTICS_FILTER_HPP

#include <cmath>
#include <limits>
#include <vector>

#include "bnn/diagnostics/functional.hpp"

namespace bnn {

struct FilterReport {
  double lm_rmse = 0.0;
  std::vector<double> chain_rmse;      // per chain in the set; NaN for failed chains
  std::vector<std::size_t> retained;   // chain indices kept
  double retained_proportion = 0.0;    // retained / all chains, failed ones included
  bool none_retained = false;
};

/// RMSE of the chain-wise predictive mean (average of mu over the chain's
/// draws) against y.
inline double chain_ensemble_rmse(const ChainPredictions& p, const Vector& y) {
  const Vector mean = p.mu.colwise().mean().transpose();
  return std::sqrt((mean - y).squaredNorm() / static_cast<double>(y.size()));
}

/// Keeps chains whose ensemble RMSE does not exceed the LM's. Failed
/// chains are never retained.
inline FilterReport filter_chains(const NetworkSpec& spec, const ChainSet& set, const Matrix& X, const Vector& y,
                                  double lm_rmse) {
  FilterReport r;
  r.lm_rmse = lm_rmse;
  for (std::size_t k = 0; k < set.size(); ++k) {
    const Chain& c = set.chains[k];
    if (!c.ok() || c.size() == 0) {
      r.chain_rmse.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double e = chain_ensemble_rmse(predict_chain(spec, c, X), y);
    r.chain_rmse.push_back(e);
    if (e <= lm_rmse) r.retained.push_back(k);
  }
  r.retained_proportion = set.size() ? static_cast<double>(r.retained.size()) / static_cast<double>(set.size()) : 0.0;
  r.none_retained = r.retained.empty();
  return r;
}

}  // namespace bnn

#endif  // BNN_DIAGNOSTICS_FILTER_HPP
