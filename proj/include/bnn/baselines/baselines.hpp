#ifndef BNN_BASELINES_BASELINES_HPP
#define BNN_BASELINES_BASELINES_HPP

#include <cmath>
#include <limits>
#include <vector>

#include "bnn/diagnostics/lppd.hpp"
#include "bnn/network/predictive.hpp"
#include "bnn/numerics/ols.hpp"

namespace bnn {

struct Metrics {
  double rmse = 0.0;
  double lppd = 0.0;
};

inline double rmse(const Vector& pred, const Vector& y) {
  return std::sqrt((pred - y).squaredNorm() / static_cast<double>(y.size()));
}

struct LinearBaseline {
  OlsFit fit;
  Metrics test;
};

/// OLS on train; test RMSE and LPPD under N(yhat, residual_sd^2).
inline LinearBaseline lm_fit_eval(const Dataset& train, const Dataset& test) {
  LinearBaseline lm;
  lm.fit = ols_fit(train.X, train.y);
  const Vector pred = lm.fit.predict(test.X);
  lm.test.rmse = rmse(pred, test.y);
  if (!(lm.fit.residual_sd > 0.0)) {
    // Zero residual sd: no proper Gaussian predictive.
    lm.test.lppd = -std::numeric_limits<double>::infinity();
  } else {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < pred.size(); ++i) acc += gaussian_log_density(test.y[i], pred[i], lm.fit.residual_sd);
    lm.test.lppd = acc / static_cast<double>(pred.size());
  }
  return lm;
}

struct EnsembleMetrics {
  std::vector<Metrics> members;
  Metrics dnn;  // average of member-wise metrics
  Metrics de;   // mixture: RMSE of the mixture mean, LPPD of the mixture density
};

inline EnsembleMetrics dnn_eval(const NetworkSpec& spec, const std::vector<Vector>& members, const Dataset& test) {
  if (members.empty()) throw Error(ErrorKind::invalid_parameter, "dnn_eval: no members");
  EnsembleMetrics out;
  const PredictiveMixture mix = predictive_mixture(spec, members, test.X);
  for (std::size_t m = 0; m < members.size(); ++m) {
    const PredictiveMixture one = mix.select({m});
    Metrics mm{rmse(one.mu.col(0), test.y), lppd(one, test.y)};
    out.dnn.rmse += mm.rmse / static_cast<double>(members.size());
    out.dnn.lppd += mm.lppd / static_cast<double>(members.size());
    out.members.push_back(mm);
  }
  out.de.rmse = rmse(mix.mean(), test.y);
  out.de.lppd = lppd(mix, test.y);
  return out;
}

}  // namespace bnn

#endif  // BNN_BASELINES_BASELINES_HPP
