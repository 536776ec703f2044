#ifndef BNN_TRAINING_ENSEMBLE_HPP
#define BNN_TRAINING_ENSEMBLE_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <thread>
#include <vector>

#include "bnn/network/init.hpp"
#include "bnn/network/model.hpp"
#include "bnn/network/predictive.hpp"
#include "bnn/training/adam.hpp"

namespace bnn {

struct TrainedMember {
  Vector theta;
  std::vector<double> nll_trace;  // mean training NLL before each step, then the final value
};

struct EnsembleResult {
  std::vector<TrainedMember> members;

  std::vector<Vector> parameters() const {
    std::vector<Vector> out;
    out.reserve(members.size());
    for (const auto& m : members) out.push_back(m.theta);
    return out;
  }
};

/// Full-batch Adam on the mean Gaussian NLL, starting from theta0.
inline TrainedMember train_from(const NetworkSpec& spec, const Dataset& data, const AdamConfig& config,
                                Vector theta0) {
  config.validate();
  if (data.empty()) throw Error(ErrorKind::invalid_parameter, "train_member: empty training data");
  const Layout layout(spec);
  layout.check(theta0);
  const Vector mask = layout.weight_mask();
  const double inv_n = 1.0 / static_cast<double>(data.size());

  TrainedMember out;
  out.theta = std::move(theta0);
  out.nll_trace.reserve(config.epochs + 1);
  AdamState state(out.theta.size());
  Vector grad(out.theta.size());
  for (std::size_t epoch = 0; epoch <= config.epochs; ++epoch) {
    const double ll = log_likelihood_and_gradient(spec, layout, out.theta, data, grad);
    const double nll = -ll * inv_n;
    if (!std::isfinite(nll) || !grad.allFinite()) {
      throw DivergedTraining(epoch, "training loss became non-finite");
    }
    out.nll_trace.push_back(nll);
    if (epoch == config.epochs) break;
    grad *= -inv_n;
    adam_step(out.theta, grad, state, config, mask);
  }
  return out;
}

/// Fan-in uniform init from rng, then full-batch training.
inline TrainedMember train_member(const NetworkSpec& spec, const Dataset& data, const AdamConfig& config,
                                  RngStream& rng) {
  spec.validate();
  return train_from(spec, data, config, fan_in_uniform_init(spec, rng));
}

struct MemberOutcome {
  bool ok = false;
  TrainedMember member;
  std::string error;  // when !ok
};

/// M members, member m initialized from rng.substream(m). Members train on
/// up to `jobs` threads; the result does not depend on jobs. A member whose
/// loss diverges is reported, not thrown.
inline std::vector<MemberOutcome> train_members(const NetworkSpec& spec, const Dataset& data, std::size_t M,
                                                const AdamConfig& config, const RngStream& rng,
                                                std::size_t jobs = 1) {
  if (M == 0) throw Error(ErrorKind::invalid_parameter, "train_ensemble: M must be at least 1");
  config.validate();
  spec.validate();
  std::vector<MemberOutcome> out(M);
  auto work = [&](std::size_t m) {
    try {
      RngStream member_rng = rng.substream(m);
      out[m].member = train_member(spec, data, config, member_rng);
      out[m].ok = true;
    } catch (const Error& e) {
      out[m].error = e.what();
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, M));
  if (jobs == 1) {
    for (std::size_t m = 0; m < M; ++m) work(m);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t m = w; m < M; m += jobs) work(m);
      });
    }
    for (auto& t : pool) t.join();
  }
  return out;
}

/// As train_members, but any diverged member is an error.
inline EnsembleResult train_ensemble(const NetworkSpec& spec, const Dataset& data, std::size_t M,
                                     const AdamConfig& config, const RngStream& rng, std::size_t jobs = 1) {
  auto outcomes = train_members(spec, data, M, config, rng, jobs);
  EnsembleResult result;
  for (std::size_t m = 0; m < M; ++m) {
    if (!outcomes[m].ok) {
      throw Error(ErrorKind::diverged_training, "ensemble member " + std::to_string(m) + ": " + outcomes[m].error);
    }
    result.members.push_back(std::move(outcomes[m].member));
  }
  return result;
}

/// The M Gaussian components (one per member) at each row of X.
inline PredictiveMixture de_predict(const NetworkSpec& spec, const std::vector<Vector>& members,
                                    const Matrix& X) {
  return predictive_mixture(spec, members, X);
}

}  // namespace bnn

#endif  // BNN_TRAINING_ENSEMBLE_HPP
