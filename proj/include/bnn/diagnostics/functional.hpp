#ifndef BNN_DIAGNOSTICS_FUNCTIONAL_HPP
#define BNN_DIAGNOSTICS_FUNCTIONAL_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bnn/diagnostics/rhat.hpp"
#include "bnn/network/model.hpp"
#include "bnn/network/predictive.hpp"
#include "bnn/numerics/density.hpp"
#include "bnn/numerics/rng.hpp"
#include "bnn/sampling/chain.hpp"

namespace bnn {

/// Test-set predictions of every draw of one chain: row s, column i.
struct ChainPredictions {
  std::size_t chain_id = 0;
  Matrix mu;
  Matrix sd;

  std::size_t samples() const noexcept { return static_cast<std::size_t>(mu.rows()); }
};

inline ChainPredictions predict_chain(const NetworkSpec& spec, const Chain& chain, const Matrix& X,
                                      std::size_t max_samples = 0) {
  const auto S = static_cast<Eigen::Index>(
      max_samples > 0 ? std::min<std::size_t>(max_samples, chain.size()) : chain.size());
  ChainPredictions p;
  p.chain_id = chain.chain_id;
  p.mu.resize(S, X.rows());
  p.sd.resize(S, X.rows());
  for (Eigen::Index s = 0; s < S; ++s) {
    const auto b = forward_batch(spec, chain.samples.row(s).transpose(), X);
    p.mu.row(s) = b.mu.transpose();
    p.sd.row(s) = (0.5 * b.log_var.array()).exp().matrix().transpose();
  }
  return p;
}

/// Predictions for every successful chain, in chain order.
inline std::vector<ChainPredictions> predict_chains(const NetworkSpec& spec, const ChainSet& set, const Matrix& X,
                                                    std::size_t max_samples = 0) {
  std::vector<ChainPredictions> out;
  for (const auto& c : set.chains) if (c.ok() && c.size() > 0) out.push_back(predict_chain(spec, c, X, max_samples));
  return out;
}

/// Pools the first `per_chain` draws of every chain (0 = all) into one
/// mixture.
inline PredictiveMixture pool_mixture(const std::vector<ChainPredictions>& preds, std::size_t per_chain = 0) {
  PredictiveMixture mix;
  if (preds.empty()) return mix;
  Eigen::Index total = 0;
  for (const auto& p : preds) {
    total += static_cast<Eigen::Index>(per_chain > 0 ? std::min(per_chain, p.samples()) : p.samples());
  }
  const Eigen::Index n = preds.front().mu.cols();
  mix.mu.resize(n, total);
  mix.sd.resize(n, total);
  Eigen::Index j = 0;
  for (const auto& p : preds) {
    const auto S = static_cast<Eigen::Index>(per_chain > 0 ? std::min(per_chain, p.samples()) : p.samples());
    mix.mu.middleCols(j, S) = p.mu.topRows(S).transpose();
    mix.sd.middleCols(j, S) = p.sd.topRows(S).transpose();
    for (Eigen::Index s = 0; s < S; ++s) mix.sources.push_back({p.chain_id, static_cast<std::size_t>(s)});
    j += S;
  }
  return mix;
}

enum class FunctionalKind { identity, psc, lpl, rmse };

inline const char* to_string(FunctionalKind k) noexcept {
  switch (k) {
    case FunctionalKind::identity: return "identity";
    case FunctionalKind::psc: return "psc";
    case FunctionalKind::lpl: return "lpl";
    case FunctionalKind::rmse: return "rmse";
  }
  return "?";
}

inline FunctionalKind parse_functional(const std::string& s) {
  if (s == "identity") return FunctionalKind::identity;
  if (s == "psc") return FunctionalKind::psc;
  if (s == "lpl") return FunctionalKind::lpl;
  if (s == "rmse") return FunctionalKind::rmse;
  throw Error(ErrorKind::invalid_parameter, "unknown functional '" + s + "'");
}

/// Per-draw mean log pointwise likelihood over the test set.
inline std::vector<double> lpl_trace(const ChainPredictions& p, const Vector& y) {
  std::vector<double> out(p.samples());
  for (Eigen::Index s = 0; s < p.mu.rows(); ++s) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) acc += gaussian_log_density(y[i], p.mu(s, i), p.sd(s, i));
    out[static_cast<std::size_t>(s)] = acc / static_cast<double>(y.size());
  }
  return out;
}

inline std::vector<double> rmse_trace(const ChainPredictions& p, const Vector& y) {
  std::vector<double> out(p.samples());
  for (Eigen::Index s = 0; s < p.mu.rows(); ++s) {
    out[static_cast<std::size_t>(s)] = std::sqrt((p.mu.row(s).transpose() - y).squaredNorm() / static_cast<double>(y.size()));
  }
  return out;
}

inline constexpr std::uint64_t kPscStreamTag = 0x707363ULL;

/// One predictive draw per (chain, sample, point) from a keyed stream.
inline Matrix psc_draws(const ChainPredictions& p, std::uint64_t seed) {
  Matrix out(p.mu.rows(), p.mu.cols());
  for (Eigen::Index s = 0; s < p.mu.rows(); ++s)
    for (Eigen::Index i = 0; i < p.mu.cols(); ++i) {
      const double z = keyed_normal(hash_keys({seed, kPscStreamTag, p.chain_id, static_cast<std::uint64_t>(s),
                                              static_cast<std::uint64_t>(i)}));
      out(s, i) = p.mu(s, i) + p.sd(s, i) * z;
    }
  return out;
}

/// R-hat in function space. identity: one value per parameter coordinate;
/// psc: one per test point; lpl and rmse: a single value.
inline std::vector<DiagValue> functional_rhat(const ChainSet& set, const std::vector<ChainPredictions>& preds,
                                              const Vector& y, FunctionalKind kind, std::size_t kappa,
                                              bool rank_normalized, std::uint64_t seed = 0) {
  std::vector<DiagValue> out;
  switch (kind) {
    case FunctionalKind::identity: {
      const auto mats = [&] {
        std::vector<const Matrix*> m;
        for (const auto& c : set.chains) if (c.ok() && c.size() > 0) m.push_back(&c.samples);
        return m;
      }();
      if (mats.empty()) return out;
      for (Eigen::Index j = 0; j < mats.front()->cols(); ++j) {
        out.push_back(rhat(column_sequences(mats, j), kappa, rank_normalized));
      }
      break;
    }
    case FunctionalKind::psc: {
      std::vector<Matrix> draws;
      for (const auto& p : preds) draws.push_back(psc_draws(p, seed));
      if (draws.empty()) return out;
      std::vector<const Matrix*> mats;
      for (const auto& d : draws) mats.push_back(&d);
      for (Eigen::Index i = 0; i < draws.front().cols(); ++i) {
        out.push_back(rhat(column_sequences(mats, i), kappa, rank_normalized));
      }
      break;
    }
    case FunctionalKind::lpl:
    case FunctionalKind::rmse: {
      Sequences seqs;
      for (const auto& p : preds) seqs.push_back(kind == FunctionalKind::lpl ? lpl_trace(p, y) : rmse_trace(p, y));
      out.push_back(rhat(seqs, kappa, rank_normalized));
      break;
    }
  }
  return out;
}

}  // namespace bnn

#endif  // BNN_DIAGNOSTICS_FUNCTIONAL_HPP
