#ifndef BNN_DIAGNOSTICS_RHAT_HPP
#define BNN_DIAGNOSTICS_RHAT_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bnn/error.hpp"
#include "bnn/numerics/normal.hpp"
#include "bnn/numerics/types.hpp"

namespace bnn {

/// A diagnostic value or the reason it has none.
struct DiagValue {
  enum class Status { ok, degenerate, unavailable };
  Status status = Status::unavailable;
  double value = 0.0;

  static DiagValue of(double v) { return {Status::ok, v}; }
  static DiagValue degenerate() { return {Status::degenerate, 0.0}; }
  static DiagValue unavailable() { return {Status::unavailable, 0.0}; }

  bool ok() const noexcept { return status == Status::ok; }
};

inline const char* to_string(DiagValue::Status s) noexcept {
  switch (s) {
    case DiagValue::Status::ok: return "ok";
    case DiagValue::Status::degenerate: return "degenerate";
    case DiagValue::Status::unavailable: return "unavailable";
  }
  return "?";
}

using Sequences = std::vector<std::vector<double>>;

struct RhatComponents {
  double B = 0.0;
  double W = 0.0;
  std::vector<double> chain_means;
  std::vector<double> chain_variances;
  double grand_mean = 0.0;
  std::size_t S = 0;
  std::size_t K = 0;
};

/// B and W over equal-length sequences (sample variances with divisor S-1).
inline RhatComponents rhat_components(const Sequences& chains) {
  RhatComponents c;
  c.K = chains.size();
  if (c.K < 2) throw Error(ErrorKind::dimension, "rhat needs at least 2 (sub)chains, got " + std::to_string(c.K));
  c.S = chains.front().size();
  for (const auto& ch : chains) {
    if (ch.size() != c.S) throw Error(ErrorKind::dimension, "rhat: (sub)chains differ in length");
  }
  if (c.S < 2) throw Error(ErrorKind::dimension, "rhat: (sub)chains need at least 2 values");
  const double S = static_cast<double>(c.S);
  for (const auto& ch : chains) {
    const double m = std::accumulate(ch.begin(), ch.end(), 0.0) / S;
    double v = 0.0;
    for (double x : ch) v += (x - m) * (x - m);
    c.chain_means.push_back(m);
    c.chain_variances.push_back(v / (S - 1.0));
  }
  c.grand_mean = std::accumulate(c.chain_means.begin(), c.chain_means.end(), 0.0) / static_cast<double>(c.K);
  double b = 0.0;
  for (double m : c.chain_means) b += (m - c.grand_mean) * (m - c.grand_mean);
  c.B = S / static_cast<double>(c.K - 1) * b;
  c.W = std::accumulate(c.chain_variances.begin(), c.chain_variances.end(), 0.0) / static_cast<double>(c.K);
  return c;
}

/// sqrt(((S-1)/S W + B/S) / W); degenerate when W = 0.
inline DiagValue rhat_from(const RhatComponents& c) {
  if (!(c.W > 0.0)) return DiagValue::degenerate();
  const double S = static_cast<double>(c.S);
  return DiagValue::of(std::sqrt(((S - 1.0) / S * c.W + c.B / S) / c.W));
}

/// Splits every chain into kappa equal parts, dropping trailing values.
/// Chains of unequal length are first cut to the shortest one.
inline Sequences split_chains(const Sequences& chains, std::size_t kappa) {
  if (kappa == 0) throw Error(ErrorKind::invalid_parameter, "kappa must be at least 1");
  if (chains.empty()) return {};
  std::size_t n = chains.front().size();
  for (const auto& c : chains) n = std::min(n, c.size());
  const std::size_t len = n / kappa;
  Sequences out;
  for (const auto& c : chains) {
    for (std::size_t j = 0; j < kappa; ++j) {
      out.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(j * len),
                       c.begin() + static_cast<std::ptrdiff_t>((j + 1) * len));
    }
  }
  return out;
}

/// Replaces every value by the normal quantile of its pooled fractional
/// rank, (r - 3/8) / (N + 1/4), with average ranks for ties.
inline Sequences rank_normalize(const Sequences& chains) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (double x : chains[c]) all.emplace_back(x, all.size());
  const std::size_t N = all.size();
  std::vector<double> rank(N);
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return all[a].first < all[b].first; });
  for (std::size_t i = 0; i < N;) {
    std::size_t j = i;
    while (j + 1 < N && all[order[j + 1]].first == all[order[i]].first) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg;
    i = j + 1;
  }
  Sequences out;
  std::size_t idx = 0;
  const double denom = static_cast<double>(N) + 0.25;
  for (const auto& ch : chains) {
    std::vector<double> z;
    z.reserve(ch.size());
    for (std::size_t t = 0; t < ch.size(); ++t) z.push_back(std_normal_quantile((rank[idx++] - 0.375) / denom));
    out.push_back(std::move(z));
  }
  return out;
}

inline bool constant_values(const Sequences& chains) {
  bool first = true;
  double v0 = 0.0;
  for (const auto& c : chains)
    for (double x : c) {
      if (first) { v0 = x; first = false; }
      else if (x != v0) return false;
    }
  return true;
}

/// Split-R-hat over kappa * K subchains, optionally rank-normalized.
/// Unavailable when fewer than 2 subchains of length >= 2 remain.
inline DiagValue rhat(const Sequences& chains, std::size_t kappa = 2, bool rank_normalized = false) {
  Sequences sub = split_chains(chains, kappa);
  if (sub.size() < 2 || sub.front().size() < 2) return DiagValue::unavailable();
  if (rank_normalized) {
    // Ranks of a constant set are all tied; keep the W = 0 signal.
    if (constant_values(sub)) return DiagValue::degenerate();
    sub = rank_normalize(sub);
  }
  return rhat_from(rhat_components(sub));
}

/// Single-chain stationarity: R-hat across kappa pieces of one chain.
inline DiagValue c_rhat(std::span<const double> chain, std::size_t kappa = 4, bool rank_normalized = true) {
  if (chain.size() < 4 * kappa) {
    throw Error(ErrorKind::dimension, "c_rhat needs at least 4 * kappa = " + std::to_string(4 * kappa) + " values");
  }
  return rhat(Sequences{std::vector<double>(chain.begin(), chain.end())}, kappa, rank_normalized);
}

/// Column j of each chain matrix (S x d) as one sequence per chain.
inline Sequences column_sequences(const std::vector<const Matrix*>& chains, Eigen::Index j) {
  Sequences out;
  for (const Matrix* m : chains) {
    out.emplace_back(m->rows());
    for (Eigen::Index s = 0; s < m->rows(); ++s) out.back()[static_cast<std::size_t>(s)] = (*m)(s, j);
  }
  return out;
}

}  // namespace bnn

#endif  // BNN_DIAGNOSTICS_RHAT_HPP
