#ifndef BNN_SAMPLING_CHAIN_HPP
#define BNN_SAMPLING_CHAIN_HPP

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "bnn/network/init.hpp"
#include "bnn/network/model.hpp"
#include "bnn/sampling/hmc.hpp"
#include "bnn/sampling/nuts.hpp"

namespace bnn {

enum class SamplerKind { nuts, hmc };
enum class InitKind { cold_random, prior_draw, warm_start };
enum class ChainStatus { ok, failed };

inline const char* to_string(SamplerKind k) noexcept { return k == SamplerKind::nuts ? "nuts" : "hmc"; }

inline const char* to_string(InitKind k) noexcept {
  switch (k) {
    case InitKind::cold_random: return "cold_random";
    case InitKind::prior_draw: return "prior_draw";
    case InitKind::warm_start: return "warm_start";
  }
  return "?";
}

inline SamplerKind parse_sampler_kind(const std::string& s) {
  if (s == "nuts") return SamplerKind::nuts;
  if (s == "hmc") return SamplerKind::hmc;
  throw Error(ErrorKind::invalid_parameter, "unknown sampler '" + s + "' (expected nuts or hmc)");
}

inline InitKind parse_init_kind(const std::string& s) {
  if (s == "cold_random") return InitKind::cold_random;
  if (s == "prior_draw") return InitKind::prior_draw;
  if (s == "warm_start") return InitKind::warm_start;
  throw Error(ErrorKind::invalid_parameter,
              "unknown init '" + s + "' (expected cold_random, prior_draw or warm_start)");
}

struct SamplerConfig {
  SamplerKind kind = SamplerKind::nuts;
  NutsConfig nuts;
  HmcConfig hmc;

  std::size_t warmup_steps() const { return kind == SamplerKind::nuts ? nuts.warmup_steps : hmc.warmup_steps; }

  void validate() const {
    if (kind == SamplerKind::nuts) nuts.validate(); else hmc.validate();
  }
};

/// Stream tag so chain streams never coincide with other purposes.
inline constexpr std::uint64_t kChainStreamTag = 0x63686169'6e000000ULL;

inline std::uint64_t chain_stream_id(std::size_t chain_id) noexcept {
  return hash_keys({kChainStreamTag, static_cast<std::uint64_t>(chain_id)});
}

struct Chain {
  std::size_t chain_id = 0;
  std::uint64_t seed = 0;
  InitKind init = InitKind::cold_random;
  ChainStatus status = ChainStatus::ok;
  std::string failure;  // kind: message, when failed

  Matrix samples;  // S x d, one row per recorded draw
  Vector log_p;    // per recorded draw
  std::vector<TransitionStats> stats;

  double step_size = 0.0;
  double warmup_accept_tail = 0.0;  // mean accept stat over the last 25% of warmup
  std::size_t warmup_divergences = 0;
  std::size_t requested_samples = 0;
  bool stopped_early = false;
  double duration_seconds = 0.0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(samples.rows()); }
  bool ok() const noexcept { return status == ChainStatus::ok; }

  std::size_t divergences() const {
    std::size_t n = 0;
    for (const auto& s : stats) n += s.divergent ? 1 : 0;
    return n;
  }

  double accept_mean() const {
    if (stats.empty()) return 0.0;
    double a = 0.0;
    for (const auto& s : stats) a += s.accept_stat;
    return a / static_cast<double>(stats.size());
  }

  Vector draw(std::size_t s) const { return samples.row(static_cast<Eigen::Index>(s)).transpose(); }
};

struct ChainSet {
  std::vector<Chain> chains;

  std::size_t size() const noexcept { return chains.size(); }

  std::size_t dimension() const {
    for (const auto& c : chains) if (c.ok() && c.samples.rows() > 0) return static_cast<std::size_t>(c.samples.cols());
    return 0;
  }

  std::vector<std::size_t> successful() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < chains.size(); ++k) if (chains[k].ok()) out.push_back(k);
    return out;
  }

  std::size_t failed_count() const { return chains.size() - successful().size(); }

  /// Keeps the listed chains, in order.
  ChainSet subset(const std::vector<std::size_t>& keep) const {
    ChainSet out;
    for (std::size_t k : keep) out.chains.push_back(chains.at(k));
    return out;
  }
};

/// Called after each recorded draw with (index, theta); returning false
/// stops the chain after that draw.
using SampleHook = std::function<bool(std::size_t, const Vector&)>;

struct WarmupResult {
  PhasePoint state;
  double step_size = 0.0;
  double tail_accept = 0.0;
  std::size_t divergences = 0;
};

/// Dual-averaging step size adaptation over config.warmup_steps NUTS
/// transitions. The step size is frozen at the averaged value afterwards.
template <LogDensityTarget Target>
WarmupResult warmup_adapt(const NutsConfig& config, const Target& target, PhasePoint init, RngStream& rng) {
  config.validate();
  WarmupResult w;
  double eps = find_initial_step(init, config.initial_step, target, rng);
  DualAverage da(eps, config.target_accept, config.gamma, config.t0, config.kappa);
  const std::size_t n = config.warmup_steps;
  const std::size_t tail_start = n - n / 4;
  double tail_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto st = nuts_step(init, eps, config, target, rng);
    if (st.divergent) ++w.divergences;
    if (i >= tail_start) tail_sum += st.accept_stat;
    eps = da.update(st.accept_stat);
    if (!(eps >= kMinStepSize)) {
      throw Error(ErrorKind::step_size_underflow,
                  "step size collapsed below 1e-12 at warmup iteration " + std::to_string(i) + " (dying sampler)");
    }
  }
  w.step_size = n > 0 ? da.final_step() : eps;
  if (!(w.step_size >= kMinStepSize)) {
    throw Error(ErrorKind::step_size_underflow, "adapted step size below 1e-12 (dying sampler)");
  }
  w.tail_accept = n > 0 ? tail_sum / static_cast<double>(n - tail_start) : 0.0;
  w.state = std::move(init);
  return w;
}

/// Warmup followed by S recorded draws, starting from theta0. Errors that
/// mark a dying or broken chain are returned as a failed Chain.
template <LogDensityTarget Target>
Chain run_chain_from(const Target& target, const SamplerConfig& config, const Vector& theta0, std::size_t S,
                     RngStream& rng, const SampleHook& hook = {}) {
  config.validate();
  if (S == 0) throw Error(ErrorKind::invalid_parameter, "run_chain: S must be at least 1");
  Chain chain;
  chain.requested_samples = S;
  const auto t_start = std::chrono::steady_clock::now();
  try {
    PhasePoint z;
    z.theta = theta0;
    evaluate(z, target);
    if (!std::isfinite(z.log_p)) {
      throw Error(ErrorKind::unrecoverable_state, "initial state has non-finite log density or gradient");
    }
    double eps;
    if (config.kind == SamplerKind::nuts) {
      auto w = warmup_adapt(config.nuts, target, std::move(z), rng);
      z = std::move(w.state);
      eps = w.step_size;
      chain.warmup_accept_tail = w.tail_accept;
      chain.warmup_divergences = w.divergences;
    } else {
      eps = config.hmc.step_size;
      const std::size_t n = config.hmc.warmup_steps;
      const std::size_t tail_start = n - n / 4;
      double tail_sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto st = hmc_step(z, config.hmc, target, rng);
        if (st.divergent) ++chain.warmup_divergences;
        if (i >= tail_start) tail_sum += st.accept_stat;
      }
      chain.warmup_accept_tail = n > 0 ? tail_sum / static_cast<double>(n - tail_start) : 0.0;
    }
    chain.step_size = eps;

    const auto d = static_cast<Eigen::Index>(theta0.size());
    chain.samples.resize(static_cast<Eigen::Index>(S), d);
    chain.log_p.resize(static_cast<Eigen::Index>(S));
    chain.stats.reserve(S);
    std::size_t kept = 0;
    for (std::size_t s = 0; s < S; ++s) {
      const auto st = config.kind == SamplerKind::nuts ? nuts_step(z, eps, config.nuts, target, rng)
                                                       : hmc_step(z, config.hmc, target, rng);
      chain.stats.push_back(st);
      chain.samples.row(static_cast<Eigen::Index>(s)) = z.theta.transpose();
      chain.log_p[static_cast<Eigen::Index>(s)] = z.log_p;
      kept = s + 1;
      if (hook && !hook(s, z.theta)) {
        chain.stopped_early = kept < S;
        break;
      }
    }
    chain.samples.conservativeResize(static_cast<Eigen::Index>(kept), Eigen::NoChange);
    chain.log_p.conservativeResize(static_cast<Eigen::Index>(kept));
  } catch (const Error& e) {
    chain.status = ChainStatus::failed;
    chain.failure = std::string(to_string(e.kind())) + ": " + e.what();
    chain.samples.resize(0, static_cast<Eigen::Index>(theta0.size()));
    chain.log_p.resize(0);
    chain.stats.clear();
  }
  chain.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return chain;
}

struct InitStrategy {
  InitKind kind = InitKind::cold_random;
  Vector theta;  // warm_start only
};

inline Vector initial_theta(const NetworkSpec& spec, const PriorSpec& prior, const InitStrategy& init,
                            RngStream& rng) {
  switch (init.kind) {
    case InitKind::cold_random: return fan_in_uniform_init(spec, rng);
    case InitKind::prior_draw: return prior_draw(spec, prior, rng);
    case InitKind::warm_start: {
      Layout(spec).check(init.theta);
      return init.theta;
    }
  }
  return {};
}

/// One BNN chain: initialization drawn from the chain's own stream, then
/// sampling continues on that stream.
inline Chain run_chain(const Posterior& target, const PriorSpec& prior, const SamplerConfig& config,
                       const InitStrategy& init, std::size_t S, std::uint64_t master_seed, std::size_t chain_id,
                       const SampleHook& hook = {}) {
  RngStream rng(master_seed, chain_stream_id(chain_id));
  Chain c;
  try {
    const Vector theta0 = initial_theta(target.spec(), prior, init, rng);
    c = run_chain_from(target, config, theta0, S, rng, hook);
  } catch (const Error& e) {
    c.status = ChainStatus::failed;
    c.failure = std::string(to_string(e.kind())) + ": " + e.what();
  }
  c.chain_id = chain_id;
  c.seed = master_seed;
  c.init = init.kind;
  return c;
}

/// Runs chains on up to `jobs` threads. Results are placed by chain index,
/// so the output does not depend on scheduling. Returns even when every
/// chain failed; see require_success.
template <class RunOne>
ChainSet run_chains_parallel(std::size_t K, std::size_t jobs, RunOne&& run_one) {
  if (K == 0) throw Error(ErrorKind::invalid_parameter, "run_chainset: K must be at least 1");
  ChainSet set;
  set.chains.resize(K);
  jobs = std::max<std::size_t>(1, std::min(jobs, K));
  if (jobs == 1) {
    for (std::size_t k = 0; k < K; ++k) set.chains[k] = run_one(k);
    return set;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = next++; k < K; k = next++) set.chains[k] = run_one(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) if (e) std::rethrow_exception(e);
  return set;
}

inline void require_success(const ChainSet& set) {
  if (set.successful().empty()) {
    std::string what = "all " + std::to_string(set.size()) + " chains failed";
    if (!set.chains.empty()) what += "; first: " + set.chains.front().failure;
    throw Error(ErrorKind::all_chains_failed, what);
  }
}

/// K chains; chain k uses inits[k % inits.size()] and its own stream.
inline ChainSet run_chainset(const Posterior& target, const PriorSpec& prior, const SamplerConfig& config,
                             const std::vector<InitStrategy>& inits, std::size_t K, std::size_t S,
                             std::uint64_t master_seed, std::size_t jobs = 1,
                             const std::function<SampleHook(std::size_t)>& hooks = {}) {
  if (inits.empty()) throw Error(ErrorKind::invalid_parameter, "run_chainset: no init strategies");
  auto set = run_chains_parallel(K, jobs, [&](std::size_t k) {
    return run_chain(target, prior, config, inits[k % inits.size()], S, master_seed, k,
                     hooks ? hooks(k) : SampleHook{});
  });
  require_success(set);
  return set;
}

}  // namespace bnn

#endif  // BNN_SAMPLING_CHAIN_HPP
