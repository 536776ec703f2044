#ifndef BNN_EXPERIMENT_COMMANDS_HPP
#define BNN_EXPERIMENT_COMMANDS_HPP

#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bnn/baselines/baselines.hpp"
#include "bnn/data/csv.hpp"
#include "bnn/data/split.hpp"
#include "bnn/data/synthetic.hpp"
#include "bnn/diagnostics/coverage.hpp"
#include "bnn/diagnostics/ess.hpp"
#include "bnn/diagnostics/filter.hpp"
#include "bnn/diagnostics/functional.hpp"
#include "bnn/diagnostics/layers.hpp"
#include "bnn/diagnostics/lppd.hpp"
#include "bnn/diagnostics/rhat.hpp"
#include "bnn/experiment/config.hpp"
#include "bnn/io/format.hpp"
#include "bnn/training/ensemble.hpp"

namespace bnn::experiment {

namespace fs = std::filesystem;
using io::json;

inline constexpr std::uint64_t kSynthStreamTag = 0x73796e7468ULL;
inline constexpr std::uint64_t kEnsembleStreamTag = 0x656e73656dULL;
inline constexpr std::uint64_t kCoverageSeedTag = 0x636f76ULL;

struct RunOptions {
  std::size_t jobs = 1;
  bool overwrite = false;
};

/// Relative paths resolve under $BNNSBI_OUTPUT_ROOT when it is set.
inline fs::path resolve_output(const std::string& p) {
  fs::path q(p);
  if (q.is_relative()) {
    if (const char* root = std::getenv("BNNSBI_OUTPUT_ROOT"); root && *root) return fs::path(root) / q;
  }
  return q;
}

struct LoadedData {
  SplitResult split;
  NetworkSpec spec;  // config network with input_dim from the data
};

inline LoadedData load_data(const ExperimentConfig& cfg) {
  SplitSpec s = cfg.split;
  s.seed = cfg.seed;
  LoadedData d;
  if (!cfg.synthetic.empty()) {
    RngStream rng(cfg.seed, kSynthStreamTag);
    const auto syn = synth_regression(parse_synth_kind(cfg.synthetic), cfg.synthetic_n, cfg.synthetic_noise, rng,
                                      cfg.synthetic_features);
    d.split = normalize_split(syn.data.X, syn.data.y, s);
  } else {
    CsvOptions o;
    o.target = cfg.data_target;
    d.split = normalize_split(load_csv(cfg.data_path, o), s);
  }
  d.spec = cfg.network;
  d.spec.input_dim = d.split.train.features();
  d.spec.validate();
  return d;
}

namespace detail {

inline void guard_outputs(const fs::path& dir, const std::string& marker, bool overwrite) {
  if (fs::exists(dir / marker) && !overwrite) {
    throw Error(ErrorKind::validation, "refusing to overwrite existing outputs in " + dir.string() +
                                           " (pass --overwrite)");
  }
}

/// Removes files named prefix_* so a shorter rerun leaves no stale dumps.
inline void remove_prefixed(const fs::path& dir, const std::string& prefix) {
  if (!fs::is_directory(dir)) return;
  std::vector<fs::path> doomed;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename().string().rfind(prefix, 0) == 0) doomed.push_back(e.path());
  }
  for (const auto& p : doomed) fs::remove(p);
}

inline json metrics_json(const Metrics& m) { return {{"rmse", m.rmse}, {"lppd", m.lppd}}; }

inline json diag_json(const DiagValue& v) {
  json j;
  j["status"] = to_string(v.status);
  j["value"] = v.ok() ? json(v.value) : json(nullptr);
  return j;
}

inline json summary_json(const Summary& s) {
  if (s.count == 0) return nullptr;
  return {{"count", s.count}, {"mean", s.mean}, {"sd", s.sd},         {"min", s.min},
          {"q25", s.q25},     {"median", s.median}, {"q75", s.q75}, {"max", s.max}};
}

inline std::string f(double v) { return io::format_double(v); }

/// Pooled mixture metrics over the first `per_chain` draws (0 = all).
inline Metrics mixture_metrics(const std::vector<ChainPredictions>& preds, const Vector& y, std::size_t per_chain) {
  const PredictiveMixture mix = pool_mixture(preds, per_chain);
  return {rmse(mix.mean(), y), lppd(mix, y)};
}

/// Saved copy of the config with absolute paths, so later commands work
/// from any directory.
inline ExperimentConfig absolutized(ExperimentConfig c, const fs::path& out) {
  if (!c.data_path.empty()) c.data_path = fs::absolute(c.data_path).lexically_normal().string();
  if (!c.checkpoints.empty()) c.checkpoints = fs::absolute(resolve_output(c.checkpoints)).lexically_normal().string();
  c.output = fs::absolute(out).lexically_normal().string();
  return c;
}

}  // namespace detail

// ---------------------------------------------------------------- train-de

inline json cmd_train_de(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
  cfg.validate();
  const LoadedData d = load_data(cfg);
  const fs::path out = resolve_output(cfg.output);
  detail::guard_outputs(out, "de_metrics.json", opts.overwrite);
  detail::remove_prefixed(out, "member_");
  io::write_text(out / "config.txt", to_text(detail::absolutized(cfg, out)));

  const auto outcomes = train_members(d.spec, d.split.train, cfg.members, cfg.adam,
                                      RngStream(cfg.seed, kEnsembleStreamTag), opts.jobs);
  json members = json::array();
  std::vector<Vector> ok;
  for (std::size_t m = 0; m < outcomes.size(); ++m) {
    json jm;
    jm["member"] = m;
    if (outcomes[m].ok) {
      const auto& tm = outcomes[m].member;
      io::write_checkpoint(out, m, d.spec, tm.theta, tm.nll_trace.back());
      jm["status"] = "ok";
      jm["final_train_nll"] = tm.nll_trace.back();
      ok.push_back(tm.theta);
    } else {
      jm["status"] = "diverged";
      jm["error"] = outcomes[m].error;
    }
    members.push_back(jm);
  }
  json j;
  j["format_version"] = io::kFormatVersion;
  j["members_requested"] = cfg.members;
  j["members_ok"] = ok.size();
  j["lm"] = detail::metrics_json(lm_fit_eval(d.split.train, d.split.test).test);
  if (!ok.empty()) {
    const auto em = dnn_eval(d.spec, ok, d.split.test);
    std::size_t i = 0;
    for (auto& jm : members) {
      if (jm["status"] == "ok") jm["test"] = detail::metrics_json(em.members[i++]);
    }
    j["dnn"] = detail::metrics_json(em.dnn);
    j["de"] = detail::metrics_json(em.de);
  }
  j["members"] = members;
  io::write_json(out / "de_metrics.json", j);
  if (ok.empty()) throw Error(ErrorKind::diverged_training, "every ensemble member diverged");
  return j;
}

// ------------------------------------------------------------------ sample

namespace detail {

/// Per-chain early stopping on the test-set cumulative LPPD.
struct EarlyStop {
  const NetworkSpec* spec;
  const Dataset* test;
  CumulativeLppd acc;
  ConvergenceMonitor monitor;
  std::size_t stop_index = 0;

  EarlyStop(const NetworkSpec& s, const Dataset& t, double eps, std::size_t window)
      : spec(&s), test(&t), acc(t.y) {
    monitor.epsilon = eps;
    monitor.window = window;
  }

  bool operator()(std::size_t s, const Vector& theta) {
    const auto p = forward_batch(*spec, theta, test->X);
    monitor.push(acc.push(p.mu, (0.5 * p.log_var.array()).exp().matrix()));
    if (convergence_check(monitor, s + 1) == ConvergenceState::converged) {
      stop_index = s + 1;
      return false;
    }
    return true;
  }
};

}  // namespace detail

inline json cmd_sample(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
  cfg.validate();
  const LoadedData d = load_data(cfg);
  std::vector<InitStrategy> inits;
  if (cfg.init == InitKind::warm_start) {
    for (auto& theta : io::read_checkpoints(resolve_output(cfg.checkpoints), d.spec)) {
      inits.push_back({InitKind::warm_start, std::move(theta)});
    }
  } else {
    inits.push_back({cfg.init, {}});
  }
  const fs::path out = resolve_output(cfg.output);
  detail::guard_outputs(out, "run.json", opts.overwrite);
  detail::remove_prefixed(out, "chain_");
  fs::create_directories(out);
  io::write_text(out / "config.txt", to_text(detail::absolutized(cfg, out)));

  const Posterior target(d.spec, d.split.train, cfg.prior);
  std::vector<std::size_t> stops(cfg.chains, 0);
  auto run_one = [&](std::size_t k) {
    std::shared_ptr<detail::EarlyStop> es;
    SampleHook hook;
    if (cfg.early_stop) {
      es = std::make_shared<detail::EarlyStop>(d.spec, d.split.test, cfg.epsilon, cfg.window);
      hook = [es](std::size_t s, const Vector& theta) { return (*es)(s, theta); };
    }
    Chain c = run_chain(target, cfg.prior, cfg.sampler, inits[k % inits.size()], cfg.samples, cfg.seed, k, hook);
    if (es) stops[k] = es->stop_index;
    io::write_chain(out, c, stops[k]);
    return c;
  };
  const ChainSet set = run_chains_parallel(cfg.chains, opts.jobs, run_one);

  json timings = json::array();
  json failures = json::array();
  json stopped = json::array();
  for (const auto& c : set.chains) {
    timings.push_back({{"chain", c.chain_id}, {"duration_seconds", c.duration_seconds}});
    if (!c.ok()) failures.push_back({{"chain", c.chain_id}, {"failure", c.failure}});
    if (c.stopped_early) stopped.push_back({{"chain", c.chain_id}, {"stop_index", stops[c.chain_id]}});
  }
  io::write_json(out / "timings.json", {{"chains", timings}});
  json j;
  j["format_version"] = io::kFormatVersion;
  j["chains"] = cfg.chains;
  j["samples"] = cfg.samples;
  j["dimension"] = parameter_count(d.spec);
  j["init"] = to_string(cfg.init);
  j["successful"] = set.successful().size();
  j["failed"] = set.failed_count();
  j["failures"] = failures;
  j["stopped_early"] = stopped;
  io::write_json(out / "run.json", j);
  require_success(set);
  return j;
}

// ---------------------------------------------------------------- diagnose

struct LoadedRun {
  ExperimentConfig config;
  LoadedData data;
  ChainSet chains;
};

/// "key=value" overrides on top of a config.
inline void apply_overrides(ExperimentConfig& c, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::validation, "override '" + o + "' is not key=value");
    set_value(c, detail::trim_copy(o.substr(0, eq)), detail::trim_copy(o.substr(eq + 1)));
  }
}

inline LoadedRun load_run(const fs::path& dir, const std::vector<std::string>& overrides = {}) {
  LoadedRun r;
  if (!fs::exists(dir / "config.txt")) throw Error(ErrorKind::io, "no config.txt in " + dir.string());
  r.config = load_config(dir / "config.txt");
  apply_overrides(r.config, overrides);
  r.config.validate();
  r.data = load_data(r.config);
  r.chains = io::read_chains(dir);
  const auto d = static_cast<Eigen::Index>(parameter_count(r.data.spec));
  for (const auto& c : r.chains.chains) {
    if (c.samples.cols() != d) {
      throw Error(ErrorKind::schema, "chain " + std::to_string(c.chain_id) + " has " +
                                         std::to_string(c.samples.cols()) + " parameters but the network has " +
                                         std::to_string(d));
    }
  }
  return r;
}

namespace detail {

inline std::string group_name(const ParamGroup& g) { return g.bias ? "bias" : "weight"; }

}  // namespace detail

/// Writes report.json and the plot CSVs into `out` (default: the run
/// directory). Everything written is a function of the dumps and config.
inline json cmd_diagnose(const fs::path& run_dir, const std::optional<fs::path>& out_dir = std::nullopt,
                         const std::vector<std::string>& overrides = {}) {
  const LoadedRun run = load_run(run_dir, overrides);
  const fs::path out = out_dir ? *out_dir : run_dir;
  const ExperimentConfig& cfg = run.config;
  const NetworkSpec& spec = run.data.spec;
  const Dataset& test = run.data.split.test;
  const Layout layout(spec);
  const ChainSet ok = run.chains.subset(run.chains.successful());
  const std::size_t d = layout.size();
  using detail::f;

  json rep;
  rep["format_version"] = io::kFormatVersion;
  rep["group"] = cfg.group_key();
  rep["chains"] = run.chains.size();
  rep["successful_chains"] = ok.size();
  rep["failures"] = json::array();
  for (const auto& c : run.chains.chains) {
    if (!c.ok()) rep["failures"].push_back({{"chain", c.chain_id}, {"failure", c.failure}});
  }
  rep["dimension"] = d;
  rep["test_points"] = test.size();

  const LinearBaseline lm = lm_fit_eval(run.data.split.train, test);
  rep["lm"] = detail::metrics_json(lm.test);
  const FilterReport fr = filter_chains(spec, run.chains, test.X, test.y, lm.test.rmse);
  rep["filter"] = {{"lm_rmse", fr.lm_rmse},
                   {"retained", fr.retained},
                   {"retained_proportion", fr.retained_proportion},
                   {"none_retained", fr.none_retained}};
  {
    std::ostringstream cs;
    cs << "chain,status,ensemble_rmse,retained\n";
    for (std::size_t k = 0; k < run.chains.size(); ++k) {
      const bool kept = std::find(fr.retained.begin(), fr.retained.end(), k) != fr.retained.end();
      cs << k << ',' << (run.chains.chains[k].ok() ? "ok" : "failed") << ',' << f(fr.chain_rmse[k]) << ','
         << (kept ? 1 : 0) << '\n';
    }
    io::write_text(out / "filter.csv", cs.str());
  }
  if (ok.size() == 0 || ok.chains.front().size() == 0) {
    rep["warnings"] = {"no successful chains: sample diagnostics skipped"};
    io::write_json(out / "report.json", rep);
    return rep;
  }

  // Parameter space: split R-hat across chains, cR-hat and ESS per chain.
  const auto mats = ok_sample_matrices(ok);
  std::size_t S = static_cast<std::size_t>(mats.front()->rows());
  for (auto* m : mats) S = std::min(S, static_cast<std::size_t>(m->rows()));
  const bool multi = ok.size() >= 2;
  std::vector<DiagValue> rh(d, DiagValue::unavailable());
  std::vector<std::vector<DiagValue>> crh(ok.size(), std::vector<DiagValue>(d, DiagValue::unavailable()));
  std::vector<double> ess_total(d, 0.0);
  const bool crhat_ok = S >= 4 * cfg.crhat_kappa;
  const bool ess_ok = S >= 8;
  for (std::size_t j = 0; j < d; ++j) {
    const auto seqs = column_sequences(mats, static_cast<Eigen::Index>(j));
    if (multi) rh[j] = rhat(seqs, cfg.kappa, cfg.rank_normalize);
    for (std::size_t k = 0; k < seqs.size(); ++k) {
      if (crhat_ok) crh[k][j] = c_rhat(seqs[k], cfg.crhat_kappa, cfg.rank_normalize);
      if (ess_ok) ess_total[j] += ess(seqs[k]).ess;
    }
  }
  {
    std::ostringstream cs;
    cs << "coord,layer,group,rhat_status,rhat,ess";
    for (std::size_t k = 0; k < ok.size(); ++k) cs << ",crhat_chain_" << ok.chains[k].chain_id;
    cs << '\n';
    for (std::size_t j = 0; j < d; ++j) {
      cs << j << ',' << layout.layer_of(j) << ',' << (layout.is_weight(j) ? "weight" : "bias") << ','
         << to_string(rh[j].status) << ',' << (rh[j].ok() ? f(rh[j].value) : "") << ','
         << (ess_ok ? f(ess_total[j]) : "");
      for (std::size_t k = 0; k < ok.size(); ++k) cs << ',' << (crh[k][j].ok() ? f(crh[k][j].value) : "");
      cs << '\n';
    }
    io::write_text(out / "coords.csv", cs.str());
  }
  json layers = json::array();
  {
    std::ostringstream cs;
    cs << "layer,group,statistic,count,mean,median,max\n";
    for (const auto& g : param_groups(layout)) {
      std::vector<double> r, c;
      for (std::size_t j : g.coords) {
        if (rh[j].ok()) r.push_back(rh[j].value);
        for (std::size_t k = 0; k < ok.size(); ++k) if (crh[k][j].ok()) c.push_back(crh[k][j].value);
      }
      const Summary sr = summarize(r), sc = summarize(c);
      for (const auto& [name, s] : {std::pair{"rhat", sr}, std::pair{"crhat", sc}}) {
        cs << g.layer << ',' << detail::group_name(g) << ',' << name << ',' << s.count << ','
           << (s.count ? f(s.mean) : "") << ',' << (s.count ? f(s.median) : "") << ',' << (s.count ? f(s.max) : "")
           << '\n';
      }
      layers.push_back({{"layer", g.layer},
                        {"group", detail::group_name(g)},
                        {"rhat", multi ? detail::summary_json(sr) : json("unavailable")},
                        {"crhat", detail::summary_json(sc)}});
    }
    io::write_text(out / "rhat_layers.csv", cs.str());
  }
  rep["rhat_layers"] = layers;
  rep["rhat_settings"] = {{"kappa", cfg.kappa}, {"crhat_kappa", cfg.crhat_kappa}, {"rank_normalize", cfg.rank_normalize}};

  // Layer variances and slopes.
  {
    const auto lv = layer_variance(ok, layout);
    std::ostringstream cs;
    cs << "layer,group,within_mean,within_median,between_mean,between_median,degenerate\n";
    json jl = json::array();
    for (const auto& v : lv) {
      cs << v.layer << ',' << (v.bias ? "bias" : "weight") << ',' << f(v.within.mean) << ',' << f(v.within.median)
         << ',' << (v.between.count ? f(v.between.mean) : "") << ',' << (v.between.count ? f(v.between.median) : "")
         << ',' << v.degenerate << '\n';
      jl.push_back({{"layer", v.layer},
                    {"group", v.bias ? "bias" : "weight"},
                    {"within", detail::summary_json(v.within)},
                    {"between", multi ? detail::summary_json(v.between) : json("unavailable")},
                    {"degenerate", v.degenerate}});
    }
    io::write_text(out / "layer_variance.csv", cs.str());
    rep["layer_variance"] = jl;
  }
  if (S >= 10) {
    std::ostringstream cs;
    cs << "layer,count,mean,median,max\n";
    json js = json::array();
    for (const auto& s : chain_slopes(ok, layout)) {
      cs << s.layer << ',' << s.abs_slope.count << ',' << f(s.abs_slope.mean) << ',' << f(s.abs_slope.median) << ','
         << f(s.abs_slope.max) << '\n';
      js.push_back({{"layer", s.layer}, {"abs_slope", detail::summary_json(s.abs_slope)}});
    }
    io::write_text(out / "slopes.csv", cs.str());
    rep["slopes"] = js;
  }
  {
    std::ostringstream cs;
    cs << "chain,component,explained";
    for (std::size_t l = 0; l < layout.layer_count(); ++l) cs << ",loading_layer_" << l;
    cs << '\n';
    for (const auto& c : ok.chains) {
      const std::size_t k = std::min<std::size_t>(3, d);
      if (c.size() < k + 1) continue;
      const auto p = pca_path(c.samples, layout, k);
      for (std::size_t i = 0; i < p.explained.size(); ++i) {
        cs << c.chain_id << ',' << i << ',' << f(p.explained[i]);
        for (double v : p.layer_loading) cs << ',' << f(v);
        cs << '\n';
      }
    }
    io::write_text(out / "pca.csv", cs.str());
  }

  // Function space.
  const auto preds = predict_chains(spec, ok, test.X, cfg.max_draws);
  const Metrics bnn = detail::mixture_metrics(preds, test.y, 0);
  rep["bnn"] = detail::metrics_json(bnn);
  {
    std::ostringstream cs;
    cs << "chain,l,lppd\n";
    json conv = json::array();
    for (const auto& p : preds) {
      const auto seq = cumulative_lppd(p.mu, p.sd, test.y);
      ConvergenceMonitor mon;
      mon.epsilon = cfg.epsilon;
      mon.window = cfg.window;
      mon.history = seq;
      for (std::size_t l = 0; l < seq.size(); ++l) cs << p.chain_id << ',' << l + 1 << ',' << f(seq[l]) << '\n';
      conv.push_back({{"chain", p.chain_id},
                      {"final_lppd", seq.back()},
                      {"state", to_string(convergence_check(mon, seq.size()))}});
    }
    io::write_text(out / "cumulative_lppd.csv", cs.str());
    rep["convergence"] = conv;
  }
  {
    std::ostringstream cs;
    cs << "chain,sample,lpl,rmse\n";
    for (const auto& p : preds) {
      const auto lpl = lpl_trace(p, test.y);
      const auto rm = rmse_trace(p, test.y);
      for (std::size_t s = 0; s < lpl.size(); ++s) cs << p.chain_id << ',' << s << ',' << f(lpl[s]) << ',' << f(rm[s]) << '\n';
    }
    io::write_text(out / "functional_traces.csv", cs.str());
  }
  {
    std::ostringstream cs;
    cs << "chain,sample";
    for (std::size_t i = 0; i < test.size(); ++i) cs << ",point_" << i;
    cs << '\n';
    for (const auto& p : preds) {
      const Matrix dr = psc_draws(p, cfg.seed);
      for (Eigen::Index s = 0; s < dr.rows(); ++s) {
        cs << p.chain_id << ',' << s;
        for (Eigen::Index i = 0; i < dr.cols(); ++i) cs << ',' << f(dr(s, i));
        cs << '\n';
      }
    }
    io::write_text(out / "psc_draws.csv", cs.str());
  }
  {
    std::ostringstream cs;
    cs << "functional,index,status,value\n";
    json jf;
    for (auto kind : {FunctionalKind::lpl, FunctionalKind::rmse, FunctionalKind::psc}) {
      std::vector<DiagValue> v;
      if (multi) v = functional_rhat(ok, preds, test.y, kind, cfg.kappa, cfg.rank_normalize, cfg.seed);
      for (std::size_t i = 0; i < v.size(); ++i) {
        cs << to_string(kind) << ',' << i << ',' << to_string(v[i].status) << ',' << (v[i].ok() ? f(v[i].value) : "")
           << '\n';
      }
      if (!multi) {
        jf[to_string(kind)] = "unavailable";
      } else if (kind == FunctionalKind::psc) {
        std::vector<double> vals;
        for (const auto& x : v) if (x.ok()) vals.push_back(x.value);
        jf["psc"] = detail::summary_json(summarize(vals));
      } else {
        jf[to_string(kind)] = detail::diag_json(v.front());
      }
    }
    std::vector<double> ident;
    for (const auto& x : rh) if (x.ok()) ident.push_back(x.value);
    jf["identity"] = multi ? detail::summary_json(summarize(ident)) : json("unavailable");
    io::write_text(out / "functional_rhat.csv", cs.str());
    rep["functional_rhat"] = jf;
  }
  {
    const PredictiveMixture mix = pool_mixture(preds);
    const auto cov = coverage(mix, test.y, cfg.coverage_levels, hash_keys({cfg.seed, kCoverageSeedTag}));
    std::ostringstream cs;
    cs << "level,empirical\n";
    for (std::size_t l = 0; l < cov.levels.size(); ++l) cs << f(cov.levels[l]) << ',' << f(cov.empirical[l]) << '\n';
    io::write_text(out / "coverage.csv", cs.str());
    rep["coverage"] = {{"levels", cov.levels}, {"empirical", cov.empirical}};
    if (cov.few_components) rep["warnings"].push_back("coverage from fewer than 100 mixture components");
  }
  io::write_json(out / "report.json", rep);
  return rep;
}

// ----------------------------------------------------------------- grid-111

struct GridSpec {
  std::vector<Activation> activations{Activation::tanh(), Activation::relu()};
  std::vector<double> taus{0.1, 1.0, 10.0};  // prior variances: N(0, tau)
  double x = 1.0;
  double y = 1.0;
  double noise_sd = 0.5;
  double lo = -3.0;
  double hi = 3.0;
  std::size_t resolution = 301;
  std::string output = "grid";

  void validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorKind::validation, "grid-111: " + m); };
    if (activations.empty() || taus.empty()) bad("need at least one activation and one tau");
    for (double t : taus) if (!(t > 0.0)) bad("tau must be positive");
    if (!(hi > lo)) bad("range must satisfy lo < hi");
    if (resolution < 2 || resolution > 2000) bad("resolution must lie in [2, 2000]");
    if (!(noise_sd > 0.0)) bad("noise_sd must be positive");
  }
};

struct GridResult {
  Vector axis;
  Matrix log_lik;   // (i, j): w1 = axis[i], w2 = axis[j]
  Matrix log_post;
  std::vector<std::uint8_t> ml_set;  // row-major, same indexing
  double argmax_w1 = 0.0, argmax_w2 = 0.0;
};

/// 1-1-1 network without biases: y = h(w1 x) w2 + noise.
inline NetworkSpec grid_network(const Activation& a, double noise_sd) {
  NetworkSpec s;
  s.input_dim = 1;
  s.hidden_widths = {1};
  s.activation = a;
  s.bias = false;
  s.head = OutputHead::fixed_noise;
  s.noise_sd = noise_sd;
  return s;
}

/// Grid keys: activations, taus (comma lists), x, y, noise_sd, lo, hi,
/// resolution, output. Same syntax as the experiment config.
inline void set_grid_value(GridSpec& g, const std::string& key, const std::string& v) {
  using namespace detail;
  if (key == "activations") {
    g.activations.clear();
    for (const auto& a : split_list(v)) g.activations.push_back(parse_activation(a));
  } else if (key == "taus") {
    g.taus.clear();
    for (const auto& t : split_list(v)) g.taus.push_back(to_double(key, t));
  } else if (key == "x") g.x = to_double(key, v);
  else if (key == "y") g.y = to_double(key, v);
  else if (key == "noise_sd") g.noise_sd = to_double(key, v);
  else if (key == "lo") g.lo = to_double(key, v);
  else if (key == "hi") g.hi = to_double(key, v);
  else if (key == "resolution") g.resolution = static_cast<std::size_t>(to_uint(key, v));
  else if (key == "output") g.output = v;
  else throw Error(ErrorKind::validation, "unknown grid key '" + key + "'");
}

inline GridSpec parse_grid_spec(const std::string& text, const std::string& source, GridSpec g = {}) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = detail::trim_copy(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, 1, "expected key = value");
    try {
      set_grid_value(g, detail::trim_copy(body.substr(0, eq)), detail::trim_copy(body.substr(eq + 1)));
    } catch (const std::exception& e) {
      throw ParseError(source, lineno, eq + 2, e.what());
    }
  }
  return g;
}

inline GridResult grid_111(const GridSpec& g, const Activation& a, double tau) {
  const NetworkSpec spec = grid_network(a, g.noise_sd);
  Dataset one;
  one.X = Matrix::Constant(1, 1, g.x);
  one.y = Vector::Constant(1, g.y);
  const PriorSpec prior{DensityFamily::gaussian, std::sqrt(tau)};
  const auto n = static_cast<Eigen::Index>(g.resolution);
  GridResult r;
  r.axis = Vector::LinSpaced(n, g.lo, g.hi);
  r.log_lik.resize(n, n);
  r.log_post.resize(n, n);
  Matrix resid(n, n);
  Vector theta(2);
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      theta << r.axis[i], r.axis[j];
      r.log_lik(i, j) = log_likelihood(spec, theta, one);
      r.log_post(i, j) = r.log_lik(i, j) + log_prior(theta, prior);
      resid(i, j) = a.value(r.axis[i] * g.x) * r.axis[j] - g.y;
      if (r.log_post(i, j) > best) {
        best = r.log_post(i, j);
        r.argmax_w1 = r.axis[i];
        r.argmax_w2 = r.axis[j];
      }
    }
  }
  // A cell is on the ML set when the residual is zero there or changes sign
  // towards its next neighbour along either axis.
  r.ml_set.assign(static_cast<std::size_t>(n * n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = resid(i, j);
      bool on = v == 0.0;
      if (i + 1 < n && v * resid(i + 1, j) < 0.0) on = true;
      if (j + 1 < n && v * resid(i, j + 1) < 0.0) on = true;
      r.ml_set[static_cast<std::size_t>(i * n + j)] = on ? 1 : 0;
    }
  }
  return r;
}

inline std::string grid_file_name(const Activation& a, double tau) {
  return "grid_" + to_string(a) + "_tau" + io::format_shortest(tau) + ".csv";
}

inline json cmd_grid_111(const GridSpec& g, const RunOptions& opts = {}) {
  g.validate();
  const fs::path out = resolve_output(g.output);
  detail::guard_outputs(out, "grid.json", opts.overwrite);
  json j;
  j["format_version"] = io::kFormatVersion;
  j["x"] = g.x;
  j["y"] = g.y;
  j["noise_sd"] = g.noise_sd;
  j["range"] = {g.lo, g.hi};
  j["resolution"] = g.resolution;
  j["grids"] = json::array();
  for (const auto& a : g.activations) {
    for (double tau : g.taus) {
      const GridResult r = grid_111(g, a, tau);
      std::ostringstream cs;
      cs << "w1,w2,log_lik,log_post,ml_set\n";
      const auto n = r.axis.size();
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
          cs << detail::f(r.axis[i]) << ',' << detail::f(r.axis[k]) << ',' << detail::f(r.log_lik(i, k)) << ','
             << detail::f(r.log_post(i, k)) << ',' << int(r.ml_set[static_cast<std::size_t>(i * n + k)]) << '\n';
        }
      }
      const std::string file = grid_file_name(a, tau);
      io::write_text(out / file, cs.str());
      j["grids"].push_back({{"activation", to_string(a)},
                            {"tau", tau},
                            {"file", file},
                            {"argmax", {r.argmax_w1, r.argmax_w2}},
                            {"max_log_post", r.log_post.maxCoeff()}});
    }
  }
  io::write_json(out / "grid.json", j);
  return j;
}

// ------------------------------------------------------------------ report

inline const std::vector<std::size_t>& report_truncations() {
  static const std::vector<std::size_t> t{10, 100, 1000};
  return t;
}

/// Metrics of one run directory; truncated columns are null when a chain
/// holds fewer draws than the truncation.
inline json run_metrics(const fs::path& dir) {
  const LoadedRun run = load_run(dir);
  const NetworkSpec& spec = run.data.spec;
  const Dataset& test = run.data.split.test;
  const ChainSet ok = run.chains.subset(run.chains.successful());
  json j;
  j["group"] = run.config.group_key();
  j["data"] = run.config.data_label();
  j["network"] = io::spec_to_json(spec);
  j["test_points"] = test.size();
  j["replicate"] = run.config.split.replicate;
  const LinearBaseline lm = lm_fit_eval(run.data.split.train, test);
  j["lm_rmse"] = lm.test.rmse;
  j["lm_lppd"] = lm.test.lppd;
  const FilterReport fr = filter_chains(spec, run.chains, test.X, test.y, lm.test.rmse);
  j["retained_proportion"] = fr.retained_proportion;
  if (!ok.chains.empty()) {
    std::size_t S = ok.chains.front().size();
    for (const auto& c : ok.chains) S = std::min(S, c.size());
    const auto preds = predict_chains(spec, ok, test.X);
    const Metrics all = detail::mixture_metrics(preds, test.y, 0);
    j["bnn_rmse"] = all.rmse;
    j["bnn_lppd"] = all.lppd;
    for (std::size_t t : report_truncations()) {
      const std::string sfx = "_" + std::to_string(t);
      if (S >= t) {
        const Metrics m = detail::mixture_metrics(preds, test.y, t);
        j["bnn_rmse" + sfx] = m.rmse;
        j["bnn_lppd" + sfx] = m.lppd;
      } else {
        j["bnn_rmse" + sfx] = nullptr;
        j["bnn_lppd" + sfx] = nullptr;
      }
    }
  }
  // Ensemble metrics travel with the checkpoints of a warm-started run.
  fs::path de = dir / "de_metrics.json";
  if (!fs::exists(de) && !run.config.checkpoints.empty()) de = fs::path(run.config.checkpoints) / "de_metrics.json";
  if (fs::exists(de)) {
    const json dm = io::read_json(de);
    if (dm.contains("dnn")) {
      j["dnn_rmse"] = dm["dnn"]["rmse"];
      j["dnn_lppd"] = dm["dnn"]["lppd"];
      j["de_rmse"] = dm["de"]["rmse"];
      j["de_lppd"] = dm["de"]["lppd"];
    }
  }
  return j;
}

inline json cmd_report(const std::vector<fs::path>& runs, const std::optional<fs::path>& out_dir = std::nullopt) {
  if (runs.empty()) throw Error(ErrorKind::validation, "report: no run directories given");
  std::map<std::string, std::vector<json>> groups;
  for (const auto& r : runs) {
    json m = run_metrics(r);
    const std::string g = m["group"];
    auto& v = groups[g];
    if (!v.empty()) {
      const json& first = v.front();
      if (first["data"] != m["data"] || first["network"] != m["network"] || first["test_points"] != m["test_points"]) {
        throw Error(ErrorKind::schema, "report: run " + r.string() + " is incompatible with group '" + g +
                                           "' (data, network or test size differs)");
      }
    }
    v.push_back(std::move(m));
  }
  json rep;
  rep["format_version"] = io::kFormatVersion;
  rep["groups"] = json::array();
  std::ostringstream cs;
  cs << "group,metric,n,mean,sd\n";
  for (const auto& [g, rows] : groups) {
    std::vector<std::string> names;
    for (const auto& [k, v] : rows.front().items()) {
      if (v.is_number() && k != "test_points" && k != "replicate") names.push_back(k);
    }
    for (const auto& row : rows) {
      for (const auto& [k, v] : row.items()) {
        if (v.is_null() && std::find(names.begin(), names.end(), k) == names.end()) names.push_back(k);
      }
    }
    std::sort(names.begin(), names.end());
    json jg;
    jg["group"] = g;
    jg["runs"] = rows.size();
    json metrics = json::object();
    for (const auto& k : names) {
      std::vector<double> vals;
      for (const auto& row : rows) {
        if (row.contains(k) && row[k].is_number()) vals.push_back(row[k].get<double>());
      }
      double mean = 0.0, sd = std::numeric_limits<double>::quiet_NaN();
      for (double v : vals) mean += v / static_cast<double>(vals.size());
      if (vals.size() >= 2) {
        double ss = 0.0;
        for (double v : vals) ss += (v - mean) * (v - mean);
        sd = std::sqrt(ss / static_cast<double>(vals.size() - 1));
      }
      if (vals.empty()) mean = std::numeric_limits<double>::quiet_NaN();
      metrics[k] = {{"n", vals.size()}, {"mean", vals.empty() ? json(nullptr) : json(mean)},
                    {"sd", std::isnan(sd) ? json(nullptr) : json(sd)}};
      cs << g << ',' << k << ',' << vals.size() << ',' << (vals.empty() ? "" : detail::f(mean)) << ','
         << (std::isnan(sd) ? "" : detail::f(sd)) << '\n';
    }
    jg["metrics"] = metrics;
    jg["per_run"] = rows;
    rep["groups"].push_back(jg);
  }
  if (out_dir) {
    io::write_json(*out_dir / "benchmark.json", rep);
    io::write_text(*out_dir / "benchmark.csv", cs.str());
  }
  return rep;
}

}  // namespace bnn::experiment

#endif  // BNN_EXPERIMENT_COMMANDS_HPP
