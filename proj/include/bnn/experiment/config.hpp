#ifndef BNN_EXPERIMENT_CONFIG_HPP
#define BNN_EXPERIMENT_CONFIG_HPP

#include <charconv>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bnn/data/split.hpp"
#include "bnn/data/synthetic.hpp"
#include "bnn/diagnostics/coverage.hpp"
#include "bnn/io/format.hpp"
#include "bnn/sampling/chain.hpp"
#include "bnn/training/adam.hpp"

// Flat key = value configuration, one key per line, '#' starts a comment.
// Keys and defaults are listed by `bnnsbi <command> --help-config` and in
// config_keys() below.

namespace bnn::experiment {

struct ExperimentConfig {
  // Data: a CSV path, or a synthetic generator when data.synthetic is set.
  std::string data_path;
  std::string data_target;  // empty: last column
  std::string synthetic;    // linear | sine | friedman
  std::size_t synthetic_n = 200;
  std::size_t synthetic_features = 3;
  double synthetic_noise = 0.1;
  SplitSpec split;

  NetworkSpec network;  // input_dim is filled in from the data
  PriorSpec prior;

  SamplerConfig sampler;
  std::size_t chains = 4;
  std::size_t samples = 1000;
  InitKind init = InitKind::cold_random;
  std::string checkpoints;  // warm_start: directory of member_*.csv

  std::size_t members = 12;
  AdamConfig adam;

  std::size_t kappa = 2;
  std::size_t crhat_kappa = 4;
  bool rank_normalize = true;
  double epsilon = 0.01;
  std::size_t window = 50;
  bool early_stop = false;
  std::vector<double> coverage_levels = default_coverage_levels();
  std::size_t max_draws = 0;  // per chain, for predictive diagnostics; 0 = all

  std::uint64_t seed = 0;
  std::string output = "run";
  std::string group;  // report grouping key; empty = derived

  std::string data_label() const {
    if (!synthetic.empty()) return "synthetic-" + synthetic;
    return std::filesystem::path(data_path).stem().string();
  }

  std::string group_key() const {
    if (!group.empty()) return group;
    std::string h;
    for (std::size_t i = 0; i < network.hidden_widths.size(); ++i) {
      h += (i ? "-" : "") + std::to_string(network.hidden_widths[i]);
    }
    return data_label() + "|" + (h.empty() ? "linear" : h) + "|" + to_string(network.activation) + "|" +
           to_string(init) + "|" + to_string(sampler.kind);
  }

  /// Checks everything that can be checked without loading data.
  void validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorKind::validation, m); };
    if (synthetic.empty()) {
      if (data_path.empty()) bad("data.path is required (or set data.synthetic)");
      if (!std::filesystem::exists(data_path)) bad("data.path '" + data_path + "' does not exist");
    } else {
      parse_synth_kind(synthetic);
      if (synthetic_n < 10) bad("data.synthetic_n must be at least 10");
      if (!(synthetic_noise >= 0.0)) bad("data.noise_sd must be non-negative");
    }
    split.validate();
    for (std::size_t w : network.hidden_widths) {
      if (w == 0) bad("net.hidden widths must be at least 1");
    }
    network.activation.validate();
    if (network.head == OutputHead::fixed_noise && !(network.noise_sd > 0.0)) bad("net.noise_sd must be positive");
    prior.validate();
    sampler.validate();
    if (chains == 0) bad("chains must be at least 1");
    if (samples == 0) bad("samples must be at least 1");
    if (init == InitKind::warm_start) {
      if (checkpoints.empty()) bad("init = warm_start needs init.checkpoints");
    }
    if (members == 0) bad("de.members must be at least 1");
    adam.validate();
    if (kappa < 1) bad("diag.kappa must be at least 1");
    if (crhat_kappa < 2) bad("diag.crhat_kappa must be at least 2");
    if (!(epsilon > 0.0)) bad("diag.epsilon must be positive");
    if (window < 1) bad("diag.window must be at least 1");
    for (double l : coverage_levels) {
      if (!(l > 0.0 && l < 1.0)) bad("diag.coverage_levels must lie in (0, 1)");
    }
    if (output.empty()) bad("output must not be empty");
  }
};

namespace detail {

inline std::string trim_copy(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(trim_copy(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!trim_copy(cur).empty() || !out.empty()) out.push_back(trim_copy(cur));
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  if (v == "inf") return std::numeric_limits<double>::infinity();
  double x = 0.0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw Error(ErrorKind::validation, key + ": expected a number, got '" + v + "'");
  }
  return x;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw Error(ErrorKind::validation, key + ": expected a non-negative integer, got '" + v + "'");
  }
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorKind::validation, key + ": expected true or false, got '" + v + "'");
}

inline std::string from_double(double v) { return io::format_shortest(v); }
inline std::string from_bool(bool v) { return v ? "true" : "false"; }

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) out += from_double(v[i]);
    else out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace detail

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

inline const std::vector<ConfigKey>& config_keys() {
  using C = ExperimentConfig;
  using namespace detail;
  auto sz = [](const std::string& k, const std::string& v) { return static_cast<std::size_t>(to_uint(k, v)); };
  static const std::vector<ConfigKey> keys = {
      {"data.path", "CSV file with a header row",
       [](C& c, const std::string& v) { c.data_path = v; }, [](const C& c) { return c.data_path; }},
      {"data.target", "target column name (empty: last column)",
       [](C& c, const std::string& v) { c.data_target = v; }, [](const C& c) { return c.data_target; }},
      {"data.synthetic", "linear | sine | friedman; replaces data.path",
       [](C& c, const std::string& v) { c.synthetic = v; }, [](const C& c) { return c.synthetic; }},
      {"data.synthetic_n", "rows generated",
       [sz](C& c, const std::string& v) { c.synthetic_n = sz("data.synthetic_n", v); },
       [](const C& c) { return std::to_string(c.synthetic_n); }},
      {"data.features", "features of the linear generator",
       [sz](C& c, const std::string& v) { c.synthetic_features = sz("data.features", v); },
       [](const C& c) { return std::to_string(c.synthetic_features); }},
      {"data.noise_sd", "label noise of the generator",
       [](C& c, const std::string& v) { c.synthetic_noise = to_double("data.noise_sd", v); },
       [](const C& c) { return from_double(c.synthetic_noise); }},
      {"split.test_fraction", "held-out share",
       [](C& c, const std::string& v) { c.split.test_fraction = to_double("split.test_fraction", v); },
       [](const C& c) { return from_double(c.split.test_fraction); }},
      {"split.replicate", "split replicate index",
       [](C& c, const std::string& v) { c.split.replicate = to_uint("split.replicate", v); },
       [](const C& c) { return std::to_string(c.split.replicate); }},
      {"split.max_rows", "subsample rows before splitting (0: all)",
       [sz](C& c, const std::string& v) { c.split.max_rows = sz("split.max_rows", v); },
       [](const C& c) { return std::to_string(c.split.max_rows); }},
      {"net.hidden", "hidden widths, e.g. 16,16 (empty: linear model)",
       [sz](C& c, const std::string& v) {
         c.network.hidden_widths.clear();
         for (const auto& w : split_list(v)) c.network.hidden_widths.push_back(sz("net.hidden", w));
       },
       [](const C& c) { return join(c.network.hidden_widths); }},
      {"net.activation", "tanh | relu | silu | leaky_relu[:slope] | truncated_relu[:cap]",
       [](C& c, const std::string& v) { c.network.activation = parse_activation(v); },
       [](const C& c) {
         const auto& a = c.network.activation;
         const bool param = a.kind == ActivationKind::leaky_relu || a.kind == ActivationKind::truncated_relu;
         return to_string(a) + (param ? ":" + from_double(a.parameter) : "");
       }},
      {"net.bias", "bias terms in every layer",
       [](C& c, const std::string& v) { c.network.bias = to_bool("net.bias", v); },
       [](const C& c) { return from_bool(c.network.bias); }},
      {"net.head", "heteroscedastic | fixed_noise",
       [](C& c, const std::string& v) {
         if (v == "heteroscedastic") c.network.head = OutputHead::heteroscedastic;
         else if (v == "fixed_noise") c.network.head = OutputHead::fixed_noise;
         else throw Error(ErrorKind::validation, "net.head: expected heteroscedastic or fixed_noise");
       },
       [](const C& c) {
         return std::string(c.network.head == OutputHead::heteroscedastic ? "heteroscedastic" : "fixed_noise");
       }},
      {"net.noise_sd", "observation sd of the fixed_noise head",
       [](C& c, const std::string& v) { c.network.noise_sd = to_double("net.noise_sd", v); },
       [](const C& c) { return from_double(c.network.noise_sd); }},
      {"prior.family", "gaussian | laplace",
       [](C& c, const std::string& v) {
         if (v == "gaussian") c.prior.family = DensityFamily::gaussian;
         else if (v == "laplace") c.prior.family = DensityFamily::laplace;
         else throw Error(ErrorKind::validation, "prior.family: expected gaussian or laplace");
       },
       [](const C& c) { return std::string(to_string(c.prior.family)); }},
      {"prior.scale", "prior scale (sd for gaussian)",
       [](C& c, const std::string& v) { c.prior.scale = to_double("prior.scale", v); },
       [](const C& c) { return from_double(c.prior.scale); }},
      {"sampler", "nuts | hmc",
       [](C& c, const std::string& v) { c.sampler.kind = parse_sampler_kind(v); },
       [](const C& c) { return std::string(to_string(c.sampler.kind)); }},
      {"sampler.warmup", "warmup transitions",
       [sz](C& c, const std::string& v) {
         c.sampler.nuts.warmup_steps = c.sampler.hmc.warmup_steps = sz("sampler.warmup", v);
       },
       [](const C& c) { return std::to_string(c.sampler.warmup_steps()); }},
      {"sampler.target_accept", "NUTS dual-averaging target",
       [](C& c, const std::string& v) { c.sampler.nuts.target_accept = to_double("sampler.target_accept", v); },
       [](const C& c) { return from_double(c.sampler.nuts.target_accept); }},
      {"sampler.max_tree_depth", "NUTS tree depth cap",
       [sz](C& c, const std::string& v) { c.sampler.nuts.max_tree_depth = sz("sampler.max_tree_depth", v); },
       [](const C& c) { return std::to_string(c.sampler.nuts.max_tree_depth); }},
      {"hmc.step_size", "HMC leapfrog step",
       [](C& c, const std::string& v) { c.sampler.hmc.step_size = to_double("hmc.step_size", v); },
       [](const C& c) { return from_double(c.sampler.hmc.step_size); }},
      {"hmc.trajectory_length", "HMC integration time",
       [](C& c, const std::string& v) { c.sampler.hmc.trajectory_length = to_double("hmc.trajectory_length", v); },
       [](const C& c) { return from_double(c.sampler.hmc.trajectory_length); }},
      {"chains", "number of chains K",
       [sz](C& c, const std::string& v) { c.chains = sz("chains", v); },
       [](const C& c) { return std::to_string(c.chains); }},
      {"samples", "recorded draws per chain S",
       [sz](C& c, const std::string& v) { c.samples = sz("samples", v); },
       [](const C& c) { return std::to_string(c.samples); }},
      {"init", "cold_random | prior_draw | warm_start",
       [](C& c, const std::string& v) { c.init = parse_init_kind(v); },
       [](const C& c) { return std::string(to_string(c.init)); }},
      {"init.checkpoints", "directory with member_*.csv for warm_start",
       [](C& c, const std::string& v) { c.checkpoints = v; }, [](const C& c) { return c.checkpoints; }},
      {"de.members", "ensemble members M",
       [sz](C& c, const std::string& v) { c.members = sz("de.members", v); },
       [](const C& c) { return std::to_string(c.members); }},
      {"de.lr", "Adam learning rate",
       [](C& c, const std::string& v) { c.adam.learning_rate = to_double("de.lr", v); },
       [](const C& c) { return from_double(c.adam.learning_rate); }},
      {"de.weight_decay", "decoupled weight decay",
       [](C& c, const std::string& v) { c.adam.weight_decay = to_double("de.weight_decay", v); },
       [](const C& c) { return from_double(c.adam.weight_decay); }},
      {"de.epochs", "full-batch epochs",
       [sz](C& c, const std::string& v) { c.adam.epochs = sz("de.epochs", v); },
       [](const C& c) { return std::to_string(c.adam.epochs); }},
      {"diag.kappa", "subchains per chain for split R-hat",
       [sz](C& c, const std::string& v) { c.kappa = sz("diag.kappa", v); },
       [](const C& c) { return std::to_string(c.kappa); }},
      {"diag.crhat_kappa", "subchains for the single-chain cR-hat",
       [sz](C& c, const std::string& v) { c.crhat_kappa = sz("diag.crhat_kappa", v); },
       [](const C& c) { return std::to_string(c.crhat_kappa); }},
      {"diag.rank_normalize", "rank-normalize before R-hat",
       [](C& c, const std::string& v) { c.rank_normalize = to_bool("diag.rank_normalize", v); },
       [](const C& c) { return from_bool(c.rank_normalize); }},
      {"diag.epsilon", "LPPD convergence threshold (inf disables)",
       [](C& c, const std::string& v) { c.epsilon = to_double("diag.epsilon", v); },
       [](const C& c) { return from_double(c.epsilon); }},
      {"diag.window", "LPPD convergence window",
       [sz](C& c, const std::string& v) { c.window = sz("diag.window", v); },
       [](const C& c) { return std::to_string(c.window); }},
      {"diag.early_stop", "stop chains once cumulative LPPD converges",
       [](C& c, const std::string& v) { c.early_stop = to_bool("diag.early_stop", v); },
       [](const C& c) { return from_bool(c.early_stop); }},
      {"diag.coverage_levels", "nominal interval levels",
       [](C& c, const std::string& v) {
         c.coverage_levels.clear();
         for (const auto& l : split_list(v)) c.coverage_levels.push_back(to_double("diag.coverage_levels", l));
       },
       [](const C& c) { return join(c.coverage_levels); }},
      {"diag.max_draws", "draws per chain used for predictive diagnostics (0: all)",
       [sz](C& c, const std::string& v) { c.max_draws = sz("diag.max_draws", v); },
       [](const C& c) { return std::to_string(c.max_draws); }},
      {"seed", "master seed",
       [](C& c, const std::string& v) { c.seed = to_uint("seed", v); },
       [](const C& c) { return std::to_string(c.seed); }},
      {"output", "run directory (relative paths resolve under BNNSBI_OUTPUT_ROOT)",
       [](C& c, const std::string& v) { c.output = v; }, [](const C& c) { return c.output; }},
      {"group", "report grouping key (empty: data|hidden|activation|init|sampler)",
       [](C& c, const std::string& v) { c.group = v; }, [](const C& c) { return c.group; }},
  };
  return keys;
}

inline const ConfigKey& find_key(const std::string& name) {
  for (const auto& k : config_keys()) {
    if (k.name == name) return k;
  }
  throw Error(ErrorKind::validation, "unknown config key '" + name + "'");
}

inline void set_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  find_key(key).set(c, value);
}

/// Applies "key=value" text on top of `base`.
inline ExperimentConfig parse_config(std::istream& in, const std::string& source, ExperimentConfig base = {}) {
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = detail::trim_copy(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, 1, "expected key = value");
    const std::string key = detail::trim_copy(body.substr(0, eq));
    const std::string value = detail::trim_copy(body.substr(eq + 1));
    if (auto it = seen.find(key); it != seen.end()) {
      throw ParseError(source, lineno, 1, "duplicate key '" + key + "' (first on line " + std::to_string(it->second) + ")");
    }
    seen[key] = lineno;
    try {
      set_value(base, key, value);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, lineno, eq + 2, e.what());
    } catch (const std::exception& e) {
      throw ParseError(source, lineno, eq + 2, key + ": " + e.what());
    }
  }
  return base;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::istringstream in(io::read_text(path));
  return parse_config(in, path.string());
}

inline ExperimentConfig parse_config_string(const std::string& text, ExperimentConfig base = {}) {
  std::istringstream in(text);
  return parse_config(in, "<string>", std::move(base));
}

/// Every key in table order; parse_config(to_text(c)) reproduces c.
inline std::string to_text(const ExperimentConfig& c) {
  std::string out;
  for (const auto& k : config_keys()) out += k.name + " = " + k.get(c) + "\n";
  return out;
}

}  // namespace bnn::experiment

#endif  // BNN_EXPERIMENT_CONFIG_HPP
