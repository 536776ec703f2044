#ifndef BNN_IO_FORMAT_HPP
#define BNN_IO_FORMAT_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bnn/error.hpp"
#include "bnn/network/spec.hpp"
#include "bnn/sampling/chain.hpp"

// Run-directory file formats. Every CSV written here is read back by the
// matching reader in this header.
//
//   chain_KKK.csv        chain,sample_index,theta_0..theta_{d-1}
//   chain_KKK_stats.csv  per-draw transition statistics
//   chain_KKK.json       chain metadata (status, step size, stop index)
//   member_MMM.csv/json  ensemble checkpoint: chain CSV layout + layout sidecar

namespace bnn::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

/// 17 significant digits; nan / inf / -inf spelled out.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

/// Shortest text that parses back to exactly v; for files people edit.
inline std::string format_shortest(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double_cell(std::string_view s, const std::string& source, std::size_t line, std::size_t col) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ParseError(source, line, col, "expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

inline std::size_t parse_index_cell(std::string_view s, const std::string& source, std::size_t line, std::size_t col) {
  std::size_t v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ParseError(source, line, col, "expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto p = line.find(',', start);
    out.push_back(line.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

// ---- files ----

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::string indexed_name(const std::string& stem, std::size_t k, const std::string& suffix) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", k);
  return stem + "_" + buf + suffix;
}

// ---- draws: chain,sample_index,theta_* ----

struct DrawTable {
  std::vector<std::size_t> chain;
  std::vector<std::size_t> sample_index;
  Matrix theta;  // rows x d
};

inline std::string draws_header(std::size_t d) {
  std::string h = "chain,sample_index";
  for (std::size_t j = 0; j < d; ++j) h += ",theta_" + std::to_string(j);
  return h;
}

inline void write_draws(std::ostream& out, std::size_t chain_id, const Matrix& samples) {
  out << draws_header(static_cast<std::size_t>(samples.cols())) << '\n';
  for (Eigen::Index s = 0; s < samples.rows(); ++s) {
    out << chain_id << ',' << s;
    for (Eigen::Index j = 0; j < samples.cols(); ++j) out << ',' << format_double(samples(s, j));
    out << '\n';
  }
}

inline DrawTable read_draws(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, 1, "empty file (expected a header)");
  const auto head = split_commas(line);
  if (head.size() < 2 || head[0] != "chain" || head[1] != "sample_index") {
    throw ParseError(source, 1, 1, "header must start with chain,sample_index");
  }
  const std::size_t d = head.size() - 2;
  for (std::size_t j = 0; j < d; ++j) {
    if (head[j + 2] != "theta_" + std::to_string(j)) {
      throw ParseError(source, 1, j + 3, "expected column theta_" + std::to_string(j));
    }
  }
  DrawTable t;
  std::vector<double> values;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != d + 2) {
      throw ParseError(source, lineno, 1, "expected " + std::to_string(d + 2) + " cells, found " +
                                              std::to_string(cells.size()));
    }
    t.chain.push_back(parse_index_cell(cells[0], source, lineno, 1));
    t.sample_index.push_back(parse_index_cell(cells[1], source, lineno, 2));
    for (std::size_t j = 0; j < d; ++j) values.push_back(parse_double_cell(cells[j + 2], source, lineno, j + 3));
  }
  t.theta.resize(static_cast<Eigen::Index>(t.chain.size()), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < t.theta.rows(); ++r) {
    for (Eigen::Index j = 0; j < t.theta.cols(); ++j) t.theta(r, j) = values[static_cast<std::size_t>(r) * d + static_cast<std::size_t>(j)];
  }
  return t;
}

// ---- transition statistics ----

inline constexpr std::string_view kStatsHeader =
    "sample_index,log_p,accept_stat,accepted,divergent,n_leapfrog,tree_depth,energy_error";

inline void write_stats(std::ostream& out, const Chain& c) {
  out << kStatsHeader << '\n';
  for (std::size_t s = 0; s < c.stats.size(); ++s) {
    const auto& st = c.stats[s];
    out << s << ',' << format_double(c.log_p[static_cast<Eigen::Index>(s)]) << ',' << format_double(st.accept_stat)
        << ',' << (st.accepted ? 1 : 0) << ',' << (st.divergent ? 1 : 0) << ',' << st.n_leapfrog << ','
        << st.tree_depth << ',' << format_double(st.energy_error) << '\n';
  }
}

inline void read_stats(std::istream& in, const std::string& source, Chain& c) {
  std::string line;
  if (!std::getline(in, line) || line != kStatsHeader) {
    throw ParseError(source, 1, 1, "stats header must be " + std::string(kStatsHeader));
  }
  std::vector<double> lp;
  c.stats.clear();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_commas(line);
    if (f.size() != 8) throw ParseError(source, lineno, 1, "expected 8 cells, found " + std::to_string(f.size()));
    if (parse_index_cell(f[0], source, lineno, 1) != c.stats.size()) {
      throw ParseError(source, lineno, 1, "sample_index out of sequence");
    }
    lp.push_back(parse_double_cell(f[1], source, lineno, 2));
    TransitionStats st;
    st.accept_stat = parse_double_cell(f[2], source, lineno, 3);
    st.accepted = parse_index_cell(f[3], source, lineno, 4) != 0;
    st.divergent = parse_index_cell(f[4], source, lineno, 5) != 0;
    st.n_leapfrog = parse_index_cell(f[5], source, lineno, 6);
    st.tree_depth = parse_index_cell(f[6], source, lineno, 7);
    st.energy_error = parse_double_cell(f[7], source, lineno, 8);
    c.stats.push_back(st);
  }
  c.log_p = Eigen::Map<const Vector>(lp.data(), static_cast<Eigen::Index>(lp.size()));
}

// ---- metadata ----

/// Deterministic fields only; wall-clock time goes to timings.json.
inline json chain_metadata(const Chain& c, std::size_t stop_index = 0) {
  json j;
  j["format_version"] = kFormatVersion;
  j["chain"] = c.chain_id;
  j["seed"] = c.seed;
  j["init"] = to_string(c.init);
  j["status"] = c.ok() ? "ok" : "failed";
  j["failure"] = c.failure;
  j["dimension"] = c.samples.cols();
  j["requested_samples"] = c.requested_samples;
  j["recorded_samples"] = c.size();
  j["stopped_early"] = c.stopped_early;
  if (c.stopped_early) j["stop_index"] = stop_index;
  j["step_size"] = c.step_size;
  j["warmup_accept_tail"] = c.warmup_accept_tail;
  j["warmup_divergences"] = c.warmup_divergences;
  j["divergences"] = c.divergences();
  j["accept_mean"] = c.accept_mean();
  return j;
}

inline double json_double(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline void check_version(const json& j, const std::string& source) {
  if (!j.contains("format_version") || j["format_version"].get<int>() != kFormatVersion) {
    throw Error(ErrorKind::schema, source + ": unsupported or missing format_version");
  }
}

inline Chain chain_from_metadata(const json& j, const std::string& source) {
  check_version(j, source);
  try {
    Chain c;
    c.chain_id = j.at("chain").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.init = parse_init_kind(j.at("init").get<std::string>());
    c.status = j.at("status").get<std::string>() == "ok" ? ChainStatus::ok : ChainStatus::failed;
    c.failure = j.at("failure").get<std::string>();
    c.requested_samples = j.at("requested_samples").get<std::size_t>();
    c.stopped_early = j.at("stopped_early").get<bool>();
    c.step_size = json_double(j.at("step_size"));
    c.warmup_accept_tail = json_double(j.at("warmup_accept_tail"));
    c.warmup_divergences = j.at("warmup_divergences").get<std::size_t>();
    c.samples.resize(0, j.at("dimension").get<Eigen::Index>());
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, source + ": " + e.what());
  }
}

// ---- whole chains ----

inline void write_chain(const fs::path& dir, const Chain& c, std::size_t stop_index = 0) {
  std::ostringstream draws, stats;
  write_draws(draws, c.chain_id, c.samples);
  write_stats(stats, c);
  write_text(dir / indexed_name("chain", c.chain_id, ".csv"), draws.str());
  write_text(dir / indexed_name("chain", c.chain_id, "_stats.csv"), stats.str());
  write_json(dir / indexed_name("chain", c.chain_id, ".json"), chain_metadata(c, stop_index));
}

inline Chain read_chain(const fs::path& dir, std::size_t k) {
  const fs::path meta = dir / indexed_name("chain", k, ".json");
  Chain c = chain_from_metadata(read_json(meta), meta.string());
  const fs::path draws_path = dir / indexed_name("chain", k, ".csv");
  std::istringstream din(read_text(draws_path));
  const DrawTable t = read_draws(din, draws_path.string());
  const auto d = c.samples.cols();
  if (t.theta.rows() > 0 && t.theta.cols() != d) {
    throw Error(ErrorKind::schema, draws_path.string() + ": " + std::to_string(t.theta.cols()) +
                                       " parameters but metadata says " + std::to_string(d));
  }
  for (std::size_t r = 0; r < t.chain.size(); ++r) {
    if (t.chain[r] != k || t.sample_index[r] != r) {
      throw ParseError(draws_path.string(), r + 2, 1, "chain id or sample_index out of sequence");
    }
  }
  c.samples = t.theta.rows() > 0 ? t.theta : Matrix(0, d);
  const fs::path stats_path = dir / indexed_name("chain", k, "_stats.csv");
  std::istringstream sin(read_text(stats_path));
  read_stats(sin, stats_path.string(), c);
  if (c.stats.size() != c.size()) {
    throw Error(ErrorKind::schema, stats_path.string() + ": row count differs from " + draws_path.string());
  }
  return c;
}

/// Chains chain_000, chain_001, ... until the first missing index.
inline ChainSet read_chains(const fs::path& dir) {
  ChainSet set;
  for (std::size_t k = 0; fs::exists(dir / indexed_name("chain", k, ".json")); ++k) {
    set.chains.push_back(read_chain(dir, k));
  }
  if (set.chains.empty()) throw Error(ErrorKind::io, "no chain dumps in " + dir.string());
  return set;
}

// ---- network spec and checkpoints ----

inline json spec_to_json(const NetworkSpec& s) {
  json j;
  j["input_dim"] = s.input_dim;
  j["hidden"] = s.hidden_widths;
  j["activation"] = to_string(s.activation);
  j["activation_parameter"] = s.activation.parameter;
  j["bias"] = s.bias;
  j["head"] = s.head == OutputHead::heteroscedastic ? "heteroscedastic" : "fixed_noise";
  j["noise_sd"] = s.noise_sd;
  j["parameter_count"] = parameter_count(s);
  return j;
}

inline NetworkSpec spec_from_json(const json& j, const std::string& source) {
  try {
    NetworkSpec s;
    s.input_dim = j.at("input_dim").get<std::size_t>();
    s.hidden_widths = j.at("hidden").get<std::vector<std::size_t>>();
    s.activation = parse_activation(j.at("activation").get<std::string>());
    s.activation.parameter = j.at("activation_parameter").get<double>();
    s.bias = j.at("bias").get<bool>();
    s.head = j.at("head").get<std::string>() == "fixed_noise" ? OutputHead::fixed_noise : OutputHead::heteroscedastic;
    s.noise_sd = j.at("noise_sd").get<double>();
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, source + ": " + e.what());
  }
}

inline bool same_architecture(const NetworkSpec& a, const NetworkSpec& b) {
  return a.input_dim == b.input_dim && a.hidden_widths == b.hidden_widths && a.activation.kind == b.activation.kind &&
         a.activation.parameter == b.activation.parameter && a.bias == b.bias && a.head == b.head &&
         (a.head == OutputHead::heteroscedastic || a.noise_sd == b.noise_sd);
}

inline void write_checkpoint(const fs::path& dir, std::size_t m, const NetworkSpec& spec, const Vector& theta,
                             double final_nll) {
  Layout(spec).check(theta);
  std::ostringstream out;
  write_draws(out, m, theta.transpose());
  write_text(dir / indexed_name("member", m, ".csv"), out.str());
  json j;
  j["format_version"] = kFormatVersion;
  j["member"] = m;
  j["network"] = spec_to_json(spec);
  j["final_nll"] = final_nll;
  write_json(dir / indexed_name("member", m, ".json"), j);
}

/// Indices m of every member_MMM.json in dir, ascending. Diverged members
/// leave gaps.
inline std::vector<std::size_t> checkpoint_indices(const fs::path& dir) {
  std::vector<std::size_t> out;
  if (!fs::is_directory(dir)) throw Error(ErrorKind::io, "checkpoint directory " + dir.string() + " not found");
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() != 15 || name.rfind("member_", 0) != 0 || name.substr(10) != ".json") continue;
    std::size_t m = 0;
    auto r = std::from_chars(name.data() + 7, name.data() + 10, m);
    if (r.ec == std::errc() && r.ptr == name.data() + 10) out.push_back(m);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Every checkpoint in dir, by member index; each sidecar must match
/// `spec` exactly.
inline std::vector<Vector> read_checkpoints(const fs::path& dir, const NetworkSpec& spec) {
  std::vector<Vector> out;
  for (std::size_t m : checkpoint_indices(dir)) {
    const fs::path side = dir / indexed_name("member", m, ".json");
    const json j = read_json(side);
    check_version(j, side.string());
    const NetworkSpec ck = spec_from_json(j.at("network"), side.string());
    if (!same_architecture(ck, spec)) {
      throw Error(ErrorKind::schema, side.string() + ": checkpoint architecture differs from the configured network");
    }
    const fs::path csv = dir / indexed_name("member", m, ".csv");
    std::istringstream in(read_text(csv));
    const DrawTable t = read_draws(in, csv.string());
    if (t.theta.rows() != 1) throw Error(ErrorKind::schema, csv.string() + ": expected exactly one row");
    Vector theta = t.theta.row(0).transpose();
    Layout(spec).check(theta);
    out.push_back(std::move(theta));
  }
  if (out.empty()) throw Error(ErrorKind::io, "no checkpoints (member_*.json) in " + dir.string());
  return out;
}

}  // namespace bnn::io

#endif  // BNN_IO_FORMAT_HPP
