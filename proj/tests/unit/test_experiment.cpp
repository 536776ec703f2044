#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

#include "bnn/experiment/commands.hpp"
#include "bnn/network/symmetry.hpp"
#include "support/oracles.hpp"

using namespace bnn;
using namespace bnn::experiment;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory per test, removed afterwards.
class Scratch {
 public:
  Scratch() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / ("bnnsbi_" + std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~Scratch() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& s) const { return (path_ / s).string(); }

 private:
  fs::path path_;
};

ExperimentConfig tiny_config(const Scratch& dir, const std::string& out) {
  ExperimentConfig c = parse_config_string(R"(
data.synthetic = sine
data.synthetic_n = 60
net.hidden = 4
chains = 2
samples = 40
sampler.warmup = 40
sampler.max_tree_depth = 5
de.members = 2
de.epochs = 100
seed = 3
)");
  c.output = dir / out;
  return c;
}

std::string slurp(const fs::path& p) { return io::read_text(p); }

}  // namespace

TEST(Format, SeventeenDigitsRoundTrip) {
  RngStream rng(1, 0);
  for (int i = 0; i < 2000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-300.0, 300.0));
    const std::string s = io::format_double(v);
    EXPECT_EQ(io::parse_double_cell(s, "t", 1, 1), v) << s;
  }
  EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(io::format_shortest(0.1), "0.1");
  EXPECT_EQ(io::parse_double_cell(io::format_shortest(1.0 / 3.0), "t", 1, 1), 1.0 / 3.0);
  EXPECT_EQ(io::format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_TRUE(std::isnan(io::parse_double_cell("nan", "t", 1, 1)));
}

TEST(Format, DrawsRoundTripAndErrors) {
  RngStream rng(2, 0);
  Matrix s = Matrix::NullaryExpr(7, 3, [&] { return rng.normal(); });
  std::ostringstream out;
  io::write_draws(out, 4, s);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "chain,sample_index,theta_0,theta_1,theta_2");
  std::istringstream in(out.str());
  const auto t = io::read_draws(in, "d.csv");
  EXPECT_EQ(t.theta, s);
  EXPECT_EQ(t.chain, std::vector<std::size_t>(7, 4));

  std::istringstream bad("chain,sample_index,theta_0\n0,0,1.5\n0,1,x\n");
  try {
    io::read_draws(bad, "d.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 3u);
  }
  std::istringstream ragged("chain,sample_index,theta_0\n0,0\n");
  EXPECT_THROW(io::read_draws(ragged, "d.csv"), ParseError);
}

TEST(Format, ChainAndCheckpointRoundTrip) {
  Scratch dir;
  RngStream rng(3, 0);
  Chain c;
  c.chain_id = 2;
  c.seed = 99;
  c.init = InitKind::prior_draw;
  c.samples = Matrix::NullaryExpr(5, 4, [&] { return rng.normal(); });
  c.log_p = Vector::NullaryExpr(5, [&] { return rng.normal(); });
  for (int s = 0; s < 5; ++s) c.stats.push_back({rng.uniform(), s % 2 == 0, s == 3, 7u, 3u, rng.normal()});
  c.step_size = 0.123;
  c.requested_samples = 8;
  c.stopped_early = true;
  io::write_chain(dir.path(), c, 5);
  const Chain r = io::read_chain(dir.path(), 2);
  EXPECT_EQ(r.samples, c.samples);
  EXPECT_EQ(r.log_p, c.log_p);
  ASSERT_EQ(r.stats.size(), 5u);
  EXPECT_EQ(r.stats[3].divergent, true);
  EXPECT_EQ(r.stats[4].energy_error, c.stats[4].energy_error);
  EXPECT_EQ(r.init, InitKind::prior_draw);
  EXPECT_EQ(r.step_size, 0.123);
  EXPECT_TRUE(r.stopped_early);

  NetworkSpec spec;
  spec.input_dim = 2;
  spec.hidden_widths = {3};
  const Vector th = oracle::random_theta(parameter_count(spec), rng, 1.0);
  io::write_checkpoint(dir.path(), 0, spec, th, -1.0);
  io::write_checkpoint(dir.path(), 2, spec, 2.0 * th, -1.0);  // member 1 diverged
  const auto back = io::read_checkpoints(dir.path(), spec);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], th);
  EXPECT_EQ(back[1], 2.0 * th);
  NetworkSpec other = spec;
  other.activation = Activation::relu();
  EXPECT_THROW(io::read_checkpoints(dir.path(), other), Error);
}

TEST(Config, ParseRoundTripAndErrors) {
  const ExperimentConfig c = parse_config_string(R"(
# comment line
net.hidden = 16, 16   # trailing comment
net.activation = leaky_relu:0.1
prior.scale = 0.5
sampler = hmc
hmc.step_size = 0.05
diag.coverage_levels = 0.5,0.9
# net.bias = false
)");
  EXPECT_EQ(c.network.hidden_widths, (std::vector<std::size_t>{16, 16}));
  EXPECT_EQ(c.network.activation.kind, ActivationKind::leaky_relu);
  EXPECT_EQ(c.network.activation.parameter, 0.1);
  EXPECT_EQ(c.sampler.kind, SamplerKind::hmc);
  EXPECT_EQ(c.coverage_levels, (std::vector<double>{0.5, 0.9}));
}

TEST(Config, RejectsUnknownDuplicateAndMalformed) {
  auto parse_error_line = [](const std::string& text) -> std::size_t {
    try {
      parse_config_string(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(parse_error_line("chains = 2\nbogus = 1\n"), 2u);
  EXPECT_EQ(parse_error_line("chains = 2\nchains = 3\n"), 2u);
  EXPECT_EQ(parse_error_line("\n\nchains = two\n"), 3u);
  EXPECT_EQ(parse_error_line("chains 2\n"), 1u);
  EXPECT_EQ(parse_error_line("net.activation = swish\n"), 1u);
}

TEST(Config, TextRoundTrip) {
  ExperimentConfig c;
  c.network.hidden_widths = {8, 4};
  c.network.activation = Activation::truncated_relu(2.5);
  c.prior.family = DensityFamily::laplace;
  c.epsilon = std::numeric_limits<double>::infinity();
  c.seed = 12345678901234ULL;
  c.synthetic = "friedman";
  const std::string text = to_text(c);
  const ExperimentConfig r = parse_config_string(text);
  EXPECT_EQ(to_text(r), text);
  EXPECT_EQ(r.seed, c.seed);
  EXPECT_EQ(r.network.activation.parameter, 2.5);
}

TEST(Config, ValidationBeforeCompute) {
  ExperimentConfig c;
  c.data_path = "/nonexistent/data.csv";
  try {
    cmd_sample(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validation);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/data.csv"), std::string::npos);
  }
  ExperimentConfig w;
  w.synthetic = "sine";
  w.init = InitKind::warm_start;
  EXPECT_THROW(w.validate(), Error);
  ExperimentConfig z;
  z.synthetic = "sine";
  z.chains = 0;
  EXPECT_THROW(z.validate(), Error);
}

TEST(Grid111, TanhPointSymmetry) {
  GridSpec g;
  g.resolution = 61;
  const auto r = grid_111(g, Activation::tanh(), 1.0);
  const auto n = r.axis.size();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) worst = std::max(worst, std::abs(r.log_post(i, j) - r.log_post(n - 1 - i, n - 1 - j)));
  EXPECT_LE(worst, 1e-10);
  // ML set hyperbola tanh(w1) w2 = y passes near (atanh(0.5)... ) and is symmetric too.
  std::size_t marked = 0;
  for (auto m : r.ml_set) marked += m;
  EXPECT_GT(marked, 0u);
}

TEST(Grid111, ReluPlateauAndPriorShrinkage) {
  GridSpec g;
  g.resolution = 61;
  const auto r = grid_111(g, Activation::relu(), 1.0);
  const double ref = r.log_lik(0, 0);
  for (Eigen::Index i = 0; i < r.axis.size(); ++i) {
    if (r.axis[i] >= 0.0) continue;
    for (Eigen::Index j = 0; j < r.axis.size(); ++j) EXPECT_DOUBLE_EQ(r.log_lik(i, j), ref);
  }
  for (const auto& a : {Activation::tanh(), Activation::relu()}) {
    const auto wide = grid_111(g, a, 10.0), narrow = grid_111(g, a, 0.05);
    EXPECT_LT(std::hypot(narrow.argmax_w1, narrow.argmax_w2), std::hypot(wide.argmax_w1, wide.argmax_w2));
  }
  GridSpec bad = g;
  bad.resolution = 2001;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Commands, TrainDeDeterministicAndRefusesOverwrite) {
  Scratch dir;
  ExperimentConfig c = tiny_config(dir, "de");
  const auto a = cmd_train_de(c);
  EXPECT_EQ(a["members_ok"], 2);
  EXPECT_TRUE(fs::exists(dir.path() / "de" / "member_001.csv"));
  EXPECT_THROW(cmd_train_de(c), Error);
  const auto b = cmd_train_de(c, {2, true});
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Commands, SampleDiagnoseSingleChain) {
  Scratch dir;
  ExperimentConfig c = tiny_config(dir, "one");
  c.chains = 1;
  cmd_sample(c);
  EXPECT_THROW(cmd_sample(c), Error);
  const auto rep = cmd_diagnose(dir.path() / "one");
  EXPECT_EQ(rep["functional_rhat"]["lpl"], "unavailable");
  EXPECT_EQ(rep["rhat_layers"][0]["rhat"], "unavailable");
  EXPECT_TRUE(rep["rhat_layers"][0]["crhat"].is_object());
  EXPECT_TRUE(rep["layer_variance"][0]["within"].is_object());
}

TEST(Commands, DiagnoseIsByteStable) {
  Scratch dir;
  ExperimentConfig c = tiny_config(dir, "run");
  cmd_sample(c);
  cmd_diagnose(dir.path() / "run");
  const std::string first = slurp(dir.path() / "run" / "report.json");
  cmd_diagnose(dir.path() / "run");
  EXPECT_EQ(first, slurp(dir.path() / "run" / "report.json"));
  const auto other = cmd_diagnose(dir.path() / "run", dir.path() / "k4", {"diag.kappa=4"});
  EXPECT_EQ(other["rhat_settings"]["kappa"], 4);
}

TEST(Commands, EquioutputChainsInReport) {
  // A run directory whose second chain is the first with hidden units
  // permuted: same function, different parameters.
  Scratch dir;
  ExperimentConfig c = tiny_config(dir, "perm");
  const fs::path out = c.output;
  const LoadedData d = load_data(c);
  RngStream rng(5, 0);
  const Vector center = oracle::random_theta(parameter_count(d.spec), rng, 1.0);
  Chain a;
  a.samples.resize(100, center.size());
  for (Eigen::Index s = 0; s < 100; ++s)
    for (Eigen::Index j = 0; j < center.size(); ++j) a.samples(s, j) = center[j] + 0.01 * rng.normal();
  a.log_p = Vector::Zero(100);
  a.stats.assign(100, TransitionStats{});
  a.requested_samples = 100;
  Chain b = a;
  b.chain_id = 1;
  for (Eigen::Index s = 0; s < 100; ++s)
    b.samples.row(s) = permute_hidden(d.spec, a.samples.row(s).transpose(), 0, {1, 2, 3, 0}).transpose();
  io::write_text(out / "config.txt", to_text(c));
  io::write_chain(out, a);
  io::write_chain(out, b);
  const auto rep = cmd_diagnose(out);
  EXPECT_GT(rep["functional_rhat"]["identity"]["max"].get<double>(), 1.1);
  EXPECT_LE(rep["functional_rhat"]["lpl"]["value"].get<double>(), 1.01);
}

TEST(Commands, MalformedDumpIsAddressed) {
  Scratch dir;
  ExperimentConfig c = tiny_config(dir, "run");
  c.chains = 1;
  cmd_sample(c);
  const fs::path csv = dir.path() / "run" / "chain_000.csv";
  std::string text = slurp(csv);
  const auto second_line = text.find('\n') + 1;
  text.replace(text.find(',', text.find(',', second_line) + 1) + 1, 3, "abc");
  io::write_text(csv, text);
  try {
    cmd_diagnose(dir.path() / "run");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 3u);
    EXPECT_NE(std::string(e.what()).find("chain_000.csv"), std::string::npos);
  }
}

TEST(Commands, ReportAggregatesReplicates) {
  Scratch dir;
  std::vector<fs::path> runs;
  for (int r = 0; r < 3; ++r) {
    ExperimentConfig c = tiny_config(dir, "rep" + std::to_string(r));
    c.split.replicate = static_cast<std::uint64_t>(r);
    c.samples = 100;
    cmd_sample(c);
    runs.push_back(c.output);
  }
  const auto rep = cmd_report(runs, dir.path());
  ASSERT_EQ(rep["groups"].size(), 1u);
  const auto& m = rep["groups"][0]["metrics"];
  EXPECT_EQ(m["bnn_rmse"]["n"], 3);
  EXPECT_TRUE(m["bnn_rmse"]["sd"].is_number());
  EXPECT_TRUE(m["bnn_lppd_100"]["mean"].is_number());
  EXPECT_TRUE(m["bnn_lppd_1000"]["mean"].is_null());
  EXPECT_TRUE(fs::exists(dir.path() / "benchmark.csv"));

  ExperimentConfig odd = tiny_config(dir, "odd");
  odd.network.hidden_widths = {3};
  odd.group = rep["groups"][0]["group"];
  cmd_sample(odd);
  runs.push_back(odd.output);
  EXPECT_THROW(cmd_report(runs), Error);
}

TEST(Commands, EarlyStopRecordsIndex) {
  Scratch dir;
  ExperimentConfig c = tiny_config(dir, "es");
  c.early_stop = true;
  c.epsilon = std::numeric_limits<double>::infinity();
  c.window = 10;
  c.chains = 1;
  c.samples = 40;
  cmd_sample(c);
  const Chain r = io::read_chain(c.output, 0);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.size(), 11u);
  EXPECT_EQ(io::read_json(fs::path(c.output) / "chain_000.json")["stop_index"], 11);
}

TEST(Commands, OutputRootEnvironment) {
  Scratch dir;
  ::setenv("BNNSBI_OUTPUT_ROOT", dir.path().c_str(), 1);
  EXPECT_EQ(resolve_output("x/y"), dir.path() / "x/y");
  EXPECT_EQ(resolve_output("/abs"), fs::path("/abs"));
  ::unsetenv("BNNSBI_OUTPUT_ROOT");
  EXPECT_EQ(resolve_output("x"), fs::path("x"));
}
