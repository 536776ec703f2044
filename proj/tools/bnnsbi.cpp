// bnnsbi: experiment harness for sample-based inference in Bayesian
// neural networks.
//
//   bnnsbi train-de  --config run.cfg [--set key=value ...]
//   bnnsbi sample    --config run.cfg [--set key=value ...] [--jobs N] [--overwrite]
//   bnnsbi diagnose  RUN_DIR [--out DIR] [--set diag.kappa=4 ...]
//   bnnsbi report    RUN_DIR... [--out DIR]
//   bnnsbi grid-111  [--config grid.cfg] [--set key=value ...]
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 runtime
// failure (partial outputs are kept).

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bnn/experiment/commands.hpp"

namespace {

using namespace bnn;
using namespace bnn::experiment;

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::invalid_parameter:
    case ErrorKind::validation:
    case ErrorKind::parse:
    case ErrorKind::schema:
    case ErrorKind::io:
    case ErrorKind::layout:
    case ErrorKind::dimension:
    case ErrorKind::domain:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

struct CommonArgs {
  std::string config;
  std::vector<std::string> sets;
  std::size_t jobs = 1;
  bool overwrite = false;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool config_required) {
  auto* c = cmd->add_option("--config,-c", a.config, "key = value configuration file");
  if (config_required) c->required();
  cmd->add_option("--set,-s", a.sets, "override one key (key=value); repeatable");
  cmd->add_option("--jobs,-j", a.jobs, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  cmd->add_flag("--overwrite", a.overwrite, "replace outputs of an earlier run");
}

ExperimentConfig build_config(const CommonArgs& a) {
  ExperimentConfig cfg = a.config.empty() ? ExperimentConfig{} : load_config(a.config);
  apply_overrides(cfg, a.sets);
  return cfg;
}

void print(const io::json& j) { std::cout << j.dump(2) << '\n'; }

std::string key_listing() {
  ExperimentConfig defaults;
  std::string out = "Experiment config keys (default shown):\n";
  for (const auto& k : config_keys()) {
    out += "  " + k.name + " = " + k.get(defaults) + "\n      " + k.help + "\n";
  }
  out += "Grid keys: activations, taus, x, y, noise_sd, lo, hi, resolution, output\n";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sample-based inference for Bayesian neural networks"};
  app.require_subcommand(1);
  bool list_keys = false;
  app.add_flag("--list-keys", list_keys, "print every config key with its default and exit");

  CommonArgs train_args, sample_args, grid_args;
  auto* train = app.add_subcommand("train-de", "train a deep ensemble; write checkpoints and DNN/DE metrics");
  add_common(train, train_args, true);

  auto* sample = app.add_subcommand("sample", "run K chains; write chain dumps and metadata");
  add_common(sample, sample_args, true);

  std::string diag_run;
  std::optional<std::string> diag_out;
  std::vector<std::string> diag_sets;
  auto* diagnose = app.add_subcommand("diagnose", "compute diagnostics of a run; write report.json and CSVs");
  diagnose->add_option("run", diag_run, "run directory")->required();
  diagnose->add_option("--out,-o", diag_out, "output directory (default: the run directory)");
  diagnose->add_option("--set,-s", diag_sets, "override a key of the stored config (key=value)");

  std::vector<std::string> report_runs;
  std::optional<std::string> report_out;
  auto* report = app.add_subcommand("report", "aggregate runs into RMSE/LPPD tables");
  report->add_option("runs", report_runs, "run directories")->required();
  report->add_option("--out,-o", report_out, "write benchmark.json and benchmark.csv here");

  auto* grid = app.add_subcommand("grid-111", "log-posterior grid of a 1-1-1 network");
  add_common(grid, grid_args, false);

  if (argc > 1 && std::string(argv[1]) == "--list-keys") {
    std::cout << key_listing();
    return 0;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*train) {
      print(cmd_train_de(build_config(train_args), {train_args.jobs, train_args.overwrite}));
    } else if (*sample) {
      print(cmd_sample(build_config(sample_args), {sample_args.jobs, sample_args.overwrite}));
    } else if (*diagnose) {
      std::optional<std::filesystem::path> out;
      if (diag_out) out = *diag_out;
      print(cmd_diagnose(diag_run, out, diag_sets));
    } else if (*report) {
      std::vector<std::filesystem::path> runs(report_runs.begin(), report_runs.end());
      std::optional<std::filesystem::path> out;
      if (report_out) out = *report_out;
      print(cmd_report(runs, out));
    } else if (*grid) {
      GridSpec g;
      if (!grid_args.config.empty()) g = parse_grid_spec(io::read_text(grid_args.config), grid_args.config);
      for (const auto& s : grid_args.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::validation, "override '" + s + "' is not key=value");
        set_grid_value(g, s.substr(0, eq), s.substr(eq + 1));
      }
      print(cmd_grid_111(g, {grid_args.jobs, grid_args.overwrite}));
    }
  } catch (const Error& e) {
    std::cerr << "bnnsbi: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "bnnsbi: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
