// cosamp: command-line front end for recovery experiments.
//
// Exit codes: 0 success, 1 bad config or input, 2 solver failure or RIP budget exceeded.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "cosamp/experiment.hpp"
#include "cosamp/io.hpp"

namespace fs = std::filesystem;
using namespace cosamp;

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  bool json = false;
  unsigned jobs = 1;
  std::optional<std::uint64_t> seed;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

ExperimentConfig load(const Options& opt) {
  ExperimentConfig cfg = load_config(opt.config);
  if (opt.seed) cfg.master_seed = *opt.seed;
  return cfg;
}

fs::path out_dir(const Options& opt) {
  fs::path dir(opt.out);
  fs::create_directories(dir);
  return dir;
}

int cmd_recover(const Options& opt) {
  const ExperimentConfig cfg = load(opt);
  const RecoverResult res = run_recover(cfg);
  const fs::path dir = out_dir(opt);
  write_text(dir / "report.json", res.json.dump(2) + "\n");
  write_text(dir / "trace.csv", res.trace_csv);
  const auto& truth = res.json.at("truth");
  if (opt.json) {
    std::cout << res.json.dump(2) << '\n';
  } else {
    std::cout << "iterations " << res.report.iterations_run << " (" << to_string(res.report.halt_reason) << ")\n"
              << "relative error " << fmt_num(truth.at("relative_error").get<double>()) << '\n';
  }
  for (const auto& w : res.report.warnings) log_message(LogLevel::Error, "warning: " + w);
  return 0;
}

int cmd_sweep(const Options& opt) {
  const ExperimentConfig cfg = load(opt);
  const SweepResult res = run_sweep(cfg, opt.jobs);
  const fs::path dir = out_dir(opt);
  const std::string csv = sweep_to_csv(res);
  write_text(dir / "sweep.csv", csv);
  write_text(dir / "sweep_timing.csv", sweep_timing_to_csv(res));
  if (!opt.json) std::cout << csv;
  return res.all_failed() ? 2 : 0;
}

int cmd_rip(const Options& opt, const std::optional<std::size_t>& r, const std::optional<std::string>& method,
            const std::optional<std::uint64_t>& trials, const std::optional<std::uint64_t>& budget) {
  ExperimentConfig cfg = load(opt);
  if (r) cfg.rip.r = *r;
  if (method) cfg.rip.method = *method;
  if (trials) cfg.rip.trials = *trials;
  if (budget) cfg.rip.budget = *budget;
  RipRun run;
  try {
    run = run_rip(cfg, opt.jobs);
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\nhint: rerun with --method monte_carlo --trials <count>\n";
    return 2;
  }
  if (opt.json) {
    nlohmann::json j = nlohmann::json::object();
    if (run.exhaustive) j["exhaustive"] = rip_to_json(*run.exhaustive);
    if (run.monte_carlo) j["monte_carlo"] = rip_to_json(*run.monte_carlo);
    std::cout << j.dump(2) << '\n';
  } else {
    if (run.exhaustive) std::cout << rip_to_text(*run.exhaustive) << '\n';
    if (run.monte_carlo) std::cout << rip_to_text(*run.monte_carlo) << '\n';
  }
  return 0;
}

int cmd_bench(const Options& opt) {
  const ExperimentConfig cfg = load(opt);
  const std::string csv = bench_to_csv(run_bench(cfg));
  write_text(out_dir(opt) / "bench.csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_gen_signal(const Options& opt) {
  const ExperimentConfig cfg = load(opt);
  const SignalVector x = run_gen_signal(cfg);
  const fs::path dir = out_dir(opt);
  write_signal((dir / "signal.csk").string(), x);
  if (opt.json) write_text(dir / "signal.json", signal_to_json(x).dump() + "\n");
  std::cout << "wrote " << (dir / "signal.csk").string() << " (N = " << x.size() << ", nonzeros = " << norms(x).l0
            << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse recovery experiments with CoSaMP"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_option("--config", opt.config, "experiment config (config_v1 JSON)");
  app.add_option("--out", opt.out, "output directory");
  app.add_flag("--json", opt.json, "machine-readable output");
  app.add_option("--jobs", opt.jobs, "worker threads for sweeps and RIP estimates")->check(CLI::PositiveNumber);
  app.add_option("--seed", opt.seed, "override the config master seed");

  auto* recover = app.add_subcommand("recover", "run one recovery, write report.json and trace.csv");
  auto* sweep = app.add_subcommand("sweep", "run a parameter grid, write sweep.csv");
  auto* rip = app.add_subcommand("rip", "estimate restricted isometry constants");
  auto* bench = app.add_subcommand("bench", "time each step of the loop, write bench.csv");
  auto* gen = app.add_subcommand("gen-signal", "write the configured test signal as CSK1");

  std::optional<std::size_t> rip_r;
  std::optional<std::string> rip_method;
  std::optional<std::uint64_t> rip_trials;
  std::optional<std::uint64_t> rip_budget;
  rip->add_option("--r", rip_r, "sparsity level r");
  rip->add_option("--method", rip_method, "exhaustive, monte_carlo or both");
  rip->add_option("--trials", rip_trials, "Monte Carlo support count");
  rip->add_option("--budget", rip_budget, "maximum supports for exhaustive search");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }
  if (opt.config.empty()) {
    std::cerr << "error: --config is required\n";
    return 1;
  }

  try {
    if (recover->parsed()) return cmd_recover(opt);
    if (sweep->parsed()) return cmd_sweep(opt);
    if (rip->parsed()) return cmd_rip(opt, rip_r, rip_method, rip_trials, rip_budget);
    if (bench->parsed()) return cmd_bench(opt);
    if (gen->parsed()) return cmd_gen_signal(opt);
  } catch (const SolverError& e) {
    std::cerr << "solver error";
    if (e.iteration() > 0) std::cerr << " in iteration " << e.iteration();
    std::cerr << ": " << e.what() << '\n';
    return 2;
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
