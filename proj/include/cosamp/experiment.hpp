#pragma once

// Seeded experiments driven by a JSON config (schema "config_v1"): single
// recoveries, parameter sweeps, RIP estimates, step timings and signal
// generation. The command-line tool is a thin wrapper over this header.
//
// Seeds: every trial has seed derive_seed(master_seed, cell, trial). The
// operator, signal and noise each get mix64(trial_seed ^ salt) unless the
// config pins an explicit seed. A single recovery is cell 0, trial 0, so it
// reproduces the first trial of a 1 x 1 sweep.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cosamp/cosamp.hpp"
#include "cosamp/io.hpp"
#include "cosamp/operators.hpp"
#include "cosamp/parallel.hpp"
#include "cosamp/rip.hpp"
#include "cosamp/rng.hpp"
#include "cosamp/signals.hpp"
#include "cosamp/variants.hpp"

namespace cosamp {

/// Anything wrong with a config file: syntax, missing keys, bad values.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// ---- logging ----

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

inline LogLevel log_level_from_env() {
  const char* v = std::getenv("COSAMP_LOG");
  if (!v) return LogLevel::Error;
  const std::string s(v);
  if (s == "debug") return LogLevel::Debug;
  if (s == "info") return LogLevel::Info;
  return LogLevel::Error;
}

inline void log_message(LogLevel level, const std::string& msg) {
  static const LogLevel threshold = log_level_from_env();
  if (level > threshold) return;
  static const char* names[] = {"error", "info", "debug"};
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << '\n';
}

// ---- config ----

struct SignalSpec {
  enum class Model { Sparse, Compressible, File } model = Model::Sparse;
  std::optional<std::size_t> s;  // defaults to recovery.s
  MagnitudeLaw law;
  std::optional<std::uint64_t> seed;
  double p = 1.0;
  double radius = 1.0;
  std::optional<std::uint64_t> sign_seed;
  std::optional<std::uint64_t> permutation_seed;
  std::string path;
};

struct NoiseSpec {
  enum class Kind { None, Norm, Relative, Sigma } kind = Kind::None;
  double value = 0.0;
  std::optional<std::uint64_t> seed;
};

struct SweepAxes {
  std::vector<std::size_t> m;
  std::vector<std::size_t> s;
  std::vector<double> noise;
};

struct RipSpec {
  std::size_t r = 2;
  std::string method = "exhaustive";  // exhaustive | monte_carlo | both
  std::uint64_t trials = 10000;
  std::optional<std::uint64_t> seed;
  std::uint64_t budget = kDefaultRipBudget;
};

struct BenchSpec {
  std::vector<std::string> operators{"partial_fourier", "gaussian"};
  std::vector<std::size_t> n{1024, 2048};
  std::size_t m_divisor = 4;
  std::size_t s = 32;
  std::size_t iterations = 3;
  std::size_t repeats = 3;
};

struct ExperimentConfig {
  std::uint64_t master_seed = 0;
  OperatorDescriptor op;
  SignalSpec signal;
  NoiseSpec noise;
  RecoveryConfig recovery;
  VariantKind variant = VariantKind::Standard;
  bool polish = false;
  std::size_t trials = 1;
  SweepAxes sweep;
  std::optional<double> success_threshold;
  RipSpec rip;
  BenchSpec bench;
};

namespace detail {

inline std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

template <class T>
std::optional<T> get_opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
  const std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return p;
  return (base / path).string();
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end())
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

inline LsqSolver solver_from_string(const std::string& s) {
  if (s == "richardson") return LsqSolver::Richardson;
  if (s == "cg") return LsqSolver::ConjugateGradient;
  if (s == "direct") return LsqSolver::DirectReference;
  throw ConfigError("unknown least-squares solver '" + s + "'");
}

inline VariantKind variant_from_string(const std::string& s) {
  if (s == "standard") return VariantKind::Standard;
  if (s == "residual") return VariantKind::ResidualApproximation;
  if (s == "prune-first") return VariantKind::PruneBeforeEstimate;
  throw ConfigError("unknown variant '" + s + "'");
}

inline void parse_recovery(const nlohmann::json& j, ExperimentConfig& cfg) {
  reject_unknown(j,
                 {"s", "halting", "max_iterations", "lsq", "identify_width", "prune_width", "variant", "polish",
                  "record_diagnostics"},
                 "recovery");
  RecoveryConfig& r = cfg.recovery;
  r.s = j.at("s").get<std::size_t>();
  if (j.contains("halting")) {
    const auto& h = j.at("halting");
    reject_unknown(h, {"fixed_iterations", "sample_norm", "proxy_inf_norm"}, "recovery.halting");
    r.halting.fixed_iterations = get_opt<std::size_t>(h, "fixed_iterations");
    r.halting.sample_norm = get_opt<double>(h, "sample_norm");
    r.halting.proxy_inf_norm = get_opt<double>(h, "proxy_inf_norm");
  }
  r.max_iterations = get_opt<std::size_t>(j, "max_iterations");
  if (j.contains("lsq")) {
    const auto& l = j.at("lsq");
    reject_unknown(l, {"solver", "iterations", "warm_start"}, "recovery.lsq");
    if (l.contains("solver")) r.lsq.solver = solver_from_string(l.at("solver").get<std::string>());
    r.lsq.iterations = get_or<std::size_t>(l, "iterations", r.lsq.iterations);
    if (l.contains("warm_start")) {
      const auto ws = l.at("warm_start").get<std::string>();
      if (ws == "zero") r.lsq.warm_start = WarmStart::ZeroVector;
      else if (ws == "current") r.lsq.warm_start = WarmStart::CurrentApproximation;
      else throw ConfigError("warm_start must be 'zero' or 'current'");
    }
  }
  r.identify_width = get_opt<std::size_t>(j, "identify_width");
  r.prune_width = get_opt<std::size_t>(j, "prune_width");
  r.record_diagnostics = get_or<bool>(j, "record_diagnostics", false);
  if (j.contains("variant")) cfg.variant = variant_from_string(j.at("variant").get<std::string>());
  cfg.polish = get_or<bool>(j, "polish", false);
}

inline void parse_signal(const nlohmann::json& j, ExperimentConfig& cfg, const std::filesystem::path& base) {
  reject_unknown(j, {"model", "s", "law", "alpha", "magnitudes", "seed", "p", "radius", "sign_seed",
                     "permutation_seed", "path"},
                 "signal");
  SignalSpec& sig = cfg.signal;
  const auto model = get_or<std::string>(j, "model", "sparse");
  if (model == "sparse") {
    sig.model = SignalSpec::Model::Sparse;
    sig.s = get_opt<std::size_t>(j, "s");
    const auto law = get_or<std::string>(j, "law", "flat");
    if (law == "flat") sig.law = MagnitudeLaw::flat();
    else if (law == "exponential") sig.law = MagnitudeLaw::exponential(get_or<double>(j, "alpha", 0.5));
    else if (law == "custom") sig.law = MagnitudeLaw::values(j.at("magnitudes").get<std::vector<double>>());
    else throw ConfigError("unknown magnitude law '" + law + "'");
    sig.seed = get_opt<std::uint64_t>(j, "seed");
  } else if (model == "compressible") {
    sig.model = SignalSpec::Model::Compressible;
    sig.p = j.at("p").get<double>();
    sig.radius = get_or<double>(j, "radius", 1.0);
    sig.sign_seed = get_opt<std::uint64_t>(j, "sign_seed");
    sig.permutation_seed = get_opt<std::uint64_t>(j, "permutation_seed");
  } else if (model == "file") {
    sig.model = SignalSpec::Model::File;
    sig.path = resolve_path(j.at("path").get<std::string>(), base);
  } else {
    throw ConfigError("unknown signal model '" + model + "'");
  }
}

inline void parse_noise(const nlohmann::json& j, ExperimentConfig& cfg) {
  reject_unknown(j, {"norm", "relative", "sigma", "seed"}, "noise");
  NoiseSpec& n = cfg.noise;
  int kinds = 0;
  if (j.contains("norm")) n.kind = NoiseSpec::Kind::Norm, n.value = j.at("norm").get<double>(), ++kinds;
  if (j.contains("relative")) n.kind = NoiseSpec::Kind::Relative, n.value = j.at("relative").get<double>(), ++kinds;
  if (j.contains("sigma")) n.kind = NoiseSpec::Kind::Sigma, n.value = j.at("sigma").get<double>(), ++kinds;
  if (kinds > 1) throw ConfigError("noise takes exactly one of norm, relative, sigma");
  if (n.value < 0.0) throw ConfigError("noise level must be nonnegative");
  n.seed = get_opt<std::uint64_t>(j, "seed");
}

}  // namespace detail

/// Parses config_v1 text. Relative paths are resolved against `base_dir`.
inline ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed JSON at " + detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1) + ": " +
                      e.what());
  }
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    detail::reject_unknown(j,
                           {"schema", "master_seed", "operator", "signal", "noise", "recovery", "trials", "sweep",
                            "success_threshold", "rip", "bench"},
                           "config");
    const auto schema = detail::get_or<std::string>(j, "schema", "config_v1");
    if (schema != "config_v1") throw ConfigError("unsupported schema '" + schema + "'");
    ExperimentConfig cfg;
    cfg.master_seed = detail::get_or<std::uint64_t>(j, "master_seed", 0);
    cfg.op = descriptor_from_json(j.at("operator"));
    if (cfg.op.path) cfg.op.path = detail::resolve_path(*cfg.op.path, base_dir);
    if (j.contains("recovery")) detail::parse_recovery(j.at("recovery"), cfg);
    if (j.contains("signal")) detail::parse_signal(j.at("signal"), cfg, base_dir);
    if (j.contains("noise")) detail::parse_noise(j.at("noise"), cfg);
    cfg.trials = detail::get_or<std::size_t>(j, "trials", 1);
    if (cfg.trials == 0) throw ConfigError("trials must be positive");
    if (j.contains("sweep")) {
      const auto& sw = j.at("sweep");
      detail::reject_unknown(sw, {"m", "s", "noise"}, "sweep");
      cfg.sweep.m = detail::get_or<std::vector<std::size_t>>(sw, "m", {});
      cfg.sweep.s = detail::get_or<std::vector<std::size_t>>(sw, "s", {});
      cfg.sweep.noise = detail::get_or<std::vector<double>>(sw, "noise", {});
      for (const char* axis : {"m", "s", "noise"})
        if (sw.contains(axis) && sw.at(axis).empty())
          throw ConfigError(std::string("sweep axis '") + axis + "' is empty");
    }
    cfg.success_threshold = detail::get_opt<double>(j, "success_threshold");
    if (j.contains("rip")) {
      const auto& r = j.at("rip");
      detail::reject_unknown(r, {"r", "method", "trials", "seed", "budget"}, "rip");
      cfg.rip.r = detail::get_or<std::size_t>(r, "r", cfg.rip.r);
      cfg.rip.method = detail::get_or<std::string>(r, "method", cfg.rip.method);
      cfg.rip.trials = detail::get_or<std::uint64_t>(r, "trials", cfg.rip.trials);
      cfg.rip.seed = detail::get_opt<std::uint64_t>(r, "seed");
      cfg.rip.budget = detail::get_or<std::uint64_t>(r, "budget", cfg.rip.budget);
    }
    if (j.contains("bench")) {
      const auto& b = j.at("bench");
      detail::reject_unknown(b, {"operators", "n", "m_divisor", "s", "iterations", "repeats"}, "bench");
      cfg.bench.operators = detail::get_or(b, "operators", cfg.bench.operators);
      cfg.bench.n = detail::get_or(b, "n", cfg.bench.n);
      cfg.bench.m_divisor = detail::get_or(b, "m_divisor", cfg.bench.m_divisor);
      cfg.bench.s = detail::get_or(b, "s", cfg.bench.s);
      cfg.bench.iterations = detail::get_or(b, "iterations", cfg.bench.iterations);
      cfg.bench.repeats = detail::get_or(b, "repeats", cfg.bench.repeats);
    }
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::path(path).parent_path());
}

// ---- instances ----

inline constexpr std::uint64_t kOperatorSalt = 0x6f70657261746f72ULL;
inline constexpr std::uint64_t kSignalSalt = 0x7369676e616c5f5fULL;
inline constexpr std::uint64_t kNoiseSalt = 0x6e6f6973655f5f5fULL;
inline constexpr std::uint64_t kSignSalt = 0x7369676e735f5f5fULL;

inline std::uint64_t component_seed(const std::optional<std::uint64_t>& fixed, std::uint64_t trial_seed,
                                    std::uint64_t salt) {
  return fixed ? *fixed : mix64(trial_seed ^ salt);
}

/// One point of the sweep grid.
struct CellParams {
  std::size_t m = 0;
  std::size_t s = 0;
  double noise = 0.0;
};

struct Instance {
  std::unique_ptr<SamplingOperator> op;
  SignalVector x;
  SampleVector e;
  SampleVector u;
  std::uint64_t signal_seed = 0;
  std::uint64_t noise_seed = 0;
};

inline CellParams base_cell(const ExperimentConfig& cfg) { return {cfg.op.m, cfg.recovery.s, cfg.noise.value}; }

inline SignalVector make_signal(const ExperimentConfig& cfg, std::size_t n, std::size_t s, std::uint64_t trial_seed,
                                std::uint64_t* used_seed = nullptr) {
  const SignalSpec& sig = cfg.signal;
  switch (sig.model) {
    case SignalSpec::Model::Sparse: {
      const std::uint64_t seed = component_seed(sig.seed, trial_seed, kSignalSalt);
      if (used_seed) *used_seed = seed;
      return make_sparse(n, sig.s.value_or(s), sig.law, seed);
    }
    case SignalSpec::Model::Compressible: {
      CompressibleSpec spec{sig.p, sig.radius, n, component_seed(sig.sign_seed, trial_seed, kSignSalt),
                            component_seed(sig.permutation_seed, trial_seed, kSignalSalt)};
      if (used_seed) *used_seed = spec.permutation_seed;
      return make_compressible(spec);
    }
    case SignalSpec::Model::File: {
      SignalVector x;
      if (sig.path.ends_with(".json")) {
        std::ifstream in(sig.path);
        if (!in) throw ConfigError("cannot open signal file " + sig.path);
        x = signal_from_json(nlohmann::json::parse(in));
      } else {
        x = read_signal(sig.path);
      }
      if (x.size() != n) throw ConfigError("signal file length does not match operator N");
      return x;
    }
  }
  throw ConfigError("unknown signal model");
}

inline Instance build_instance(const ExperimentConfig& cfg, const CellParams& cell, std::uint64_t trial_seed) {
  Instance inst;
  OperatorDescriptor d = cfg.op;
  d.m = d.kind == OperatorKind::Identity ? d.n : cell.m;
  if (d.kind == OperatorKind::Gaussian || (d.kind == OperatorKind::PartialFourier && !d.rows))
    d.seed = component_seed(cfg.op.seed, trial_seed, kOperatorSalt);
  inst.op = load_operator(d);
  const std::size_t n = inst.op->cols();
  const std::size_t m = inst.op->rows();
  inst.x = make_signal(cfg, n, cell.s, trial_seed, &inst.signal_seed);
  const SampleVector clean = inst.op->apply(inst.x);
  inst.noise_seed = component_seed(cfg.noise.seed, trial_seed, kNoiseSalt);
  switch (cfg.noise.kind) {
    case NoiseSpec::Kind::None:
    case NoiseSpec::Kind::Norm: inst.e = make_noise(m, cell.noise, inst.noise_seed); break;
    case NoiseSpec::Kind::Relative: inst.e = make_noise(m, cell.noise * norm2(clean), inst.noise_seed); break;
    case NoiseSpec::Kind::Sigma: inst.e = make_noise_sigma(m, cell.noise, inst.noise_seed); break;
  }
  inst.u = clean + inst.e;
  return inst;
}

struct TrialOutcome {
  bool failed = false;  // solver error
  std::string message;
  bool success = false;
  std::size_t iterations = 0;
  double relative_error = 0.0;
  double wall_us = 0.0;
};

inline double success_threshold(const ExperimentConfig& cfg, double x_norm, double e_norm) {
  if (cfg.success_threshold) return *cfg.success_threshold;
  if (e_norm == 0.0) return 1e-4;
  return 15.0 * e_norm / x_norm;
}

inline RecoveryConfig cell_recovery(const ExperimentConfig& cfg, const CellParams& cell) {
  RecoveryConfig r = cfg.recovery;
  r.s = cell.s;
  return r;
}

inline TrialOutcome run_trial(const ExperimentConfig& cfg, const CellParams& cell, std::uint64_t trial_seed) {
  TrialOutcome out;
  const Instance inst = build_instance(cfg, cell, trial_seed);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const RecoveryReport rep = recover_with(cfg.variant, *inst.op, inst.u, cell_recovery(cfg, cell), cfg.polish);
    out.iterations = rep.iterations_run;
    const double xn = norm2(inst.x);
    const double err = distance2(inst.x, rep.approximation);
    out.relative_error = xn > 0.0 ? err / xn : err;
    out.success = out.relative_error <= success_threshold(cfg, xn, norm2(inst.e));
  } catch (const SolverError& e) {
    out.failed = true;
    out.message = e.what();
  }
  out.wall_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ---- formatting ----

inline std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

inline std::string fmt_time(double us) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", us);
  return buf;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// ---- recover ----

struct RecoverResult {
  RecoveryReport report;
  nlohmann::json json;    // report_v1, no timings
  std::string trace_csv;  // includes step timings
};

inline std::string trace_to_csv(const RecoveryReport& rep) {
  std::string out = "k,v_norm,y_inf,err_l2,err_linf,step_times_us\n";
  for (const auto& r : rep.trace) {
    out += std::to_string(r.k) + "," + fmt_num(r.v_norm) + "," + fmt_num(r.y_inf) + "," + fmt_num(r.err_l2) + "," +
           fmt_num(r.err_linf) + "," + fmt_time(r.times.proxy_us) + ";" + fmt_time(r.times.identify_us) + ";" +
           fmt_time(r.times.merge_us) + ";" + fmt_time(r.times.estimate_us) + ";" + fmt_time(r.times.prune_us) + ";" +
           fmt_time(r.times.update_us) + "\n";
  }
  return out;
}

inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json report_to_json(const RecoveryReport& rep) {
  nlohmann::json j;
  j["schema"] = "report_v1";
  j["iterations_run"] = rep.iterations_run;
  j["halt_reason"] = to_string(rep.halt_reason);
  j["support"] = rep.support.indices();
  j["approximation"] = signal_to_json(rep.approximation);
  j["lsq_divergences"] = rep.lsq_divergences;
  j["warnings"] = rep.warnings;
  auto trace = nlohmann::json::array();
  for (const auto& r : rep.trace) {
    trace.push_back({{"k", r.k},
                     {"v_norm", r.v_norm},
                     {"y_inf", r.y_inf},
                     {"err_l2", finite_or_null(r.err_l2)},
                     {"err_linf", finite_or_null(r.err_linf)},
                     {"lsq_iterations", r.lsq_iterations},
                     {"lsq_diverged", r.lsq_diverged}});
  }
  j["trace"] = std::move(trace);
  if (!rep.audits.empty()) {
    auto audits = nlohmann::json::array();
    for (const auto& a : rep.audits) {
      nlohmann::json checks = nlohmann::json::array();
      for (const auto& c : a.checks)
        checks.push_back({{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"holds", c.holds()}});
      audits.push_back({{"k", a.k}, {"checks", std::move(checks)}});
    }
    j["audits"] = std::move(audits);
  }
  return j;
}

inline RecoverResult run_recover(const ExperimentConfig& cfg) {
  const CellParams cell = base_cell(cfg);
  const std::uint64_t trial_seed = derive_seed(cfg.master_seed, 0, 0);
  const Instance inst = build_instance(cfg, cell, trial_seed);
  const double e_norm = norm2(inst.e);
  RecoverResult res;
  res.report = recover_with(cfg.variant, *inst.op, inst.u, cell_recovery(cfg, cell), cfg.polish,
                            Truth{inst.x, e_norm});
  const RecoveryReport& rep = res.report;
  nlohmann::json j = report_to_json(rep);
  j["operator"] = descriptor_to_json(inst.op->descriptor());
  j["variant"] = to_string(cfg.variant);
  j["polish"] = cfg.polish;
  j["s"] = cell.s;
  j["signal_seed"] = inst.signal_seed;
  j["noise_seed"] = inst.noise_seed;
  j["sample_residual_norm"] = norm2(inst.u - inst.op->apply(rep.approximation));

  const double xn = norm2(inst.x);
  const double err = distance2(inst.x, rep.approximation);
  nlohmann::json truth;
  truth["signal_norm"] = xn;
  truth["noise_norm"] = e_norm;
  truth["error_l2"] = err;
  truth["error_linf"] = norm_inf(inst.x - rep.approximation);
  truth["relative_error"] = xn > 0.0 ? err / xn : err;
  truth["success"] = (xn > 0.0 ? err / xn : err) <= success_threshold(cfg, xn, e_norm);
  const double nu = unrecoverable_energy(inst.x, cell.s, e_norm);
  truth["unrecoverable_energy"] = nu;
  if (xn > 0.0 && nu > 0.0) {
    const SnrMetrics snr = snr_metrics(inst.x, rep.approximation, nu);
    truth["snr_db"] = snr.snr_db;
    truth["reconstruction_snr_db"] = finite_or_null(snr.reconstruction_snr_db);
  }
  if (xn > 0.0) {
    const IterationBound ib = iteration_bound(inst.x, cell.s);
    truth["iteration_bound"] = {{"profile", ib.profile}, {"bound", ib.bound}, {"uniform", ib.uniform}};
  }
  j["truth"] = std::move(truth);
  res.json = std::move(j);
  res.trace_csv = trace_to_csv(rep);
  return res;
}

// ---- sweep ----

struct CellResult {
  CellParams params;
  std::size_t trials = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  double median_iterations = 0.0;
  double median_final_error = 0.0;
  double median_wall_us_per_iteration = 0.0;
};

struct SweepResult {
  std::vector<CellResult> cells;
  bool all_failed() const {
    return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.failures == c.trials; });
  }
};

/// Grid cells in row-major order over (m, s, noise); a missing axis contributes the base value.
inline std::vector<CellParams> sweep_cells(const ExperimentConfig& cfg) {
  const CellParams base = base_cell(cfg);
  const std::vector<std::size_t> ms = cfg.sweep.m.empty() ? std::vector<std::size_t>{base.m} : cfg.sweep.m;
  const std::vector<std::size_t> ss = cfg.sweep.s.empty() ? std::vector<std::size_t>{base.s} : cfg.sweep.s;
  const std::vector<double> ns = cfg.sweep.noise.empty() ? std::vector<double>{base.noise} : cfg.sweep.noise;
  std::vector<CellParams> cells;
  for (std::size_t m : ms)
    for (std::size_t s : ss)
      for (double e : ns) cells.push_back({m, s, e});
  return cells;
}

inline SweepResult run_sweep(const ExperimentConfig& cfg, unsigned jobs) {
  const auto cells = sweep_cells(cfg);
  const std::size_t trials = cfg.trials;
  std::vector<TrialOutcome> outcomes(cells.size() * trials);
  parallel_for(outcomes.size(), jobs, [&](std::size_t idx) {
    const std::size_t c = idx / trials;
    const std::size_t t = idx % trials;
    outcomes[idx] = run_trial(cfg, cells[c], derive_seed(cfg.master_seed, c, t));
    if (outcomes[idx].failed) log_message(LogLevel::Info, "cell " + std::to_string(c) + " trial " +
                                                              std::to_string(t) + ": " + outcomes[idx].message);
  });
  SweepResult res;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellResult cr;
    cr.params = cells[c];
    cr.trials = trials;
    std::vector<double> iters, errs, per_iter;
    for (std::size_t t = 0; t < trials; ++t) {
      const TrialOutcome& o = outcomes[c * trials + t];
      if (o.failed) {
        ++cr.failures;
        continue;
      }
      if (o.success) ++cr.successes;
      iters.push_back(static_cast<double>(o.iterations));
      errs.push_back(o.relative_error);
      per_iter.push_back(o.wall_us / static_cast<double>(std::max<std::size_t>(1, o.iterations)));
    }
    cr.median_iterations = median(iters);
    cr.median_final_error = median(errs);
    cr.median_wall_us_per_iteration = median(per_iter);
    res.cells.push_back(cr);
  }
  return res;
}

inline std::string sweep_to_csv(const SweepResult& res) {
  std::string out = "cell,m,s,noise,trials,successes,success_rate,median_iterations,median_final_error,failures\n";
  for (std::size_t c = 0; c < res.cells.size(); ++c) {
    const CellResult& r = res.cells[c];
    out += std::to_string(c) + "," + std::to_string(r.params.m) + "," + std::to_string(r.params.s) + "," +
           fmt_num(r.params.noise) + "," + std::to_string(r.trials) + "," + std::to_string(r.successes) + "," +
           fmt_num(static_cast<double>(r.successes) / static_cast<double>(r.trials)) + "," +
           fmt_num(r.median_iterations) + "," + fmt_num(r.median_final_error) + "," + std::to_string(r.failures) +
           "\n";
  }
  return out;
}

/// Wall-clock data lives apart from the results so the results file stays reproducible.
inline std::string sweep_timing_to_csv(const SweepResult& res) {
  std::string out = "cell,median_wall_us_per_iteration\n";
  for (std::size_t c = 0; c < res.cells.size(); ++c)
    out += std::to_string(c) + "," + fmt_time(res.cells[c].median_wall_us_per_iteration) + "\n";
  return out;
}

// ---- rip ----

struct RipRun {
  std::optional<RipEstimate> exhaustive;
  std::optional<RipEstimate> monte_carlo;
};

inline RipRun run_rip(const ExperimentConfig& cfg, unsigned jobs) {
  const CellParams cell = base_cell(cfg);
  const Instance inst = build_instance(cfg, cell, derive_seed(cfg.master_seed, 0, 0));
  const auto& spec = cfg.rip;
  if (spec.method != "exhaustive" && spec.method != "monte_carlo" && spec.method != "both")
    throw ConfigError("rip method must be exhaustive, monte_carlo or both");
  RipRun out;
  if (spec.method != "monte_carlo")
    out.exhaustive = rip_estimate(*inst.op, spec.r, RipMethod::exhaustive(), spec.budget, jobs);
  if (spec.method != "exhaustive") {
    const std::uint64_t seed = spec.seed.value_or(derive_seed(cfg.master_seed, 0x726970));
    out.monte_carlo = rip_estimate(*inst.op, spec.r, RipMethod::monte_carlo(spec.trials, seed), spec.budget, jobs);
  }
  return out;
}

inline nlohmann::json rip_to_json(const RipEstimate& e) {
  return {{"r", e.r},
          {"method", e.method.kind == RipMethod::Kind::Exhaustive ? "exhaustive" : "monte_carlo"},
          {"trials", e.method.trials},
          {"delta_lower", e.delta_lower},
          {"delta_exact", e.delta_exact ? nlohmann::json(*e.delta_exact) : nlohmann::json()},
          {"worst_support", e.worst_support.indices()}};
}

inline std::string rip_to_text(const RipEstimate& e) {
  std::string s = e.method.kind == RipMethod::Kind::Exhaustive
                      ? "exhaustive  delta_" + std::to_string(e.r) + " = " + fmt_num(e.delta_lower)
                      : "monte_carlo delta_" + std::to_string(e.r) + " >= " + fmt_num(e.delta_lower) + "  (" +
                            std::to_string(e.method.trials) + " supports)";
  s += "  worst support {";
  for (std::size_t k = 0; k < e.worst_support.size(); ++k) s += (k ? "," : "") + std::to_string(e.worst_support[k]);
  return s + "}";
}

// ---- bench ----

struct BenchRow {
  std::string op;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t s = 0;
  std::size_t k = 0;
  StepTimes times;  // medians over repeats
  double wall_us = 0.0;
};

/// Times `iterations` loop iterations on a planted s-sparse instance. Each
/// timing is the median over `repeats` independent runs of the same instance.
inline std::vector<BenchRow> bench_case(const std::string& op_kind, std::size_t n, std::size_t m, std::size_t s,
                                        std::size_t iterations, std::size_t repeats, std::uint64_t seed) {
  std::unique_ptr<SamplingOperator> op;
  if (op_kind == "gaussian") op = std::make_unique<DenseOperator>(gaussian_operator(m, n, seed));
  else if (op_kind == "partial_fourier") op = std::make_unique<PartialFourierOperator>(partial_fourier_operator(m, n, seed));
  else throw ConfigError("bench operator must be gaussian or partial_fourier");
  const SignalVector x = make_sparse(n, s, MagnitudeLaw::flat(), mix64(seed ^ kSignalSalt));
  const SampleVector u = op->apply(x);
  RecoveryConfig cfg;
  cfg.s = s;

  std::vector<std::vector<StepTimes>> times(iterations);
  std::vector<std::vector<double>> walls(iterations);
  for (std::size_t rep = 0; rep < std::max<std::size_t>(1, repeats); ++rep) {
    RecoveryState st = initial_state(*op, u);
    for (std::size_t k = 0; k < iterations; ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      st = cosamp_iteration(st, *op, u, cfg);
      walls[k].push_back(std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count());
      times[k].push_back(st.times);
    }
  }
  std::vector<BenchRow> rows;
  for (std::size_t k = 0; k < iterations; ++k) {
    BenchRow row{op_kind, n, m, s, k + 1, {}, median(walls[k])};
    auto med = [&](double StepTimes::*field) {
      std::vector<double> v;
      for (const auto& t : times[k]) v.push_back(t.*field);
      return median(v);
    };
    row.times.proxy_us = med(&StepTimes::proxy_us);
    row.times.identify_us = med(&StepTimes::identify_us);
    row.times.merge_us = med(&StepTimes::merge_us);
    row.times.estimate_us = med(&StepTimes::estimate_us);
    row.times.prune_us = med(&StepTimes::prune_us);
    row.times.update_us = med(&StepTimes::update_us);
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<BenchRow> run_bench(const ExperimentConfig& cfg) {
  const BenchSpec& b = cfg.bench;
  if (b.m_divisor == 0) throw ConfigError("bench m_divisor must be positive");
  std::vector<BenchRow> rows;
  std::uint64_t case_index = 0;
  for (const auto& op : b.operators) {
    for (std::size_t n : b.n) {
      auto part = bench_case(op, n, n / b.m_divisor, b.s, b.iterations, b.repeats,
                             derive_seed(cfg.master_seed, 0x62656e6368, case_index++));
      rows.insert(rows.end(), part.begin(), part.end());
    }
  }
  return rows;
}

inline std::string bench_to_csv(const std::vector<BenchRow>& rows) {
  std::string out = "operator,N,m,s,k,proxy_us,identify_us,merge_us,ls_us,prune_us,update_us,total_us,wall_us\n";
  for (const auto& r : rows) {
    out += r.op + "," + std::to_string(r.n) + "," + std::to_string(r.m) + "," + std::to_string(r.s) + "," +
           std::to_string(r.k) + "," + fmt_time(r.times.proxy_us) + "," + fmt_time(r.times.identify_us) + "," +
           fmt_time(r.times.merge_us) + "," + fmt_time(r.times.estimate_us) + "," + fmt_time(r.times.prune_us) + "," +
           fmt_time(r.times.update_us) + "," + fmt_time(r.times.total_us()) + "," + fmt_time(r.wall_us) + "\n";
  }
  return out;
}

// ---- gen-signal ----

inline SignalVector run_gen_signal(const ExperimentConfig& cfg) {
  const CellParams cell = base_cell(cfg);
  return make_signal(cfg, cfg.op.n, cell.s, derive_seed(cfg.master_seed, 0, 0));
}

}  // namespace cosamp
