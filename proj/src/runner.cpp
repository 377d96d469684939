#include "sifield/runner.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "json.hpp"
#include "sifield/diagnostics.hpp"
#include "sifield/field_io.hpp"
#include "sifield/spectrum.hpp"

namespace sifield {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "sifield 1.0.0";
constexpr double kEmpiricalTEnd = 1.0 - 1e-3;

const std::set<std::string> kKnownKeys = {
    "experiment", "ndim", "n", "basis",
    "noise", "noise.sigma", "noise.tau", "noise.s", "noise.path", "noise.subtract_mean", "noise.roughen",
    "target", "target.sigma", "target.tau", "target.s", "target.path",
    "schedule", "schedule.mu_star",
    "scheme", "steps", "t_end", "count", "data_count", "seed", "out", "threads", "t_points", "write_samples",
    "ac.step", "ac.burn_in", "ac.thin", "ac.potential", "ac.chains",
    "nse.sim_n", "nse.nu", "nse.alpha_damp", "nse.eps", "nse.dt", "nse.burn_in", "nse.thin", "nse.trajectories",
    "nse.kf_min", "nse.kf_max"};

template <typename T>
T checked(T value, bool ok, const Config& cfg, const std::string& key, const std::string& rule) {
  if (!ok) throw ConfigError(fmt::format("{}: key '{}' {} (got {})", cfg.source(), key, rule, value));
  return value;
}

bool is_empirical(const std::string& experiment) { return experiment == "allen-cahn" || experiment == "nse"; }

ModeSpectrum spectrum_ratio(const ModeSpectrum& c1, const ModeSpectrum& c0) {
  const MuRatio r = mu_ratio(c1, c0);
  std::vector<double> v(r.ratio);
  for (auto& x : v) x = std::max(x, kVarianceFloor);
  return {c0.grid, std::move(v)};
}

Schedule build_schedule(const ExperimentConfig& e, const ModeSpectrum& c0, const ModeSpectrum& c1_modes,
                        double data_mu_star) {
  if (e.schedule == "linear") return Schedule::linear();
  if (e.schedule == "scale-adaptive") return Schedule::scale_adaptive(e.mu_star);
  if (e.schedule == "auto-mu-star") return Schedule::scale_adaptive(data_mu_star);
  if (e.schedule == "per-mode") {
    if (is_empirical(e.experiment)) throw ConfigError("schedule 'per-mode' requires an analytic Gaussian target");
    return Schedule::per_mode(spectrum_ratio(c1_modes, c0));
  }
  throw ConfigError(fmt::format("unknown schedule '{}'", e.schedule));
}

nlohmann::json report_summary(const SpectrumReport& est, const SpectrumReport& ref) {
  const LogError err = spectrum_log_error(est, ref);
  return {{"max_abs_log10_err", err.max}, {"mean_abs_log10_err", err.mean}, {"finest_shell_abs_log10_err", err.per_shell.back()}};
}

nlohmann::json bimodality_json(const BimodalityReport& r) {
  return {{"bin_width", r.bin_width},
          {"histogram_min", r.histogram_min},
          {"histogram", r.histogram},
          {"mode_centers", r.mode_centers},
          {"positive_fraction", r.positive_fraction}};
}

void write_manifest(const ExperimentConfig& e, const Schedule& schedule, const nlohmann::json& outputs,
                    const nlohmann::json& summary) {
  const Config effective = to_config(e);
  write_text_atomic(e.out / "config.txt", effective.dump());
  nlohmann::json m;
  m["version"] = kVersion;
  m["experiment"] = e.experiment;
  m["seed"] = e.seed;
  m["schedule"] = schedule.describe();
  m["mu_star"] = schedule.mu_star();
  m["grid"] = describe(e.grid);
  m["config_file"] = "config.txt";
  std::map<std::string, std::string> echo;
  for (const auto& key : kKnownKeys)
    if (effective.has(key)) echo[key] = effective.get_string(key);
  m["config"] = echo;
  m["outputs"] = outputs;
  m["summary"] = summary;
  write_text_atomic(e.out / "manifest.json", m.dump(2) + "\n");
}

void run_gaussian(const ExperimentConfig& e, std::ostream& log, bool analysis_only) {
  if (e.target != "matern") throw ConfigError("experiment '" + e.experiment + "' needs target = matern");
  const ModeSpectrum c1 = matern_spectrum(e.target_matern, e.grid);
  const ModeSpectrum c0 = build_noise(e.noise, e.grid, nullptr);
  const Schedule schedule = build_schedule(e, c0, c1, auto_mu_star(c0, c1));
  const GaussianDrift gd(c0, c1, schedule);
  log << fmt::format("{}: {} on {}\n", e.experiment, schedule.describe(), describe(e.grid));

  nlohmann::json outputs = nlohmann::json::array();
  nlohmann::json summary;
  const ConditioningReport cond = conditioning_report(gd, uniform_time_grid(e.t_points));
  write_conditioning(e.out / "conditioning.csv", cond);
  outputs.push_back("conditioning.csv");
  summary["envelope_max"] = std::max_element(cond.rows.begin(), cond.rows.end(), [](const auto& a, const auto& b) {
                              return a.envelope < b.envelope;
                            })->envelope;
  summary["mu_min"] = cond.mu_star;

  if (!analysis_only) {
    write_mode_spectrum(e.out / "noise_spectrum.csv", c0);
    outputs.push_back("noise_spectrum.csv");
    const FieldEnsemble gen = generate_ensemble(c0, gd, e.integrator, e.count, e.seed, e.threads);
    SpectrumReport report = ensemble_spectrum(gen, e.threads);
    const SpectrumReport ref = analytic_spectrum(c1);
    attach_reference(report, ref);
    write_spectrum(e.out / "spectrum.csv", report);
    outputs.push_back("spectrum.csv");
    summary["spectrum"] = report_summary(report, ref);
    if (e.write_samples) {
      write_ensemble(e.out / "samples", gen);
      outputs.push_back("samples");
    }
    log << fmt::format("generated {} samples, max |log10| shell error {:.4f}\n", gen.size(),
                       summary["spectrum"]["max_abs_log10_err"].get<double>());
  }
  write_manifest(e, schedule, outputs, summary);
}

void run_empirical(const ExperimentConfig& e, std::ostream& log) {
  nlohmann::json outputs = nlohmann::json::array();
  nlohmann::json summary;
  FieldEnsemble data;
  if (e.target == "dataset") {
    data = read_ensemble(e.target_path);
    if (!(data.grid == e.grid))
      throw ConfigError(fmt::format("dataset grid {} does not match configured {}", describe(data.grid), describe(e.grid)));
  } else if (e.target == "simulate") {
    if (e.experiment == "allen-cahn") {
      AllenCahnStats st;
      data = allen_cahn_sample(e.ac, e.data_count, e.seed, e.threads, &st);
      summary["acceptance_rate"] = st.acceptance_rate();
    } else {
      NSEStats st;
      data = nse_simulate(e.nse, e.data_count, e.seed, e.threads, &st);
      summary["max_cfl"] = st.max_cfl;
    }
    if (e.write_samples) {
      write_ensemble(e.out / "data", data);
      outputs.push_back("data");
    }
  } else {
    throw ConfigError(fmt::format("experiment '{}' needs target = simulate or dataset", e.experiment));
  }
  log << fmt::format("{}: dataset of {} fields on {}\n", e.experiment, data.size(), describe(data.grid));

  const ModeSpectrum c0 = build_noise(e.noise, e.grid, &data);
  write_mode_spectrum(e.out / "noise_spectrum.csv", c0);
  outputs.push_back("noise_spectrum.csv");
  const ModeSpectrum data_modes = empirical_spectrum(data);
  const Schedule schedule = build_schedule(e, c0, data_modes, auto_mu_star(c0, data));
  const EmpiricalDrift drift(data, c0, schedule, std::max(kEmpiricalTEnd, std::min(e.integrator.t_end, 1.0 - 1e-12)));
  if (!(e.integrator.t_end < 1.0)) throw ConfigError("empirical drifts need t_end < 1");
  const auto& norms = drift.dataset_norms();
  summary["dataset_v_norm"] = {{"min", *std::min_element(norms.begin(), norms.end())},
                               {"max", *std::max_element(norms.begin(), norms.end())}};
  log << fmt::format("schedule {}; integrating {} samples\n", schedule.describe(), e.count);

  const FieldEnsemble gen = generate_ensemble(c0, drift, e.integrator, e.count, e.seed, e.threads);
  const SpectrumReport data_report = ensemble_spectrum(data, e.threads);
  SpectrumReport report = ensemble_spectrum(gen, e.threads);
  attach_reference(report, data_report);
  write_spectrum(e.out / "spectrum.csv", report);
  write_spectrum(e.out / "data_spectrum.csv", data_report);
  outputs.push_back("spectrum.csv");
  outputs.push_back("data_spectrum.csv");
  summary["spectrum"] = report_summary(report, data_report);

  if (e.experiment == "allen-cahn") {
    nlohmann::json b = {{"data", bimodality_json(bimodality_report(data))},
                        {"generated", bimodality_json(bimodality_report(gen))}};
    write_text_atomic(e.out / "bimodality.json", b.dump(2) + "\n");
    outputs.push_back("bimodality.json");
  }
  if (e.write_samples) {
    write_ensemble(e.out / "samples", gen);
    outputs.push_back("samples");
  }
  log << fmt::format("max |log10| shell error vs data {:.4f}\n", summary["spectrum"]["max_abs_log10_err"].get<double>());
  write_manifest(e, schedule, outputs, summary);
}

}  // namespace

ExperimentConfig experiment_from_config(const Config& cfg) {
  cfg.require_known(kKnownKeys);
  ExperimentConfig e;
  e.experiment = cfg.get_string("experiment");
  if (e.experiment == "flow") e.experiment = "gaussian";
  static const std::set<std::string> experiments = {"gaussian", "allen-cahn", "nse", "schedule-analysis"};
  if (!experiments.count(e.experiment)) throw ConfigError(fmt::format("{}: unknown experiment '{}'", cfg.source(), e.experiment));
  const bool empirical = is_empirical(e.experiment);

  try {
    if (e.experiment == "allen-cahn") {
      const int n = static_cast<int>(cfg.get_int("n", 32));
      e.grid = allen_cahn_grid(n);
      e.ac.n = n;
    } else if (e.experiment == "nse") {
      e.grid = GridSpec(2, static_cast<int>(cfg.get_int("n", 64)), Basis::PeriodicFourier);
    } else {
      e.grid = GridSpec(static_cast<int>(cfg.get_int("ndim", 2)), static_cast<int>(cfg.get_int("n", 64)),
                        basis_from_string(cfg.get_string("basis", "periodic-fourier")));
    }
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(fmt::format("{}: grid: {}", cfg.source(), ex.what()));
  }

  e.noise.kind = cfg.get_string("noise", "white");
  static const std::set<std::string> noises = {"white", "matern", "spectrum", "file", "allen-cahn-reference"};
  if (!noises.count(e.noise.kind)) throw ConfigError(fmt::format("{}: unknown noise '{}'", cfg.source(), e.noise.kind));
  e.noise.matern = {cfg.get_double("noise.sigma", 1.0), cfg.get_double("noise.tau", 1.0), cfg.get_double("noise.s", 0.0)};
  e.noise.path = cfg.get_string("noise.path", "");
  e.noise.subtract_mean = cfg.get_bool("noise.subtract_mean", false);
  e.noise.roughen = cfg.get_bool("noise.roughen", false);
  if (e.noise.kind == "file" && e.noise.path.empty()) throw ConfigError(fmt::format("{}: noise = file needs noise.path", cfg.source()));
  if (e.noise.kind == "spectrum" && !empirical) throw ConfigError(fmt::format("{}: noise = spectrum needs a dataset experiment", cfg.source()));

  e.target = cfg.get_string("target", empirical ? "simulate" : "matern");
  e.target_matern = {cfg.get_double("target.sigma", 1.0), cfg.get_double("target.tau", 1.0), cfg.get_double("target.s", 3.0)};
  e.target_path = cfg.get_string("target.path", "");
  if (e.target == "dataset" && e.target_path.empty()) throw ConfigError(fmt::format("{}: target = dataset needs target.path", cfg.source()));

  e.schedule = cfg.get_string("schedule", "linear");
  static const std::set<std::string> schedules = {"linear", "scale-adaptive", "per-mode", "auto-mu-star"};
  if (!schedules.count(e.schedule)) throw ConfigError(fmt::format("{}: unknown schedule '{}'", cfg.source(), e.schedule));
  const double mu = cfg.get_double("schedule.mu_star", 1.0);
  e.mu_star = checked(mu, mu > 0.0 && mu <= 1.0, cfg, "schedule.mu_star", "must lie in (0, 1]");

  try {
    e.integrator.scheme = scheme_from_string(cfg.get_string("scheme", "rk4"));
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(fmt::format("{}: {}", cfg.source(), ex.what()));
  }
  const long long steps = cfg.get_int("steps", 10);
  e.integrator.steps = static_cast<int>(checked(steps, steps >= 1 && steps <= 1000000, cfg, "steps", "must be in [1, 10^6]"));
  e.t_end_set = cfg.has("t_end");
  const double t_end = cfg.get_double("t_end", empirical ? kEmpiricalTEnd : 1.0);
  e.integrator.t_end = checked(t_end, t_end > 0.0 && t_end <= 1.0, cfg, "t_end", "must lie in (0, 1]");
  if (empirical && !(t_end < 1.0)) throw ConfigError(fmt::format("{}: key 't_end' must be < 1 for dataset experiments", cfg.source()));

  const long long count = cfg.get_int("count", 256);
  e.count = static_cast<std::size_t>(checked(count, count >= 1, cfg, "count", "must be >= 1"));
  const long long data_count = cfg.get_int("data_count", 2048);
  e.data_count = static_cast<std::size_t>(checked(data_count, data_count >= 1, cfg, "data_count", "must be >= 1"));
  const long long seed = cfg.get_int("seed");
  e.seed = static_cast<std::uint64_t>(checked(seed, seed >= 0, cfg, "seed", "must be >= 0"));
  e.out = cfg.get_string("out");
  const long long threads = cfg.get_int("threads", 0);
  e.threads = static_cast<unsigned>(checked(threads, threads >= 0 && threads <= 1024, cfg, "threads", "must be in [0, 1024]"));
  const long long t_points = cfg.get_int("t_points", 1001);
  e.t_points = static_cast<std::size_t>(checked(t_points, t_points >= 2, cfg, "t_points", "must be >= 2"));
  e.write_samples = cfg.get_bool("write_samples", true);

  const auto at_least = [&](const std::string& key, long long fallback, long long lo) {
    const long long v = cfg.get_int(key, fallback);
    return static_cast<int>(checked(v, v >= lo && v <= 1000000000, cfg, key, fmt::format("must be in [{}, 10^9]", lo)));
  };
  const double ac_step = cfg.get_double("ac.step", e.ac.step);
  e.ac.step = checked(ac_step, ac_step > 0.0, cfg, "ac.step", "must be > 0");
  e.ac.burn_in = at_least("ac.burn_in", e.ac.burn_in, 0);
  e.ac.thin = at_least("ac.thin", e.ac.thin, 1);
  e.ac.chains = at_least("ac.chains", e.ac.chains, 1);
  try {
    e.ac.potential = potential_from_string(cfg.get_string("ac.potential", "double-well"));
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(fmt::format("{}: {}", cfg.source(), ex.what()));
  }

  e.nse.n = e.grid.n();
  e.nse.sim_n = at_least("nse.sim_n", 0, 0);
  e.nse.nu = cfg.get_double("nse.nu", e.nse.nu);
  e.nse.alpha_damp = cfg.get_double("nse.alpha_damp", e.nse.alpha_damp);
  e.nse.eps = cfg.get_double("nse.eps", e.nse.eps);
  e.nse.dt = cfg.get_double("nse.dt", e.nse.dt);
  e.nse.burn_in = at_least("nse.burn_in", e.nse.burn_in, 0);
  e.nse.thin = at_least("nse.thin", e.nse.thin, 1);
  e.nse.trajectories = at_least("nse.trajectories", e.nse.trajectories, 1);
  const double kf_min = cfg.get_double("nse.kf_min", 1.0), kf_max = cfg.get_double("nse.kf_max", 4.0);
  if (!(kf_min >= 0.0 && kf_max >= kf_min)) throw ConfigError(fmt::format("{}: need 0 <= nse.kf_min <= nse.kf_max", cfg.source()));
  e.nse.forced_modes = forcing_band(kf_min, kf_max);
  if (e.experiment == "nse") {
    try {
      NavierStokesSolver probe(e.nse);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(fmt::format("{}: nse: {}", cfg.source(), ex.what()));
    }
  }
  return e;
}

Config to_config(const ExperimentConfig& e) {
  Config c;
  const auto num = [](double v) { return fmt::format("{:.17g}", v); };
  c.set("experiment", e.experiment);
  c.set("n", std::to_string(e.grid.n()));
  if (!is_empirical(e.experiment)) {
    c.set("ndim", std::to_string(e.grid.ndim()));
    c.set("basis", std::string(to_string(e.grid.basis())));
  }
  c.set("noise", e.noise.kind);
  c.set("noise.sigma", num(e.noise.matern.sigma));
  c.set("noise.tau", num(e.noise.matern.tau));
  c.set("noise.s", num(e.noise.matern.s));
  if (!e.noise.path.empty()) c.set("noise.path", e.noise.path.string());
  c.set("noise.subtract_mean", e.noise.subtract_mean ? "true" : "false");
  c.set("noise.roughen", e.noise.roughen ? "true" : "false");
  c.set("target", e.target);
  c.set("target.sigma", num(e.target_matern.sigma));
  c.set("target.tau", num(e.target_matern.tau));
  c.set("target.s", num(e.target_matern.s));
  if (!e.target_path.empty()) c.set("target.path", e.target_path.string());
  c.set("schedule", e.schedule);
  c.set("schedule.mu_star", num(e.mu_star));
  c.set("scheme", std::string(to_string(e.integrator.scheme)));
  c.set("steps", std::to_string(e.integrator.steps));
  c.set("t_end", num(e.integrator.t_end));
  c.set("count", std::to_string(e.count));
  c.set("data_count", std::to_string(e.data_count));
  c.set("seed", std::to_string(e.seed));
  c.set("out", e.out.string());
  c.set("t_points", std::to_string(e.t_points));
  c.set("write_samples", e.write_samples ? "true" : "false");
  if (e.experiment == "allen-cahn") {
    c.set("ac.step", num(e.ac.step));
    c.set("ac.burn_in", std::to_string(e.ac.burn_in));
    c.set("ac.thin", std::to_string(e.ac.thin));
    c.set("ac.chains", std::to_string(e.ac.chains));
    c.set("ac.potential", std::string(to_string(e.ac.potential)));
  }
  if (e.experiment == "nse") {
    c.set("nse.sim_n", std::to_string(e.nse.sim_n));
    c.set("nse.nu", num(e.nse.nu));
    c.set("nse.alpha_damp", num(e.nse.alpha_damp));
    c.set("nse.eps", num(e.nse.eps));
    c.set("nse.dt", num(e.nse.dt));
    c.set("nse.burn_in", std::to_string(e.nse.burn_in));
    c.set("nse.thin", std::to_string(e.nse.thin));
    c.set("nse.trajectories", std::to_string(e.nse.trajectories));
    double kmin = 1e300, kmax = 0.0;
    for (const auto& m : e.nse.forced_modes) {
      const double r = std::hypot(m[0], m[1]);
      kmin = std::min(kmin, r);
      kmax = std::max(kmax, r);
    }
    if (!e.nse.forced_modes.empty()) {
      c.set("nse.kf_min", num(kmin));
      c.set("nse.kf_max", num(kmax));
    }
  }
  return c;
}

double auto_mu_star(const ModeSpectrum& noise, const ModeSpectrum& data) {
  require_same_grid(noise.grid, data.grid, "auto_mu_star");
  const auto n = shell_sums(noise.grid, noise.variance);
  const auto d = shell_sums(data.grid, data.variance);
  for (std::size_t i = n.size(); i-- > 0;) {
    const double floor_level = 10.0 * kVarianceFloor;
    if (n[i].energy > floor_level && d[i].energy > floor_level) return std::min(d[i].energy / n[i].energy, 1.0);
  }
  throw std::invalid_argument("auto_mu_star: no populated shell");
}

double auto_mu_star(const ModeSpectrum& noise, const FieldEnsemble& data) {
  return auto_mu_star(noise, empirical_spectrum(data));
}

ModeSpectrum build_noise(const NoiseSpec& spec, const GridSpec& grid, const FieldEnsemble* data) {
  ModeSpectrum c;
  if (spec.kind == "white") {
    c = white_spectrum(grid, spec.matern.sigma);
  } else if (spec.kind == "matern") {
    c = matern_spectrum(spec.matern, grid);
  } else if (spec.kind == "spectrum") {
    if (!data) throw ConfigError("noise = spectrum needs a dataset");
    c = empirical_spectrum(*data, spec.subtract_mean);
  } else if (spec.kind == "file") {
    c = read_mode_spectrum(spec.path);
    if (!(c.grid == grid)) throw ConfigError(fmt::format("noise spectrum file is on {}, expected {}", describe(c.grid), describe(grid)));
  } else if (spec.kind == "allen-cahn-reference") {
    if (grid.basis() != Basis::NeumannCosine || grid.ndim() != 1)
      throw ConfigError("noise = allen-cahn-reference needs the 1D neumann-cosine grid");
    c = allen_cahn_reference_spectrum(grid.n());
  } else {
    throw ConfigError(fmt::format("unknown noise '{}'", spec.kind));
  }
  return spec.roughen ? roughen(c) : c;
}

void run(const ExperimentConfig& e, std::ostream& log) {
  std::error_code ec;
  fs::create_directories(e.out, ec);
  if (ec) throw IoError(fmt::format("cannot create output directory {}: {}", e.out.string(), ec.message()));
  if (e.experiment == "gaussian") return run_gaussian(e, log, false);
  if (e.experiment == "schedule-analysis") return run_gaussian(e, log, true);
  if (is_empirical(e.experiment)) return run_empirical(e, log);
  throw ConfigError(fmt::format("unknown experiment '{}'", e.experiment));
}

int exit_code_for_current_exception(std::string& message) {
  try {
    throw;
  } catch (const ConfigError& ex) {
    message = ex.what();
    return kExitConfig;
  } catch (const NumericalError& ex) {
    message = ex.what();
    return kExitDivergence;
  } catch (const IoError& ex) {
    message = ex.what();
    return kExitIo;
  } catch (const fs::filesystem_error& ex) {
    message = ex.what();
    return kExitIo;
  } catch (const std::invalid_argument& ex) {
    message = ex.what();
    return kExitConfig;
  } catch (const std::domain_error& ex) {
    message = ex.what();
    return kExitConfig;
  } catch (const std::exception& ex) {
    message = ex.what();
    return 1;
  }
}

int run_guarded(const ExperimentConfig& e, std::ostream& log, std::ostream& err) {
  try {
    run(e, log);
    return kExitOk;
  } catch (...) {
    std::string message;
    const int code = exit_code_for_current_exception(message);
    err << "error: " << message << "\n";
    return code;
  }
}

}  // namespace sifield
