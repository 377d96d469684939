// Command-line front end: dataset generation, flows, spectra and experiment runs.

#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sifield/allen_cahn.hpp"
#include "sifield/diagnostics.hpp"
#include "sifield/field_io.hpp"
#include "sifield/navier_stokes.hpp"
#include "sifield/runner.hpp"

using namespace sifield;
namespace fs = std::filesystem;

namespace {

struct GridOpts {
  int ndim = 2;
  int n = 64;
  std::string basis = "periodic-fourier";

  void add(CLI::App* app) {
    app->add_option("--ndim", ndim, "Spatial dimension (1 or 2)")->capture_default_str();
    app->add_option("--n", n, "Grid points per axis (per period for dirichlet-sine)")->capture_default_str();
    app->add_option("--basis", basis, "dirichlet-sine | periodic-fourier | neumann-cosine")->capture_default_str();
  }
  GridSpec grid() const { return GridSpec(ndim, n, basis_from_string(basis)); }
};

struct NoiseOpts {
  NoiseSpec spec;
  std::string path;

  void add(CLI::App* app) {
    app->add_option("--noise", spec.kind, "white | matern | spectrum | file | allen-cahn-reference")->capture_default_str();
    app->add_option("--noise-sigma", spec.matern.sigma)->capture_default_str();
    app->add_option("--noise-tau", spec.matern.tau)->capture_default_str();
    app->add_option("--noise-s", spec.matern.s)->capture_default_str();
    app->add_option("--noise-path", path, "Mode-spectrum CSV for --noise file");
    app->add_flag("--noise-subtract-mean", spec.subtract_mean, "Estimate the spectrum about the ensemble mean");
    app->add_flag("--noise-roughen", spec.roughen, "Multiply noise variances by |m|^2");
  }
  NoiseSpec get() const {
    NoiseSpec s = spec;
    s.path = path;
    return s;
  }
};

struct TargetOpts {
  MaternParams matern{1.0, 1.0, 3.0};
  void add(CLI::App* app) {
    app->add_option("--target-sigma", matern.sigma)->capture_default_str();
    app->add_option("--target-tau", matern.tau)->capture_default_str();
    app->add_option("--target-s", matern.s)->capture_default_str();
  }
};

struct ScheduleOpts {
  std::string kind = "linear";
  double mu = 1.0;
  void add(CLI::App* app) {
    app->add_option("--schedule", kind, "linear | scale-adaptive | per-mode | auto-mu-star")->capture_default_str();
    app->add_option("--mu-star", mu, "mu* for the scale-adaptive schedule")->capture_default_str();
  }
  Schedule build(const ModeSpectrum& c0, const ModeSpectrum& c1, bool allow_per_mode) const {
    if (kind == "linear") return Schedule::linear();
    if (kind == "scale-adaptive") return Schedule::scale_adaptive(mu);
    if (kind == "auto-mu-star") return Schedule::scale_adaptive(auto_mu_star(c0, c1));
    if (kind == "per-mode") {
      if (!allow_per_mode) throw ConfigError("schedule per-mode needs an analytic Gaussian target");
      const MuRatio r = mu_ratio(c1, c0);
      std::vector<double> v(r.ratio);
      for (auto& x : v) x = std::max(x, kVarianceFloor);
      return Schedule::per_mode(ModeSpectrum(c0.grid, std::move(v)));
    }
    throw ConfigError(fmt::format("unknown schedule '{}'", kind));
  }
};

struct IntegratorOpts {
  std::string scheme = "rk4";
  int steps = 10;
  std::optional<double> t_end;
  void add(CLI::App* app) {
    app->add_option("--scheme", scheme, "euler | heun | rk4")->capture_default_str();
    app->add_option("--steps", steps)->capture_default_str();
    app->add_option("--t-end", t_end, "End time (default 1, or 1-1e-3 for dataset drifts)");
  }
  IntegratorConfig get(double default_t_end) const {
    return {scheme_from_string(scheme), steps, t_end.value_or(default_t_end)};
  }
};

int guarded(const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (...) {
    std::string message;
    const int code = exit_code_for_current_exception(message);
    std::cerr << "error: " << message << "\n";
    return code;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Function-space stochastic interpolant flows: datasets, generation and spectral diagnostics"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency); outputs do not depend on it");

  std::uint64_t seed = 0;
  std::string out;
  std::size_t count = 256;
  int exit_code = kExitOk;

  // sample-gauss
  auto* sg = app.add_subcommand("sample-gauss", "Draw a Matérn Gaussian ensemble");
  GridOpts sg_grid;
  sg_grid.add(sg);
  MaternParams sg_matern{1.0, 1.0, 0.0};
  sg->add_option("--sigma", sg_matern.sigma)->capture_default_str();
  sg->add_option("--tau", sg_matern.tau)->capture_default_str();
  sg->add_option("--s", sg_matern.s)->capture_default_str();
  sg->add_option("--count", count)->capture_default_str();
  sg->add_option("--seed", seed)->required();
  sg->add_option("--out", out, "Ensemble directory")->required();
  sg->callback([&] {
    exit_code = guarded([&] {
      write_ensemble(out, sample_ensemble(matern_spectrum(sg_matern, sg_grid.grid()), count, seed, threads));
    });
  });

  // simulate-ac
  auto* ac = app.add_subcommand("simulate-ac", "Sample the 1D Allen-Cahn invariant measure with preconditioned MALA");
  AllenCahnConfig ac_cfg;
  std::string ac_potential = "double-well";
  ac->add_option("--n", ac_cfg.n)->capture_default_str();
  ac->add_option("--step", ac_cfg.step)->capture_default_str();
  ac->add_option("--burn-in", ac_cfg.burn_in)->capture_default_str();
  ac->add_option("--thin", ac_cfg.thin)->capture_default_str();
  ac->add_option("--chains", ac_cfg.chains)->capture_default_str();
  ac->add_option("--potential", ac_potential, "double-well | quadratic")->capture_default_str();
  ac->add_option("--count", count)->capture_default_str();
  ac->add_option("--seed", seed)->required();
  ac->add_option("--out", out, "Ensemble directory")->required();
  ac->callback([&] {
    exit_code = guarded([&] {
      ac_cfg.potential = potential_from_string(ac_potential);
      AllenCahnStats st;
      write_ensemble(out, allen_cahn_sample(ac_cfg, count, seed, threads, &st));
      std::cout << fmt::format("acceptance rate {:.4f}\n", st.acceptance_rate());
    });
  });

  // simulate-nse
  auto* ns = app.add_subcommand("simulate-nse", "Simulate stochastically forced 2D Navier-Stokes vorticity snapshots");
  NSEConfig ns_cfg;
  double kf_min = 1.0, kf_max = 4.0;
  ns->add_option("--n", ns_cfg.n)->capture_default_str();
  ns->add_option("--sim-n", ns_cfg.sim_n, "Simulation grid (0 = 3n/2)")->capture_default_str();
  ns->add_option("--nu", ns_cfg.nu)->capture_default_str();
  ns->add_option("--alpha", ns_cfg.alpha_damp)->capture_default_str();
  ns->add_option("--eps", ns_cfg.eps)->capture_default_str();
  ns->add_option("--dt", ns_cfg.dt)->capture_default_str();
  ns->add_option("--burn-in", ns_cfg.burn_in)->capture_default_str();
  ns->add_option("--thin", ns_cfg.thin)->capture_default_str();
  ns->add_option("--trajectories", ns_cfg.trajectories)->capture_default_str();
  ns->add_option("--kf-min", kf_min)->capture_default_str();
  ns->add_option("--kf-max", kf_max)->capture_default_str();
  ns->add_option("--count", count)->capture_default_str();
  ns->add_option("--seed", seed)->required();
  ns->add_option("--out", out, "Ensemble directory")->required();
  ns->callback([&] {
    exit_code = guarded([&] {
      ns_cfg.forced_modes = forcing_band(kf_min, kf_max);
      NSEStats st;
      write_ensemble(out, nse_simulate(ns_cfg, count, seed, threads, &st));
      std::cout << fmt::format("max CFL {:.3f}\n", st.max_cfl);
    });
  });

  // make-noise
  auto* mn = app.add_subcommand("make-noise", "Build a noise spectrum from a dataset");
  std::string mn_data, mn_mode = "empirical";
  bool mn_subtract = false;
  mn->add_option("--data", mn_data, "Ensemble directory")->required();
  mn->add_option("--mode", mn_mode, "empirical | roughen")->capture_default_str();
  mn->add_flag("--subtract-mean", mn_subtract);
  mn->add_option("--out", out, "Mode-spectrum CSV")->required();
  mn->callback([&] {
    exit_code = guarded([&] {
      if (mn_mode != "empirical" && mn_mode != "roughen") throw ConfigError("make-noise --mode must be empirical or roughen");
      ModeSpectrum c = empirical_spectrum(read_ensemble(mn_data), mn_subtract);
      if (mn_mode == "roughen") c = roughen(c);
      write_mode_spectrum(out, c);
    });
  });

  // generate
  auto* gen = app.add_subcommand("generate", "Generate an ensemble by integrating the interpolant flow");
  GridOpts gen_grid;
  gen_grid.add(gen);
  NoiseOpts gen_noise;
  gen_noise.add(gen);
  TargetOpts gen_target;
  gen_target.add(gen);
  ScheduleOpts gen_schedule;
  gen_schedule.add(gen);
  IntegratorOpts gen_int;
  gen_int.add(gen);
  std::string gen_data;
  gen->add_option("--data", gen_data, "Dataset directory (empirical drift); without it the Matérn target is used");
  gen->add_option("--count", count)->capture_default_str();
  gen->add_option("--seed", seed)->required();
  gen->add_option("--out", out, "Ensemble directory")->required();
  gen->callback([&] {
    exit_code = guarded([&] {
      if (gen_data.empty()) {
        const GridSpec grid = gen_grid.grid();
        const ModeSpectrum c0 = build_noise(gen_noise.get(), grid, nullptr);
        const ModeSpectrum c1 = matern_spectrum(gen_target.matern, grid);
        const GaussianDrift gd(c0, c1, gen_schedule.build(c0, c1, true));
        write_ensemble(out, generate_ensemble(c0, gd, gen_int.get(1.0), count, seed, threads));
      } else {
        const FieldEnsemble data = read_ensemble(gen_data);
        const ModeSpectrum c0 = build_noise(gen_noise.get(), data.grid, &data);
        const IntegratorConfig cfg = gen_int.get(1.0 - 1e-3);
        const EmpiricalDrift drift(data, c0, gen_schedule.build(c0, empirical_spectrum(data), false),
                                   std::max(1.0 - 1e-3, std::min(cfg.t_end, 1.0 - 1e-12)));
        write_ensemble(out, generate_ensemble(c0, drift, cfg, count, seed, threads));
      }
    });
  });

  // spectrum
  auto* sp = app.add_subcommand("spectrum", "Shell spectrum of an ensemble, optionally against a reference");
  std::string sp_data, sp_ref;
  sp->add_option("--data", sp_data, "Ensemble directory")->required();
  sp->add_option("--ref", sp_ref, "Reference ensemble directory or mode-spectrum CSV");
  sp->add_option("--out", out, "Spectrum CSV")->required();
  sp->callback([&] {
    exit_code = guarded([&] {
      const FieldEnsemble data = read_ensemble(sp_data);
      SpectrumReport report = ensemble_spectrum(data, threads);
      if (!sp_ref.empty()) {
        const SpectrumReport ref = fs::is_directory(sp_ref) ? ensemble_spectrum(read_ensemble(sp_ref), threads)
                                                            : analytic_spectrum(read_mode_spectrum(sp_ref));
        attach_reference(report, ref);
      }
      write_spectrum(out, report);
    });
  });

  // schedule-analyze
  auto* sa = app.add_subcommand("schedule-analyze", "Tabulate the drift conditioning envelope of a Gaussian pair");
  GridOpts sa_grid;
  sa_grid.add(sa);
  NoiseOpts sa_noise;
  sa_noise.add(sa);
  TargetOpts sa_target;
  sa_target.add(sa);
  ScheduleOpts sa_schedule;
  sa_schedule.add(sa);
  std::size_t t_points = 1001;
  sa->add_option("--t-points", t_points)->capture_default_str();
  sa->add_option("--out", out, "Conditioning CSV")->required();
  sa->callback([&] {
    exit_code = guarded([&] {
      const GridSpec grid = sa_grid.grid();
      const ModeSpectrum c0 = build_noise(sa_noise.get(), grid, nullptr);
      const ModeSpectrum c1 = matern_spectrum(sa_target.matern, grid);
      const GaussianDrift gd(c0, c1, sa_schedule.build(c0, c1, true));
      write_conditioning(out, conditioning_report(gd, uniform_time_grid(t_points)));
    });
  });

  // compare
  auto* cmp = app.add_subcommand("compare", "Per-shell |log10| error between two spectrum CSVs");
  std::string cmp_est, cmp_ref;
  int cmp_kmax = 0;
  cmp->add_option("--est", cmp_est)->required();
  cmp->add_option("--ref", cmp_ref)->required();
  cmp->add_option("--kmax", cmp_kmax, "Largest shell compared (0 = all)");
  cmp->add_option("--out", out, "Optional spectrum CSV with the reference column filled");
  cmp->callback([&] {
    exit_code = guarded([&] {
      const GridSpec any;
      SpectrumReport est = read_spectrum(cmp_est, any), ref = read_spectrum(cmp_ref, any);
      if (cmp_kmax > 0) {
        est = truncate_shells(est, cmp_kmax);
        ref = truncate_shells(ref, cmp_kmax);
      }
      const LogError err = spectrum_log_error(est, ref);
      for (std::size_t i = 0; i < err.k.size(); ++i) std::cout << fmt::format("k={} abs_log10_err={:.6g}\n", err.k[i], err.per_shell[i]);
      std::cout << fmt::format("max={:.6g} mean={:.6g}\n", err.max, err.mean);
      if (!out.empty()) {
        attach_reference(est, ref);
        write_spectrum(out, est);
      }
    });
  });

  // run
  auto* rn = app.add_subcommand("run", "Run an experiment described by a key = value config file");
  std::string config_path;
  rn->add_option("--config", config_path)->required();
  rn->add_option("--out", out, "Override the config's output directory");
  rn->add_option("--seed", seed, "Override the config's seed");
  rn->callback([&] {
    exit_code = guarded([&] {
      Config cfg = Config::load(config_path);
      if (!out.empty()) cfg.set("out", out);
      if (rn->count("--seed")) cfg.set("seed", std::to_string(seed));
      ExperimentConfig e = experiment_from_config(cfg);
      e.threads = threads != 0 ? threads : e.threads;
      run(e, std::cout);
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  return exit_code;
}
