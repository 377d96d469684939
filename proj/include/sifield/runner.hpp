#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "sifield/allen_cahn.hpp"
#include "sifield/config.hpp"
#include "sifield/integrator.hpp"
#include "sifield/navier_stokes.hpp"

namespace sifield {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitDivergence = 3, kExitIo = 4 };

/// Noise measure N(0, C₀). Kinds: white, matern, spectrum (per-mode
/// variances estimated from the dataset), file (mode-spectrum CSV) and
/// allen-cahn-reference. `roughen` multiplies variances by |m|² afterwards.
struct NoiseSpec {
  std::string kind = "white";
  MaternParams matern{};
  std::filesystem::path path;
  bool subtract_mean = false;
  bool roughen = false;
};

struct ExperimentConfig {
  std::string experiment = "gaussian";  ///< gaussian | allen-cahn | nse | schedule-analysis
  GridSpec grid{2, 64, Basis::PeriodicFourier};
  NoiseSpec noise;
  std::string target = "matern";        ///< matern | dataset | simulate
  MaternParams target_matern{1.0, 1.0, 3.0};
  std::filesystem::path target_path;
  std::string schedule = "linear";      ///< linear | scale-adaptive | per-mode | auto-mu-star
  double mu_star = 1.0;
  IntegratorConfig integrator{};
  bool t_end_set = false;
  std::size_t count = 256;
  std::size_t data_count = 2048;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  unsigned threads = 0;
  std::size_t t_points = 1001;
  bool write_samples = true;
  AllenCahnConfig ac{};
  NSEConfig nse{};
};

/// Reads and validates every key; throws ConfigError with line diagnostics.
ExperimentConfig experiment_from_config(const Config& cfg);
/// Every effective setting, including defaults, as a loadable config.
Config to_config(const ExperimentConfig& e);

/// μ* = (finest populated shell of the data) / (same shell of the noise),
/// clamped to (0, 1]. Throws when no shell is populated.
double auto_mu_star(const ModeSpectrum& noise, const ModeSpectrum& data);
double auto_mu_star(const ModeSpectrum& noise, const FieldEnsemble& data);

/// Builds the noise spectrum; `data` is needed for kind = spectrum.
ModeSpectrum build_noise(const NoiseSpec& spec, const GridSpec& grid, const FieldEnsemble* data);

/// Runs one experiment, writing artifacts under e.out. Progress goes to `log`.
void run(const ExperimentConfig& e, std::ostream& log);

/// run() with exceptions mapped to exit codes and reported on `err`.
int run_guarded(const ExperimentConfig& e, std::ostream& log, std::ostream& err);

/// Maps an in-flight exception to an exit code and message.
int exit_code_for_current_exception(std::string& message);

}  // namespace sifield
