#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sifield/drift.hpp"
#include "sifield/integrator.hpp"

namespace sifield {

struct ShellEstimate {
  int k = 0;
  double estimate = 0.0;
  double std_error = 0.0;               ///< standard error of the ensemble mean; 0 for analytic rows
  std::optional<double> reference;
};

struct SpectrumReport {
  GridSpec grid;
  std::size_t ensemble_size = 0;  ///< 0 for analytic spectra
  std::vector<ShellEstimate> shells;

  /// Row for shell k; throws if absent.
  const ShellEstimate& shell(int k) const;
};

/// Per-shell mean of shell_spectrum over the samples, with standard errors.
SpectrumReport ensemble_spectrum(const FieldEnsemble& e, unsigned threads = 0);
/// Shell sums Σ_shell c(m) of a variance spectrum (the expected shell energy).
SpectrumReport analytic_spectrum(const ModeSpectrum& c);
/// Copies ref's estimates into est's reference column, shell by shell.
void attach_reference(SpectrumReport& est, const SpectrumReport& ref);
/// Keeps shells with k <= kmax.
SpectrumReport truncate_shells(const SpectrumReport& r, int kmax);

struct LogError {
  std::vector<int> k;
  std::vector<double> per_shell;  ///< |log₁₀(E_est / E_ref)|
  double max = 0.0;
  double mean = 0.0;
};

/// Throws when the shells differ or a reference shell is zero.
LogError spectrum_log_error(const SpectrumReport& est, const SpectrumReport& ref);

struct BimodalityReport {
  double bin_width = 0.0;
  double histogram_min = 0.0;            ///< center of the first bin
  std::vector<std::size_t> histogram;
  std::vector<double> mode_centers;      ///< at most two, strongest first
  double positive_fraction = 0.0;        ///< samples with positive mean (zero means count half)
  std::vector<double> means;
};

/// Histogram of spatial means. Modes are local maxima of the histogram
/// smoothed over `smoothing` bins on either side: the tallest, then the
/// tallest remaining peak whose prominence is at least a tenth of it.
BimodalityReport bimodality_report(const FieldEnsemble& e, double bin_width = 0.05, int smoothing = 2);

struct ConditioningRow {
  double t = 0.0;
  double envelope = 0.0;
  ModeIndex worst_mode{};
  double coefficient = 0.0;
};

struct ConditioningReport {
  double mu_star = 0.0;  ///< min over modes of c₁/c₀
  double mu_max = 0.0;
  std::vector<ConditioningRow> rows;
};

ConditioningReport conditioning_report(const GaussianDrift& gd, std::span<const double> t_grid);

/// Per-mode variance of the flow's output for Gaussian input: g(m)² c₀(m),
/// with g(m) the scheme's gain on x' = B̃(t; m) x. Exact for the discrete flow.
ModeSpectrum transported_variance(const GaussianDrift& gd, const IntegratorConfig& cfg);

/// α²c₀ + β²c₁ at t per mode, the interpolant marginal.
ModeSpectrum interpolant_variance(const GaussianDrift& gd, double t);

}  // namespace sifield
