#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sifield/grid.hpp"

namespace sifield {

/// Floor applied to estimated variances so ratios and Cameron–Martin weights stay finite.
inline constexpr double kVarianceFloor = 1e-30;

/// Per-mode variances c(m), aligned with the grid's mode layout.
struct ModeSpectrum {
  GridSpec grid;
  std::vector<double> variance;

  ModeSpectrum() = default;
  ModeSpectrum(const GridSpec& g, std::vector<double> c);

  double operator[](std::size_t i) const { return variance[i]; }
};

/// Matérn-like covariance σ²(-Δ + τ²)^{-s}.
struct MaternParams {
  double sigma = 1.0;
  double tau = 1.0;
  double s = 0.0;
};

/// A batch of fields on one grid. Metadata carries provenance (seed, config).
struct FieldEnsemble {
  GridSpec grid;
  std::vector<RealField> samples;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

/// σ²(λ + τ²)^{-s} for one eigenvalue. Throws when λ + τ² = 0 and s > 0.
double matern_variance(const MaternParams& p, double eigenvalue);

ModeSpectrum matern_spectrum(const MaternParams& p, const GridSpec& grid);
/// Flat unit-variance (σ²) spectrum; s = 0 Matérn.
ModeSpectrum white_spectrum(const GridSpec& grid, double sigma = 1.0);

/// One draw from N(0, C): coefficients independent with E|c(m)|² = c(m),
/// generated by transforming grid white noise of variance 1/h^d. The draw for
/// (seed, index) does not depend on other indices.
RealField sample(const ModeSpectrum& spec, std::uint64_t seed, std::uint64_t index = 0);

FieldEnsemble sample_ensemble(const ModeSpectrum& spec, std::size_t count, std::uint64_t seed, unsigned threads = 0);

/// c(m) = mean |û(m)|² over the ensemble (optionally of û - mean û), floored at kVarianceFloor.
ModeSpectrum empirical_spectrum(const FieldEnsemble& data, bool subtract_mean = false);

/// Multiplies amplitudes by |m|, i.e. variances by |m|²; |m| = 0 left unchanged.
ModeSpectrum roughen(const ModeSpectrum& spec);

struct MuRatio {
  std::vector<double> ratio;  ///< c1(m)/c0(m), layout-aligned
  double min = 0.0;
  double max = 0.0;
  std::size_t argmin = 0;
  std::size_t argmax = 0;
};

MuRatio mu_ratio(const ModeSpectrum& c1, const ModeSpectrum& c0);
/// Smallest ratio over represented modes.
double mu_star(const MuRatio& r);

}  // namespace sifield
