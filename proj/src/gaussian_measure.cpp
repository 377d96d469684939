#include "sifield/gaussian_measure.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "sifield/parallel.hpp"
#include "sifield/random.hpp"
#include "sifield/transform.hpp"

namespace sifield {

ModeSpectrum::ModeSpectrum(const GridSpec& g, std::vector<double> c) : grid(g), variance(std::move(c)) {
  if (variance.size() != grid.mode_count())
    throw std::invalid_argument(fmt::format("spectrum has {} entries, {} expects {}", variance.size(),
                                            describe(grid), grid.mode_count()));
  for (std::size_t i = 0; i < variance.size(); ++i)
    if (!(variance[i] > 0.0) || !std::isfinite(variance[i]))
      throw std::invalid_argument(fmt::format("spectrum entry {} is not a positive finite variance ({})", i, variance[i]));
}

double matern_variance(const MaternParams& p, double eigenvalue) {
  if (p.s == 0.0) return p.sigma * p.sigma;
  const double base = eigenvalue + p.tau * p.tau;
  if (base <= 0.0)
    throw std::invalid_argument("Matérn spectrum undefined: eigenvalue + tau² = 0 with s > 0 (use tau > 0)");
  return p.sigma * p.sigma * std::pow(base, -p.s);
}

ModeSpectrum matern_spectrum(const MaternParams& p, const GridSpec& grid) {
  if (!(p.sigma > 0.0)) throw std::invalid_argument("Matérn sigma must be > 0");
  if (p.tau < 0.0 || p.s < 0.0) throw std::invalid_argument("Matérn tau and s must be >= 0");
  std::vector<double> c(grid.mode_count());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = matern_variance(p, grid.eigenvalue(i));
  return {grid, std::move(c)};
}

ModeSpectrum white_spectrum(const GridSpec& grid, double sigma) {
  return matern_spectrum({sigma, 0.0, 0.0}, grid);
}

RealField sample(const ModeSpectrum& spec, std::uint64_t seed, std::uint64_t index) {
  auto rng = substream(seed, StreamTag::GaussianSample, index);
  std::normal_distribution<double> normal(0.0, 1.0);
  RealField noise(spec.grid);
  const double scale = 1.0 / std::sqrt(spec.grid.cell_volume());
  for (auto& v : noise.values) v = scale * normal(rng);
  ModeField c = forward_transform(noise);
  for (std::size_t i = 0; i < c.coeffs.size(); ++i) c.coeffs[i] *= std::sqrt(spec.variance[i]);
  return inverse_transform(c);
}

FieldEnsemble sample_ensemble(const ModeSpectrum& spec, std::size_t count, std::uint64_t seed, unsigned threads) {
  FieldEnsemble out;
  out.grid = spec.grid;
  out.samples.resize(count);
  parallel_for(count, threads, [&](std::size_t i) { out.samples[i] = sample(spec, seed, i); });
  out.metadata["seed"] = std::to_string(seed);
  out.metadata["source"] = "gaussian-sample";
  return out;
}

ModeSpectrum empirical_spectrum(const FieldEnsemble& data, bool subtract_mean) {
  if (data.empty()) throw std::invalid_argument("empirical_spectrum: empty ensemble");
  const GridSpec& grid = data.grid;
  std::vector<ModeField> coeffs;
  coeffs.reserve(data.size());
  for (const auto& f : data.samples) {
    require_same_grid(grid, f.grid, "empirical_spectrum");
    coeffs.push_back(forward_transform(f));
  }
  const std::size_t modes = grid.mode_count();
  std::vector<std::complex<double>> mean(modes, 0.0);
  if (subtract_mean) {
    for (const auto& c : coeffs)
      for (std::size_t i = 0; i < modes; ++i) mean[i] += c.coeffs[i];
    for (auto& m : mean) m /= static_cast<double>(coeffs.size());
  }
  std::vector<double> var(modes, 0.0);
  for (const auto& c : coeffs)
    for (std::size_t i = 0; i < modes; ++i) var[i] += std::norm(c.coeffs[i] - mean[i]);
  for (auto& v : var) v = std::max(v / static_cast<double>(coeffs.size()), kVarianceFloor);
  return {grid, std::move(var)};
}

ModeSpectrum roughen(const ModeSpectrum& spec) {
  std::vector<double> c = spec.variance;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const int r2 = spec.grid.mode_norm_sq(i);
    if (r2 > 0) c[i] *= r2;
  }
  return {spec.grid, std::move(c)};
}

MuRatio mu_ratio(const ModeSpectrum& c1, const ModeSpectrum& c0) {
  require_same_grid(c1.grid, c0.grid, "mu_ratio");
  MuRatio r;
  r.ratio.resize(c1.variance.size());
  bool any = false;
  for (std::size_t i = 0; i < r.ratio.size(); ++i) {
    r.ratio[i] = c1.variance[i] / c0.variance[i];
    // Modes sitting at the variance floor carry no information.
    if (c1.variance[i] <= kVarianceFloor || c0.variance[i] <= kVarianceFloor) continue;
    if (!any || r.ratio[i] < r.min) {
      r.min = r.ratio[i];
      r.argmin = i;
    }
    if (!any || r.ratio[i] > r.max) {
      r.max = r.ratio[i];
      r.argmax = i;
    }
    any = true;
  }
  if (!any) throw std::invalid_argument("mu_ratio: no represented modes");
  return r;
}

double mu_star(const MuRatio& r) { return r.min; }

}  // namespace sifield
