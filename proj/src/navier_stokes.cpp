#include "sifield/navier_stokes.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "sifield/integrator.hpp"
#include "sifield/parallel.hpp"
#include "sifield/random.hpp"
#include "sifield/spectrum.hpp"
#include "sifield/transform.hpp"

namespace sifield {

namespace {

ModeIndex representative(ModeIndex m) {
  if (m[1] < 0 || (m[1] == 0 && m[0] < 0)) return {-m[0], -m[1]};
  return m;
}

void validate(const NSEConfig& cfg) {
  if (cfg.n < 32 || cfg.n % 2 != 0) throw std::invalid_argument(fmt::format("NSE grid needs even n >= 32, got {}", cfg.n));
  if (cfg.sim_n != 0 && (cfg.sim_n < cfg.n || cfg.sim_n % 2 != 0))
    throw std::invalid_argument(fmt::format("NSE sim_n must be even and >= n, got {}", cfg.sim_n));
  if (!(cfg.nu >= 0.0) || !(cfg.alpha_damp >= 0.0) || !(cfg.eps >= 0.0))
    throw std::invalid_argument("NSE nu, alpha_damp and eps must be >= 0");
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("NSE dt must be > 0");
  if (cfg.burn_in < 0 || cfg.thin < 1 || cfg.trajectories < 1)
    throw std::invalid_argument("NSE needs burn_in >= 0, thin >= 1, trajectories >= 1");
}

}  // namespace

std::vector<ModeIndex> forcing_band(double kmin, double kmax) {
  std::vector<ModeIndex> out;
  const int top = static_cast<int>(std::floor(kmax));
  for (int a = -top; a <= top; ++a)
    for (int b = 0; b <= top; ++b) {
      if (b == 0 && a <= 0) continue;
      const double r2 = static_cast<double>(a * a + b * b);
      if (r2 >= kmin * kmin && r2 <= kmax * kmax) out.push_back({a, b});
    }
  return out;
}

NavierStokesSolver::NavierStokesSolver(const NSEConfig& cfg) : cfg_(cfg) {
  validate(cfg_);
  if (cfg_.sim_n == 0) cfg_.sim_n = 3 * cfg_.n / 2 + (3 * cfg_.n / 2) % 2;
  grid_ = GridSpec(2, cfg_.sim_n, Basis::PeriodicFourier);
  kmax_ = (cfg_.sim_n - 1) / 3;
  omega_ = ModeField(grid_);

  const std::size_t modes = grid_.mode_count();
  decay_half_.resize(modes);
  decay_full_.resize(modes);
  for (std::size_t i = 0; i < modes; ++i) {
    const double rate = cfg_.nu * grid_.mode_norm_sq(i) + cfg_.alpha_damp;
    decay_half_[i] = std::exp(-0.5 * rate * cfg_.dt);
    decay_full_[i] = std::exp(-rate * cfg_.dt);
  }

  std::vector<ModeIndex> forced = cfg_.forced_modes.empty() ? forcing_band(1.0, 4.0) : cfg_.forced_modes;
  for (auto& m : forced) {
    if (m[0] == 0 && m[1] == 0) throw std::invalid_argument("NSE forcing cannot act on the mean mode");
    if (std::abs(m[0]) > kmax_ || std::abs(m[1]) > kmax_)
      throw std::invalid_argument(fmt::format("forced mode ({}, {}) lies outside the dealiased band", m[0], m[1]));
    m = representative(m);
  }
  std::sort(forced.begin(), forced.end());
  forced.erase(std::unique(forced.begin(), forced.end()), forced.end());
  if (forced.empty()) throw std::invalid_argument("NSE forced mode set is empty");
  for (const auto& m : forced) {
    const std::size_t flat = grid_.flat_index(m);
    forced_.push_back(flat);
    // Entries of the m1 = 0 column store both members of a conjugate pair.
    partner_.push_back(m[1] == 0 ? grid_.flat_index({-m[0], 0}) : flat);
  }
}

void NavierStokesSolver::set_state(const RealField& omega) {
  if (omega.grid.basis() != Basis::PeriodicFourier || omega.grid.ndim() != 2)
    throw std::invalid_argument("NSE state must be a 2D periodic field");
  const ModeField src = forward_transform(omega);
  omega_ = ModeField(grid_);
  const int half = std::min(omega.grid.n(), grid_.n()) / 2;
  for (std::size_t i = 0; i < src.coeffs.size(); ++i) {
    const ModeIndex m = omega.grid.mode_index(i);
    if (std::abs(m[0]) >= half || std::abs(m[1]) >= half) continue;
    omega_.coeffs[grid_.flat_index(m)] = src.coeffs[i];
  }
  omega_.coeffs[0] = 0.0;
  dealias(omega_);
}

void NavierStokesSolver::dealias(ModeField& w) const {
  for (std::size_t i = 0; i < w.coeffs.size(); ++i) {
    const ModeIndex m = grid_.mode_index(i);
    if (std::abs(m[0]) > kmax_ || std::abs(m[1]) > kmax_) w.coeffs[i] = 0.0;
  }
}

ModeField NavierStokesSolver::nonlinear(const ModeField& w) const {
  const std::complex<double> I(0.0, 1.0);
  ModeField vx(grid_), vy(grid_), wx(grid_), wy(grid_);
  for (std::size_t i = 0; i < w.coeffs.size(); ++i) {
    const ModeIndex m = grid_.mode_index(i);
    const int k2 = m[0] * m[0] + m[1] * m[1];
    if (k2 == 0) continue;
    const std::complex<double> psi = w.coeffs[i] / static_cast<double>(k2);
    vx.coeffs[i] = I * static_cast<double>(m[1]) * psi;
    vy.coeffs[i] = -I * static_cast<double>(m[0]) * psi;
    wx.coeffs[i] = I * static_cast<double>(m[0]) * w.coeffs[i];
    wy.coeffs[i] = I * static_cast<double>(m[1]) * w.coeffs[i];
  }
  const RealField ux = inverse_transform(vx), uy = inverse_transform(vy);
  const RealField gx = inverse_transform(wx), gy = inverse_transform(wy);
  RealField advection(grid_);
  for (std::size_t j = 0; j < advection.values.size(); ++j) advection[j] = -(ux[j] * gx[j] + uy[j] * gy[j]);
  ModeField out = forward_transform(advection);
  out.coeffs[0] = 0.0;
  dealias(out);
  return out;
}

void NavierStokesSolver::step(std::mt19937_64* rng) {
  const double h = cfg_.dt;
  const std::size_t modes = omega_.coeffs.size();
  const auto& a = omega_.coeffs;
  ModeField stage(grid_);

  const ModeField k1 = nonlinear(omega_);
  for (std::size_t i = 0; i < modes; ++i) stage.coeffs[i] = decay_half_[i] * (a[i] + 0.5 * h * k1.coeffs[i]);
  const ModeField k2 = nonlinear(stage);
  for (std::size_t i = 0; i < modes; ++i) stage.coeffs[i] = decay_half_[i] * a[i] + 0.5 * h * k2.coeffs[i];
  const ModeField k3 = nonlinear(stage);
  for (std::size_t i = 0; i < modes; ++i) stage.coeffs[i] = decay_full_[i] * a[i] + h * decay_half_[i] * k3.coeffs[i];
  const ModeField k4 = nonlinear(stage);
  for (std::size_t i = 0; i < modes; ++i)
    omega_.coeffs[i] = decay_full_[i] * a[i] +
                       h / 6.0 * (decay_full_[i] * k1.coeffs[i] + 2.0 * decay_half_[i] * (k2.coeffs[i] + k3.coeffs[i]) +
                                  k4.coeffs[i]);

  if (rng && cfg_.eps > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double amp = cfg_.eps * std::sqrt(h / 2.0);
    for (std::size_t f = 0; f < forced_.size(); ++f) {
      const double re = normal(*rng), im = normal(*rng);
      const std::complex<double> inc(amp * re, amp * im);
      omega_.coeffs[forced_[f]] += inc;
      if (partner_[f] != forced_[f]) omega_.coeffs[partner_[f]] += std::conj(inc);
    }
  }
  omega_.coeffs[0] = 0.0;
  time_ += h;
}

double NavierStokesSolver::energy() const {
  double e = 0.0;
  for (std::size_t i = 1; i < omega_.coeffs.size(); ++i) {
    const int k2 = grid_.mode_norm_sq(i);
    if (k2 > 0) e += grid_.multiplicity(i) * std::norm(omega_.coeffs[i]) / k2;
  }
  return 0.5 * e;
}

double NavierStokesSolver::enstrophy() const { return 0.5 * coefficient_norm_sq(omega_); }

double NavierStokesSolver::cfl() const {
  const std::complex<double> I(0.0, 1.0);
  ModeField vx(grid_), vy(grid_);
  for (std::size_t i = 0; i < omega_.coeffs.size(); ++i) {
    const ModeIndex m = grid_.mode_index(i);
    const int k2 = m[0] * m[0] + m[1] * m[1];
    if (k2 == 0) continue;
    const std::complex<double> psi = omega_.coeffs[i] / static_cast<double>(k2);
    vx.coeffs[i] = I * static_cast<double>(m[1]) * psi;
    vy.coeffs[i] = -I * static_cast<double>(m[0]) * psi;
  }
  const RealField ux = inverse_transform(vx), uy = inverse_transform(vy);
  double vmax = 0.0;
  for (std::size_t j = 0; j < ux.values.size(); ++j) vmax = std::max(vmax, std::hypot(ux[j], uy[j]));
  const double dx = 2.0 * std::numbers::pi / grid_.n();
  return vmax * cfg_.dt / dx;
}

RealField NavierStokesSolver::snapshot(int n) const {
  const GridSpec target(2, n, Basis::PeriodicFourier);
  ModeField out(target);
  const int half = std::min(n, grid_.n()) / 2;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i) {
    const ModeIndex m = target.mode_index(i);
    if (std::abs(m[0]) >= half || std::abs(m[1]) >= half) continue;
    out.coeffs[i] = omega_.coeffs[grid_.flat_index(m)];
  }
  return inverse_transform(out);
}

FieldEnsemble nse_simulate(const NSEConfig& cfg, std::size_t count, std::uint64_t seed, unsigned threads,
                           NSEStats* stats) {
  validate(cfg);
  if (count == 0) throw std::invalid_argument("NSE snapshot count must be >= 1");
  FieldEnsemble out;
  out.grid = GridSpec(2, cfg.n, Basis::PeriodicFourier);
  out.samples.resize(count);
  const auto trajectories = static_cast<std::size_t>(cfg.trajectories);
  std::vector<NSEStats> per(trajectories);
  std::atomic<bool> warned{false};

  parallel_for(trajectories, threads, [&](std::size_t r) {
    if (r >= count) return;
    NavierStokesSolver solver(cfg);
    auto rng = substream(seed, StreamTag::NavierStokesTrajectory, r);
    NSEStats& st = per[r];
    const auto advance = [&] {
      solver.step(&rng);
      ++st.steps;
      double max_abs = 0.0;
      for (const auto& c : solver.state().coeffs) max_abs = std::max(max_abs, std::abs(c));
      if (!std::isfinite(max_abs) || max_abs > kDivergenceThreshold)
        throw NumericalError(static_cast<int>(st.steps), max_abs);
    };
    const auto check_cfl = [&] {
      const double c = solver.cfl();
      st.max_cfl = std::max(st.max_cfl, c);
      if (c > 1.0 && !warned.exchange(true))
        fmt::print(stderr, "warning: NSE CFL number {:.2f} exceeds 1 at t = {:.2f}; reduce dt\n", c, solver.time());
    };
    for (int s = 0; s < cfg.burn_in; ++s) advance();
    check_cfl();
    for (std::size_t slot = r; slot < count; slot += trajectories) {
      for (int s = 0; s < cfg.thin; ++s) advance();
      check_cfl();
      out.samples[slot] = solver.snapshot(cfg.n);
    }
  });

  if (stats) {
    *stats = {};
    for (const auto& s : per) {
      stats->max_cfl = std::max(stats->max_cfl, s.max_cfl);
      stats->steps += s.steps;
    }
  }
  out.metadata["seed"] = std::to_string(seed);
  out.metadata["source"] = "navier-stokes";
  out.metadata["nu"] = fmt::format("{}", cfg.nu);
  out.metadata["alpha_damp"] = fmt::format("{}", cfg.alpha_damp);
  out.metadata["eps"] = fmt::format("{}", cfg.eps);
  out.metadata["dt"] = fmt::format("{}", cfg.dt);
  out.metadata["sim_n"] = std::to_string(cfg.sim_n == 0 ? 3 * cfg.n / 2 : cfg.sim_n);
  out.metadata["burn_in"] = std::to_string(cfg.burn_in);
  out.metadata["thin"] = std::to_string(cfg.thin);
  out.metadata["trajectories"] = std::to_string(cfg.trajectories);
  return out;
}

std::vector<double> enstrophy_series(const FieldEnsemble& e) {
  std::vector<double> z;
  z.reserve(e.size());
  for (const auto& f : e.samples) z.push_back(0.5 * coefficient_norm_sq(forward_transform(f)));
  return z;
}

double lag1_autocorrelation(const std::vector<double>& series) {
  if (series.size() < 2) return 0.0;
  double mean = 0.0;
  for (const double v : series) mean += v;
  mean /= static_cast<double>(series.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    den += (series[i] - mean) * (series[i] - mean);
    if (i + 1 < series.size()) num += (series[i] - mean) * (series[i + 1] - mean);
  }
  return den > 0.0 ? num / den : 0.0;
}

Decorrelated decorrelate(const FieldEnsemble& e, int thin) {
  if (thin < 1) throw std::invalid_argument("decorrelate needs thin >= 1");
  Decorrelated out;
  out.ensemble.grid = e.grid;
  out.ensemble.metadata = e.metadata;
  for (std::size_t i = 0; i < e.size(); i += static_cast<std::size_t>(thin)) out.ensemble.samples.push_back(e.samples[i]);
  out.ensemble.metadata["decorrelate_thin"] = std::to_string(thin);
  out.lag1_autocorrelation = lag1_autocorrelation(enstrophy_series(out.ensemble));
  return out;
}

}  // namespace sifield
