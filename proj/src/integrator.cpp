#include "sifield/integrator.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "sifield/parallel.hpp"
#include "sifield/transform.hpp"

namespace sifield {

namespace {

void validate(const IntegratorConfig& cfg, double t_max) {
  if (cfg.steps < 1) throw std::invalid_argument(fmt::format("integrator steps must be >= 1, got {}", cfg.steps));
  if (!(cfg.t_end > 0.0 && cfg.t_end <= 1.0))
    throw std::invalid_argument(fmt::format("t_end must lie in (0, 1], got {}", cfg.t_end));
  if (cfg.t_end > t_max)
    throw std::invalid_argument(fmt::format("t_end {} exceeds the drift's t_max {}", cfg.t_end, t_max));
}

// Fixed-step explicit integration of x' = f(t, x) over [0, t_end].
template <typename F>
void run_scheme(std::span<double> x, const IntegratorConfig& cfg, F&& f) {
  const std::size_t n = x.size();
  const double h = cfg.t_end / cfg.steps;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (int s = 0; s < cfg.steps; ++s) {
    const double t = cfg.t_end * s / cfg.steps;
    const double t_next = cfg.t_end * (s + 1) / cfg.steps;
    const double t_mid = 0.5 * (t + t_next);
    switch (cfg.scheme) {
      case Scheme::Euler:
        f(t, x, std::span<double>(k1));
        for (std::size_t i = 0; i < n; ++i) x[i] += h * k1[i];
        break;
      case Scheme::Heun:
        f(t, x, std::span<double>(k1));
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k1[i];
        f(t_next, std::span<const double>(tmp), std::span<double>(k2));
        for (std::size_t i = 0; i < n; ++i) x[i] += 0.5 * h * (k1[i] + k2[i]);
        break;
      case Scheme::RK4:
        f(t, x, std::span<double>(k1));
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
        f(t_mid, std::span<const double>(tmp), std::span<double>(k2));
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
        f(t_mid, std::span<const double>(tmp), std::span<double>(k3));
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
        f(t_next, std::span<const double>(tmp), std::span<double>(k4));
        for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        break;
    }
    double max_abs = 0.0;
    bool finite = true;
    for (const double v : x) {
      if (!std::isfinite(v)) finite = false;
      max_abs = std::max(max_abs, std::abs(v));
    }
    if (!finite || max_abs > kDivergenceThreshold) throw NumericalError(s + 1, finite ? max_abs : INFINITY);
  }
}

}  // namespace

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Euler: return "euler";
    case Scheme::Heun: return "heun";
    case Scheme::RK4: return "rk4";
  }
  return "unknown";
}

Scheme scheme_from_string(std::string_view name) {
  if (name == "euler") return Scheme::Euler;
  if (name == "heun") return Scheme::Heun;
  if (name == "rk4") return Scheme::RK4;
  throw std::invalid_argument(fmt::format("unknown scheme '{}' (expected euler, heun or rk4)", name));
}

NumericalError::NumericalError(int step, double max_abs)
    : std::runtime_error(fmt::format("integration diverged at step {} (max |value| = {:.3e})", step, max_abs)),
      step_(step),
      max_abs_(max_abs) {}

void integrate_coefficients(std::span<double> x, const Drift& drift, const IntegratorConfig& cfg) {
  validate(cfg, drift.t_max());
  drift.to_frame(0.0, x);
  run_scheme(x, cfg, [&](double t, std::span<const double> state, std::span<double> out) {
    drift.velocity(t, state, out);
  });
  drift.from_frame(cfg.t_end, x);
}

ModeField integrate(ModeField x0, const Drift& drift, const IntegratorConfig& cfg) {
  require_same_grid(x0.grid, drift.grid(), "integrate");
  integrate_coefficients(x0.flat(), drift, cfg);
  return x0;
}

RealField integrate(const RealField& x0, const Drift& drift, const IntegratorConfig& cfg) {
  require_same_grid(x0.grid, drift.grid(), "integrate");
  return inverse_transform(integrate(forward_transform(x0), drift, cfg));
}

FieldEnsemble generate_ensemble(const ModeSpectrum& noise, const Drift& drift, const IntegratorConfig& cfg,
                                std::size_t count, std::uint64_t seed, unsigned threads) {
  if (count < 1) throw std::invalid_argument("generate_ensemble needs count >= 1");
  require_same_grid(noise.grid, drift.grid(), "generate_ensemble");
  validate(cfg, drift.t_max());
  FieldEnsemble out;
  out.grid = noise.grid;
  out.samples.resize(count);
  parallel_for(count, threads, [&](std::size_t i) { out.samples[i] = integrate(sample(noise, seed, i), drift, cfg); });
  out.metadata["seed"] = std::to_string(seed);
  out.metadata["source"] = "flow";
  out.metadata["scheme"] = std::string(to_string(cfg.scheme));
  out.metadata["steps"] = std::to_string(cfg.steps);
  out.metadata["t_end"] = fmt::format("{}", cfg.t_end);
  return out;
}

double linear_gain(const std::function<double(double)>& b, const IntegratorConfig& cfg) {
  validate(cfg, 1.0);
  double y = 1.0;
  run_scheme(std::span<double>(&y, 1), cfg, [&](double t, std::span<const double> state, std::span<double> out) {
    out[0] = b(t) * state[0];
  });
  return y;
}

}  // namespace sifield
