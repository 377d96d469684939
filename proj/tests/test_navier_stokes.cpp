#include <cmath>
#include <random>

#include "doctest.h"
#include "sifield/navier_stokes.hpp"
#include "sifield/transform.hpp"

using namespace sifield;

namespace {

NSEConfig quiet(int n = 32) {
  NSEConfig cfg;
  cfg.n = n;
  cfg.eps = 0.0;
  return cfg;
}

// cos(m·y) on the solver grid.
RealField plane_wave(const GridSpec& g, ModeIndex m, double amplitude) {
  RealField f(g);
  const int n = g.n();
  for (int j0 = 0; j0 < n; ++j0)
    for (int j1 = 0; j1 < n; ++j1)
      f[j0 * n + j1] = amplitude * std::cos(m[0] * g.coordinate(j0) + m[1] * g.coordinate(j1));
  return f;
}

}  // namespace

TEST_CASE("forcing band") {
  const auto band = forcing_band(1.0, 4.0);
  // 48 lattice points with 1 <= |m|² <= 16, one per conjugate pair.
  CHECK(band.size() == 24);
  for (const auto& m : band) {
    const int r2 = m[0] * m[0] + m[1] * m[1];
    CHECK(r2 >= 1);
    CHECK(r2 <= 16);
    CHECK((m[1] > 0 || (m[1] == 0 && m[0] > 0)));
  }
}

TEST_CASE("rest state stays at rest without forcing") {
  NavierStokesSolver s(quiet());
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) s.step(&rng);
  for (const auto& c : s.state().coeffs) CHECK(c == std::complex<double>(0.0));
}

TEST_CASE("single-mode vorticity decays at the linear rate") {
  NSEConfig cfg = quiet();
  cfg.nu = 1e-2;
  cfg.alpha_damp = 0.1;
  cfg.dt = 0.02;
  NavierStokesSolver s(cfg);
  s.set_state(plane_wave(s.grid(), {3, 4}, 2.0));
  const double e0 = s.energy();
  CHECK(e0 > 0.0);
  for (int i = 0; i < 50; ++i) s.step(nullptr);
  const double k2 = 25.0;
  CHECK(s.time() == doctest::Approx(1.0));
  CHECK(s.energy() / e0 == doctest::Approx(std::exp(-2 * (cfg.nu * k2 + cfg.alpha_damp) * 1.0)).epsilon(0.01));
  CHECK(s.enstrophy() == doctest::Approx(k2 * s.energy()).epsilon(1e-12));
}

TEST_CASE("inviscid unforced flow conserves energy and enstrophy") {
  NSEConfig cfg = quiet();
  cfg.nu = 0.0;
  cfg.alpha_damp = 0.0;
  cfg.dt = 0.01;
  NavierStokesSolver s(cfg);
  // A band-limited random vorticity well inside the dealiased range.
  const GridSpec& g = s.grid();
  ModeField w(g);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < w.coeffs.size(); ++i) {
    const double k2 = g.mode_norm_sq(i);
    if (k2 >= 1 && k2 <= 36) w.coeffs[i] = std::complex<double>(normal(rng), normal(rng)) / k2;
  }
  s.set_state(inverse_transform(w));
  const double e0 = s.energy(), z0 = s.enstrophy();
  for (int i = 0; i < 100; ++i) s.step(nullptr);
  CHECK(s.cfl() < 1.0);
  CHECK(std::abs(s.energy() / e0 - 1.0) < 1e-3);
  CHECK(std::abs(s.enstrophy() / z0 - 1.0) < 1e-3);
  // The flow did evolve.
  double change = 0.0, size = 0.0;
  const ModeField w0 = forward_transform(inverse_transform(w));
  for (std::size_t i = 0; i < w.coeffs.size(); ++i) {
    change += std::norm(s.state().coeffs[i] - w0.coeffs[i]);
    size += std::norm(w0.coeffs[i]);
  }
  CHECK(change > 1e-4 * size);
}

TEST_CASE("single forced mode reaches the stationary enstrophy of its OU process") {
  NSEConfig cfg;
  cfg.n = 32;
  cfg.nu = 0.0;
  cfg.alpha_damp = 1.0;
  cfg.eps = 0.5;
  cfg.dt = 0.1;
  cfg.forced_modes = {{2, 1}};
  NavierStokesSolver s(cfg);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) s.step(&rng);
  double total = 0.0;
  const int steps = 8000;
  for (int i = 0; i < steps; ++i) {
    s.step(&rng);
    total += s.enstrophy();
  }
  // Z_{n+1} = e^{-2α dt} Z_n + ε² dt per forced conjugate pair.
  const double exact = cfg.eps * cfg.eps * cfg.dt / (1.0 - std::exp(-2.0 * cfg.alpha_damp * cfg.dt));
  CHECK(total / steps == doctest::Approx(exact).epsilon(0.1));
  CHECK(s.state().coeffs[0] == std::complex<double>(0.0));
}

TEST_CASE("forced ensembles: mean mode, determinism, ordering") {
  NSEConfig cfg;
  cfg.n = 32;
  cfg.burn_in = 20;
  cfg.thin = 5;
  cfg.trajectories = 3;
  NSEStats stats;
  const FieldEnsemble a = nse_simulate(cfg, 9, 42, 1, &stats);
  const FieldEnsemble b = nse_simulate(cfg, 9, 42, 3);
  REQUIRE(a.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) CHECK(a.samples[i].values == b.samples[i].values);
  CHECK(stats.steps == 3u * (20 + 3 * 5));
  CHECK(stats.max_cfl > 0.0);
  for (const auto& f : a.samples) {
    double mean = 0.0;
    for (double v : f.values) mean += v;
    CHECK(std::abs(mean / f.values.size()) < 1e-12);
  }
  // Trajectory 0 owns slots 0, 3, 6: the first two trajectories' first snapshots differ.
  CHECK(a.samples[0].values != a.samples[1].values);
  CHECK(nse_simulate(cfg, 9, 43, 1).samples[4].values != a.samples[4].values);
  CHECK(a.metadata.at("sim_n") == "48");

  NSEConfig bad = cfg;
  bad.n = 16;
  CHECK_THROWS_AS(nse_simulate(bad, 1, 0), std::invalid_argument);
  bad = cfg;
  bad.dt = 0.0;
  CHECK_THROWS_AS(nse_simulate(bad, 1, 0), std::invalid_argument);
  bad = cfg;
  bad.forced_modes = {{0, 0}};
  CHECK_THROWS_AS(NavierStokesSolver{bad}, std::invalid_argument);
  CHECK_THROWS_AS(nse_simulate(cfg, 0, 0), std::invalid_argument);
}

TEST_CASE("decorrelate") {
  NSEConfig cfg;
  cfg.n = 32;
  cfg.nu = 0.0;
  cfg.alpha_damp = 0.5;
  cfg.dt = 0.1;
  cfg.forced_modes = {{1, 1}};
  cfg.burn_in = 50;
  cfg.thin = 1;
  cfg.trajectories = 1;
  const FieldEnsemble e = nse_simulate(cfg, 1200, 2);

  const Decorrelated same = decorrelate(e, 1);
  REQUIRE(same.ensemble.size() == e.size());
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(same.ensemble.samples[i].values == e.samples[i].values);
  CHECK(decorrelate(e, 4).ensemble.size() == 300);
  CHECK(decorrelate(e, 7).ensemble.size() == 172);
  CHECK_THROWS_AS(decorrelate(e, 0), std::invalid_argument);

  // Enstrophy is an OU-type process with correlation e^{-2α dt} per step.
  const double r1 = same.lag1_autocorrelation;
  const double r5 = decorrelate(e, 5).lag1_autocorrelation;
  const double r20 = decorrelate(e, 20).lag1_autocorrelation;
  CHECK(r1 > r5);
  CHECK(r5 > r20);
  CHECK(r1 > 0.8);
}
