#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sifield/gaussian_measure.hpp"
#include "sifield/transform.hpp"

using namespace sifield;

TEST_CASE("matern variances") {
  constexpr double pi = std::numbers::pi;
  CHECK(matern_variance({2.0, 1.0, 0.0}, 123.0) == 4.0);
  CHECK(matern_variance({1.0, 1.0, 3.0}, 4.0 * pi * pi) == doctest::Approx(std::pow(4.0 * pi * pi + 1.0, -3.0)));
  CHECK_THROWS_AS(matern_variance({1.0, 0.0, 1.0}, 0.0), std::invalid_argument);

  // Constant-mode variance σ²τ^{-2s} with the normalization σ² = (4π²+1)³.
  const double sigma = std::pow(4.0 * pi * pi + 1.0, 1.5);
  const GridSpec d(2, 32, Basis::DirichletSine);
  const ModeSpectrum c = matern_spectrum({sigma, 1.0, 3.0}, d);
  // Mode (1, 0) is not on the 2D sine grid; the value for |m|² = 1 is the normalization point.
  CHECK(matern_variance({sigma, 1.0, 3.0}, laplacian_eigenvalue(Basis::DirichletSine, 1.0)) == doctest::Approx(1.0));
  CHECK(c[d.flat_index({1, 1})] == doctest::Approx(std::pow((4.0 * pi * pi + 1.0) / (8.0 * pi * pi + 1.0), 3.0)));

  const ModeSpectrum w = white_spectrum(d, 0.5);
  for (double v : w.variance) CHECK(v == 0.25);
  CHECK_THROWS_AS(matern_spectrum({1.0, 0.0, 1.0}, GridSpec(2, 8, Basis::PeriodicFourier)), std::invalid_argument);
  CHECK_THROWS_AS(ModeSpectrum(d, std::vector<double>(3, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(ModeSpectrum(d, std::vector<double>(d.mode_count(), 0.0)), std::invalid_argument);
}

TEST_CASE("samples are reproducible and index-addressable") {
  const GridSpec g(2, 16, Basis::PeriodicFourier);
  const ModeSpectrum c = matern_spectrum({1.0, 1.0, 1.0}, g);
  const RealField a = sample(c, 42, 5);
  const RealField b = sample(c, 42, 5);
  CHECK(a.values == b.values);
  CHECK(sample(c, 42, 6).values != a.values);
  CHECK(sample(c, 43, 5).values != a.values);

  const FieldEnsemble one = sample_ensemble(c, 8, 42, 1);
  const FieldEnsemble many = sample_ensemble(c, 8, 42, 4);
  for (std::size_t i = 0; i < 8; ++i) CHECK(one.samples[i].values == many.samples[i].values);
  CHECK(one.samples[5].values == a.values);
  CHECK(one.metadata.at("seed") == "42");
}

TEST_CASE("empirical spectrum is a consistent estimator") {
  const GridSpec g(2, 16, Basis::DirichletSine);
  const ModeSpectrum c = matern_spectrum({1.0, 1.0, 1.0}, g);
  const auto mean_rel_error = [&](std::size_t m) {
    double total = 0.0;
    const ModeSpectrum est = empirical_spectrum(sample_ensemble(c, m, 11));
    for (std::size_t i = 0; i < c.variance.size(); ++i) total += std::abs(est[i] / c[i] - 1.0);
    return total / static_cast<double>(c.variance.size());
  };
  const double e100 = mean_rel_error(100);
  const double e10000 = mean_rel_error(10000);
  // Per-mode relative error of a chi-square mean scales as sqrt(2/M).
  CHECK(e100 == doctest::Approx(std::sqrt(2.0 / 100) * std::sqrt(2.0 / std::numbers::pi)).epsilon(0.25));
  CHECK(e100 / e10000 == doctest::Approx(10.0).epsilon(0.3));
}

TEST_CASE("periodic samples have the requested variance on complex modes") {
  const GridSpec g(2, 16, Basis::PeriodicFourier);
  const ModeSpectrum c = matern_spectrum({1.0, 1.0, 2.0}, g);
  const ModeSpectrum est = empirical_spectrum(sample_ensemble(c, 4000, 3));
  double worst = 0.0;
  for (std::size_t i = 0; i < c.variance.size(); ++i) worst = std::max(worst, std::abs(est[i] / c[i] - 1.0));
  // Real-only modes have relative sd sqrt(2/M) ≈ 0.022; 6 sd over ~140 modes.
  CHECK(worst < 0.14);
}

TEST_CASE("empirical spectrum edge cases") {
  const GridSpec g(1, 16, Basis::PeriodicFourier);
  FieldEnsemble empty;
  empty.grid = g;
  CHECK_THROWS_AS(empirical_spectrum(empty), std::invalid_argument);

  FieldEnsemble constant;
  constant.grid = g;
  RealField f(g);
  for (auto& v : f.values) v = 3.0;
  constant.samples = {f, f};
  const ModeSpectrum raw = empirical_spectrum(constant);
  CHECK(raw[0] > 1.0);
  CHECK(raw[1] == kVarianceFloor);
  const ModeSpectrum centered = empirical_spectrum(constant, true);
  CHECK(centered[0] == kVarianceFloor);
}

TEST_CASE("roughen and mu ratio") {
  const GridSpec g(2, 8, Basis::PeriodicFourier);
  const ModeSpectrum w = white_spectrum(g);
  const ModeSpectrum r = roughen(w);
  CHECK(r[g.flat_index({0, 0})] == 1.0);
  CHECK(r[g.flat_index({2, 3})] == 13.0);

  const ModeSpectrum c1 = matern_spectrum({1.0, 1.0, 1.0}, g);
  const MuRatio mr = mu_ratio(c1, w);
  CHECK(mu_star(mr) == doctest::Approx(1.0 / (32.0 + 1.0)));
  CHECK(g.mode_norm_sq(mr.argmin) == 32);
  CHECK(mr.max == doctest::Approx(1.0));
  CHECK_THROWS_AS(mu_ratio(c1, white_spectrum(GridSpec(2, 16, Basis::PeriodicFourier))), std::invalid_argument);
}
