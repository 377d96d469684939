#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "sifield/drift.hpp"
#include "sifield/transform.hpp"

using namespace sifield;

namespace {

constexpr double kPi = std::numbers::pi;

RealField from_coefficients(const GridSpec& g, const std::vector<double>& c) {
  ModeField m(g);
  for (std::size_t i = 0; i < c.size(); ++i) m.coeffs[i] = c[i];
  return inverse_transform(m);
}

ModeSpectrum ratio_of(const ModeSpectrum& c1, const ModeSpectrum& c0) {
  std::vector<double> r(c0.variance.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = c1[i] / c0[i];
  return {c0.grid, r};
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double envelope_at(const GaussianDrift& gd, double t) {
  const double ts[] = {t};
  return drift_gradient_envelope(gd, ts)[0].envelope;
}

// Σ over the full periodic lattice, no conjugate-pair folding.
double brute_cm_inner(const RealField& y, const RealField& x, const MaternParams& p) {
  const GridSpec& g = y.grid;
  const int n = g.n();
  double total = 0.0;
  for (int m0 = -n / 2; m0 < n / 2; ++m0)
    for (int m1 = -n / 2; m1 < n / 2; ++m1) {
      std::complex<double> yc = 0.0, xc = 0.0;
      for (int j0 = 0; j0 < n; ++j0)
        for (int j1 = 0; j1 < n; ++j1) {
          const double ang = g.coordinate(j0) * m0 + g.coordinate(j1) * m1;
          const std::complex<double> e = std::polar(1.0 / (2.0 * kPi), -ang);
          yc += y[j0 * n + j1] * e;
          xc += x[j0 * n + j1] * e;
        }
      yc *= g.cell_volume();
      xc *= g.cell_volume();
      total += (std::conj(yc) * xc).real() / matern_variance(p, m0 * m0 + m1 * m1);
    }
  return total;
}

}  // namespace

TEST_CASE("gaussian drift closed-form values") {
  const GridSpec g(2, 16, Basis::PeriodicFourier);
  const ModeSpectrum c0 = white_spectrum(g);
  const ModeSpectrum c1 = matern_spectrum({1.0, 1.0, 2.0}, g);
  const GaussianDrift lin(c0, c1, Schedule::linear());
  for (std::size_t i = 0; i < g.mode_count(); i += 7) CHECK(lin.mode_coefficient(0.0, i) == doctest::Approx(-1.0));
  CHECK(gaussian_drift_mode(0.0, {3, 2}, lin) == doctest::Approx(-1.0));

  const GaussianDrift same(c0, c0, Schedule::linear());
  for (std::size_t i = 0; i < g.mode_count(); ++i) CHECK(std::abs(same.mode_coefficient(0.5, i)) < 1e-15);

  // Linear schedule as a function of μ: ((t-1) + tμ)/((t-1)² + t²μ).
  const double t = 0.3;
  const std::size_t k = g.flat_index({4, 1});
  const double mu = c1[k] / c0[k];
  CHECK(lin.mode_coefficient(t, k) == doctest::Approx(((t - 1) + t * mu) / ((t - 1) * (t - 1) + t * t * mu)));

  CHECK_THROWS_AS(GaussianDrift(c0, white_spectrum(GridSpec(2, 8, Basis::PeriodicFourier)), Schedule::linear()),
                  std::invalid_argument);
}

TEST_CASE("per-mode schedule gives a constant logarithmic drift") {
  const GridSpec g(2, 32, Basis::DirichletSine);
  const ModeSpectrum c0 = white_spectrum(g);
  const ModeSpectrum c1 = matern_spectrum({std::pow(4 * kPi * kPi + 1, 1.5), 1.0, 3.0}, g);
  const ModeSpectrum r = ratio_of(c1, c0);
  const GaussianDrift gd(c0, c1, Schedule::per_mode(r));
  const auto ts = uniform_time_grid(1001);
  const double h = 1e-5;
  for (std::size_t i = 0; i < g.mode_count(); i += 37) {
    const double expected = 0.5 * std::log(c1[i] / c0[i]);
    for (std::size_t j = 0; j < ts.size(); j += 50) {
      CHECK(gd.mode_coefficient(ts[j], i) == doctest::Approx(expected).epsilon(1e-8));
      // Oracle: half the time derivative of the log interpolant variance.
      const double tc = std::clamp(ts[j], h, 1.0 - h);
      const auto var = [&](double s) {
        const ScheduleValue v = log_variance_schedule_value(r[i], s);
        return v.alpha * v.alpha * c0[i] + v.beta * v.beta * c1[i];
      };
      const double fd = 0.5 * (std::log(var(tc + h)) - std::log(var(tc - h))) / (2 * h);
      CHECK(std::abs(fd - gd.mode_coefficient(tc, i)) < 1e-8);
    }
  }
}

TEST_CASE("apply_gaussian_drift is diagonal and linear") {
  const GridSpec g(2, 16, Basis::PeriodicFourier);
  const ModeSpectrum c0 = white_spectrum(g);
  const ModeSpectrum c1 = matern_spectrum({1.0, 1.0, 1.0}, g);
  const GaussianDrift gd(c0, c1, Schedule::linear());
  const double t = 0.6;

  const RealField zero = apply_gaussian_drift(RealField(g), t, gd);
  for (double v : zero.values) CHECK(v == 0.0);

  // Single mode (the real part of e_m): a scaled copy.
  const ModeIndex m{2, 3};
  RealField single(g);
  for (int j0 = 0; j0 < 16; ++j0)
    for (int j1 = 0; j1 < 16; ++j1) single[j0 * 16 + j1] = eigenfunction(g, m, j0, j1).real();
  const RealField scaled = apply_gaussian_drift(single, t, gd);
  const double factor = gaussian_drift_mode(t, m, gd);
  for (std::size_t j = 0; j < g.size(); ++j) CHECK(std::abs(scaled[j] - factor * single[j]) < 1e-12);

  const RealField x = sample(c0, 1, 0);
  const RealField y = sample(c0, 1, 1);
  const ModeField bx = forward_transform(apply_gaussian_drift(x, t, gd));
  const ModeField xc = forward_transform(x);
  for (std::size_t i = 0; i < g.mode_count(); ++i)
    CHECK(std::abs(bx.coeffs[i] - gd.mode_coefficient(t, i) * xc.coeffs[i]) < 1e-12);

  RealField combo(g);
  for (std::size_t j = 0; j < g.size(); ++j) combo[j] = 2.5 * x[j] - 0.75 * y[j];
  const RealField lhs = apply_gaussian_drift(combo, t, gd);
  const RealField ax = apply_gaussian_drift(x, t, gd);
  const RealField ay = apply_gaussian_drift(y, t, gd);
  for (std::size_t j = 0; j < g.size(); ++j) CHECK(std::abs(lhs[j] - (2.5 * ax[j] - 0.75 * ay[j])) < 1e-12);

  CHECK_THROWS_AS(apply_gaussian_drift(RealField(GridSpec(2, 8, Basis::PeriodicFourier)), t, gd),
                  std::invalid_argument);
}

TEST_CASE("scale-adaptive envelope is constant") {
  const GridSpec g(2, 32, Basis::PeriodicFourier);
  const ModeSpectrum c0 = white_spectrum(g);
  // Ratios spread over [1e-5, 1], minimum attained at the largest |m|.
  const double max_norm = 2.0 * 16 * 16;
  std::vector<double> v(g.mode_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::pow(1e-5, g.mode_norm_sq(i) / max_norm);
  const ModeSpectrum c1(g, v);
  const GaussianDrift gd(c0, c1, Schedule::scale_adaptive(1e-5));
  const double expected = 0.5 * std::log(1e5);
  for (const auto& p : drift_gradient_envelope(gd, uniform_time_grid(1001)))
    CHECK(std::abs(p.envelope - expected) < 1e-9);
}

TEST_CASE("linear schedule envelope grows like 1/(1-t) towards the data") {
  const GridSpec g(2, 64, Basis::PeriodicFourier);
  const GaussianDrift gd(white_spectrum(g), matern_spectrum({1.0, 1.0, 3.0}, g), Schedule::linear());
  for (int j = 2; j < 8; ++j) {
    const double ratio = envelope_at(gd, 1.0 - std::ldexp(1.0, -(j + 1))) / envelope_at(gd, 1.0 - std::ldexp(1.0, -j));
    CAPTURE(j);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.2));
  }
}

TEST_CASE("noise smoother than data makes the drift blow up near t = 0") {
  const double t = 1e-7;
  double previous = 0.0;
  for (int n : {32, 64, 128}) {
    const GridSpec g(2, n, Basis::PeriodicFourier);
    const ModeSpectrum c0 = matern_spectrum({1.0, 1.0, 3.0}, g);
    const ModeSpectrum c1 = white_spectrum(g);
    const GaussianDrift gd(c0, c1, Schedule::linear());
    const double env = envelope_at(gd, t);
    CAPTURE(n);
    CHECK(env >= 2.0 * previous);
    previous = env;

    // Finite-resolution form of ‖B(t)‖ ≥ β̇/β: the bound with M = max c₁/c₀,
    // which tends to β̇/β as the grid is refined.
    double m_max = 0.0;
    for (std::size_t i = 0; i < g.mode_count(); ++i) m_max = std::max(m_max, c1[i] / c0[i]);
    for (double s : {1e-4, 1e-3, 1e-2}) {
      const ScheduleValue v = linear_schedule_value(s);
      const double bound = (v.beta_dbeta * m_max + v.alpha_dalpha) / (v.beta * v.beta * m_max + v.alpha * v.alpha);
      CHECK(envelope_at(gd, s) >= bound * (1 - 1e-12));
      if (n == 128) CHECK(envelope_at(gd, s) == doctest::Approx(v.dbeta / v.beta).epsilon(1e-3));
    }
  }
}

TEST_CASE("cameron-martin inner product") {
  const GridSpec g(2, 8, Basis::PeriodicFourier);
  const MaternParams p{1.0, 1.0, 1.5};
  const ModeSpectrum c0 = matern_spectrum(p, g);
  const RealField y = sample(white_spectrum(g), 5, 0);
  const RealField x = sample(white_spectrum(g), 5, 1);
  CHECK(cameron_martin_inner(y, x, c0) == doctest::Approx(brute_cm_inner(y, x, p)).epsilon(1e-12));
  CHECK(cameron_martin_norm_sq(y, c0) == doctest::Approx(brute_cm_inner(y, y, p)).epsilon(1e-12));
  CHECK(cameron_martin_norm_sq(y, c0) > 0.0);
  CHECK(cameron_martin_norm_sq(RealField(g), c0) == 0.0);

  // c₀ ≡ 1: the ordinary coefficient inner product, which equals the grid L² product.
  const ModeSpectrum one = white_spectrum(g);
  double l2 = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) l2 += x[j] * y[j] * g.cell_volume();
  CHECK(cameron_martin_inner(y, x, one) == doctest::Approx(l2).epsilon(1e-12));
}

TEST_CASE("empirical conditional mean special cases") {
  const GridSpec g(1, 8, Basis::DirichletSine);
  const ModeSpectrum c0(g, {1.0, 0.5, 0.25});
  const RealField y1 = from_coefficients(g, {1.0, 0.0, 0.5});
  const RealField y2 = from_coefficients(g, {-0.5, 1.0, 0.0});
  const RealField x = from_coefficients(g, {0.3, -0.2, 0.1});

  FieldEnsemble one;
  one.grid = g;
  one.samples = {y1};
  const EmpiricalDrift single(one, c0, Schedule::linear());
  for (double t : {0.0, 0.4, 0.99}) CHECK(max_abs_diff(single.conditional_mean(x, t).values, y1.values) < 1e-12);

  FieldEnsemble two = one;
  two.samples.push_back(y2);
  const EmpiricalDrift ed(two, c0, Schedule::linear());
  std::vector<double> mean(g.size());
  for (std::size_t j = 0; j < mean.size(); ++j) mean[j] = 0.5 * (y1[j] + y2[j]);
  CHECK(max_abs_diff(ed.conditional_mean(x, 0.0).values, mean) < 1e-12);

  // t = 0, linear schedule: b₀(x) = -x + mean.
  const RealField b0 = ed.drift(x, 0.0);
  for (std::size_t j = 0; j < mean.size(); ++j) CHECK(b0[j] == doctest::Approx(mean[j] - x[j]).epsilon(1e-12));

  // t = 0.5, α = β = ½: ℓ = -½‖y‖²_V + 2⟨y, x⟩_V.
  // ‖y1‖² = 2, ⟨y1,x⟩ = 0.5, ‖y2‖² = 2.25, ⟨y2,x⟩ = -0.55.
  const double l1 = -0.5 * 2.0 + 2.0 * 0.5;
  const double l2 = -0.5 * 2.25 + 2.0 * -0.55;
  const double w1 = 1.0 / (1.0 + std::exp(l2 - l1));
  const auto w = ed.weights(forward_transform(x), 0.5);
  CHECK(w[0] == doctest::Approx(w1).epsilon(1e-12));
  CHECK(w[0] + w[1] == doctest::Approx(1.0).epsilon(1e-15));
  const RealField cm = ed.conditional_mean(x, 0.5);
  for (std::size_t j = 0; j < g.size(); ++j) CHECK(std::abs(cm[j] - (w1 * y1[j] + (1 - w1) * y2[j])) < 1e-12);

  // Drift at t = 0.5: (α̇/α)x + (β̇ - βα̇/α)m = -2x + 2m.
  const RealField b = ed.drift(x, 0.5);
  for (std::size_t j = 0; j < g.size(); ++j) CHECK(std::abs(b[j] - (-2.0 * x[j] + 2.0 * cm[j])) < 1e-12);
}

TEST_CASE("empirical drift validation") {
  const GridSpec g(1, 8, Basis::DirichletSine);
  const ModeSpectrum c0 = white_spectrum(g);
  FieldEnsemble empty;
  empty.grid = g;
  CHECK_THROWS_AS(EmpiricalDrift(empty, c0, Schedule::linear()), std::invalid_argument);
  FieldEnsemble data = empty;
  data.samples = {from_coefficients(g, {1.0, 2.0, 3.0})};
  CHECK_THROWS_AS(EmpiricalDrift(data, c0, Schedule::linear(), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalDrift(data, c0, Schedule::linear(), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalDrift(data, c0, Schedule::per_mode(c0)), std::invalid_argument);
  const EmpiricalDrift ed(data, c0, Schedule::linear(), 0.9);
  CHECK_THROWS_AS(ed.conditional_mean(data.samples[0], 0.95), std::domain_error);
  CHECK(ed.dataset_norms()[0] == doctest::Approx(std::sqrt(14.0)));
}

TEST_CASE("empirical weights stay finite far from the data") {
  const GridSpec g(1, 16, Basis::PeriodicFourier);
  const ModeSpectrum c0 = matern_spectrum({1.0, 1.0, 2.0}, g);
  const FieldEnsemble data = sample_ensemble(matern_spectrum({1.0, 1.0, 3.0}, g), 50, 4);
  const EmpiricalDrift ed(data, c0, Schedule::scale_adaptive(1e-3));
  RealField far = sample(c0, 9, 0);
  for (auto& v : far.values) v *= 1e6;
  const auto w = ed.weights(forward_transform(far), ed.t_max());
  double sum = 0.0;
  for (double v : w) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    CHECK((v == 0.0 || v >= 1e-300));
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("conditional mean stays in the convex hull of the data") {
  const GridSpec g(2, 16, Basis::DirichletSine);
  const ModeSpectrum c0 = white_spectrum(g);
  const FieldEnsemble data = sample_ensemble(matern_spectrum({10.0, 1.0, 1.0}, g), 30, 2);
  const EmpiricalDrift ed(data, c0, Schedule::linear());
  std::vector<double> lo(g.mode_count(), 1e300), hi(g.mode_count(), -1e300);
  for (const auto& y : data.samples) {
    const ModeField c = forward_transform(y);
    for (std::size_t i = 0; i < lo.size(); ++i) {
      lo[i] = std::min(lo[i], c.coeffs[i].real());
      hi[i] = std::max(hi[i], c.coeffs[i].real());
    }
  }
  for (int k = 0; k < 20; ++k) {
    const RealField x = sample(c0, 77, k);
    const double t = 0.05 * k;
    const ModeField m = forward_transform(ed.conditional_mean(x, t));
    for (std::size_t i = 0; i < lo.size(); ++i) {
      CHECK(m.coeffs[i].real() >= lo[i] - 1e-12);
      CHECK(m.coeffs[i].real() <= hi[i] + 1e-12);
    }
  }
}

TEST_CASE("conditional mean derivative matches finite differences") {
  const GridSpec g(2, 8, Basis::PeriodicFourier);
  const ModeSpectrum c0 = matern_spectrum({1.0, 1.0, 1.0}, g);
  const ModeSpectrum c1 = matern_spectrum({0.3, 1.0, 2.0}, g);
  const FieldEnsemble data = sample_ensemble(c1, 40, 8);
  const Schedule schedule = Schedule::scale_adaptive(0.05);
  const EmpiricalDrift ed(data, c0, schedule);
  for (double t : {0.2, 0.5, 0.8}) {
    // Typical interpolant points; far from the data the softmax collapses and the derivative vanishes.
    const ScheduleValue s = schedule.at(t);
    RealField z = sample(c0, 3, static_cast<std::uint64_t>(t * 10));
    const RealField y = sample(c1, 5, static_cast<std::uint64_t>(t * 10));
    for (std::size_t j = 0; j < g.size(); ++j) z[j] = s.alpha * z[j] + s.beta * y[j];
    const ModeField x = forward_transform(z);
    const ModeField w = forward_transform(sample(c0, 4, static_cast<std::uint64_t>(t * 10)));
    const double h = 1e-5;
    ModeField xp = x, xm = x;
    for (std::size_t i = 0; i < x.coeffs.size(); ++i) {
      xp.coeffs[i] += h * w.coeffs[i];
      xm.coeffs[i] -= h * w.coeffs[i];
    }
    const ModeField mp = ed.conditional_mean(xp, t);
    const ModeField mm = ed.conditional_mean(xm, t);
    const ModeField d = ed.conditional_mean_derivative(x, t, w);
    double err = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < d.coeffs.size(); ++i) {
      const std::complex<double> fd = (mp.coeffs[i] - mm.coeffs[i]) / (2 * h);
      err += std::norm(fd - d.coeffs[i]);
      norm += std::norm(d.coeffs[i]);
    }
    CAPTURE(t);
    CHECK(norm > 0.0);
    CHECK(std::sqrt(err / norm) < 1e-6);
  }
}

TEST_CASE("empirical drift reproduces the gaussian drift for gaussian data") {
  const GridSpec g(1, 32, Basis::DirichletSine);
  const ModeSpectrum c0 = white_spectrum(g);
  const ModeSpectrum c1 = matern_spectrum({std::sqrt(4 * kPi * kPi + 1), 1.0, 1.0}, g);
  const GaussianDrift exact(c0, c1, Schedule::linear());
  const double t = 0.5;
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EmpiricalDrift ed(sample_ensemble(c1, 10000, 100 + seed), c0, Schedule::linear());
    // A typical point of the interpolant at time t.
    RealField x = sample(c0, 200 + seed, 0);
    const RealField y = sample(c1, 300 + seed, 0);
    for (std::size_t j = 0; j < g.size(); ++j) x[j] = 0.5 * x[j] + 0.5 * y[j];
    const RealField be = ed.drift(x, t);
    const RealField bg = apply_gaussian_drift(x, t, exact);
    RealField diff(g);
    for (std::size_t j = 0; j < g.size(); ++j) diff[j] = be[j] - bg[j];
    total += std::sqrt(cameron_martin_norm_sq(diff, c0) / cameron_martin_norm_sq(bg, c0));
  }
  CHECK(total / 10.0 <= 0.1);
}

TEST_CASE("empirical drift lipschitz probe") {
  const GridSpec g(2, 8, Basis::PeriodicFourier);
  const ModeSpectrum c0 = white_spectrum(g);
  const FieldEnsemble data = sample_ensemble(matern_spectrum({3.0, 1.0, 1.0}, g), 25, 12);
  const double delta = 1e-3;
  const EmpiricalDrift ed(data, c0, Schedule::linear(), 1.0 - delta);
  const double r = *std::max_element(ed.dataset_norms().begin(), ed.dataset_norms().end());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0 - delta);
  for (int k = 0; k < 100; ++k) {
    const double t = unit(rng);
    const RealField y1 = sample(c0, 500, 2 * k);
    const RealField y2 = sample(c0, 500, 2 * k + 1);
    const RealField b1 = ed.drift(y1, t);
    const RealField b2 = ed.drift(y2, t);
    RealField db(g), dy(g);
    for (std::size_t j = 0; j < g.size(); ++j) {
      db[j] = b1[j] - b2[j];
      dy[j] = y1[j] - y2[j];
    }
    const double ratio = std::sqrt(cameron_martin_norm_sq(db, c0) / cameron_martin_norm_sq(dy, c0));
    // |α̇/α| from the linear part plus the 4R²-bounded covariance term.
    const ScheduleValue v = linear_schedule_value(t);
    const double bound = std::abs(v.dalpha / v.alpha) +
                         4 * r * r * (v.beta / (v.alpha * v.alpha)) * std::abs(v.dbeta - v.beta * v.dalpha / v.alpha);
    CAPTURE(t);
    CHECK(ratio <= bound);
  }
}
