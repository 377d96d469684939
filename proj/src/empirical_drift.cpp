#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "sifield/drift.hpp"
#include "sifield/parallel.hpp"
#include "sifield/transform.hpp"

namespace sifield {

namespace {

constexpr double kWeightFlush = 1e-300;

double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < n; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

// β̇·ȳ with 0·∞ read as 0 (β̇₀ = ∞ for square-root schedules).
double scaled(double factor, double value) { return value == 0.0 ? 0.0 : factor * value; }

}  // namespace

EmpiricalDrift::EmpiricalDrift(const FieldEnsemble& dataset, ModeSpectrum c0, Schedule schedule, double t_max)
    : c0_(std::move(c0)), schedule_(std::move(schedule)), t_max_(t_max) {
  if (dataset.empty()) throw std::invalid_argument("EmpiricalDrift: empty dataset");
  if (!(t_max > 0.0 && t_max < 1.0)) throw std::invalid_argument(fmt::format("EmpiricalDrift: t_max {} outside (0, 1)", t_max));
  if (schedule_.is_per_mode()) throw std::invalid_argument("EmpiricalDrift: needs a scalar schedule");
  require_same_grid(dataset.grid, c0_.grid, "EmpiricalDrift");
  for (const auto& y : dataset.samples) require_same_grid(y.grid, c0_.grid, "EmpiricalDrift sample");

  const GridSpec& g = c0_.grid;
  const bool complex_modes = g.basis() == Basis::PeriodicFourier;
  for (std::size_t i = 0; i < g.mode_count(); ++i) {
    const double w = g.multiplicity(i) / c0_[i];
    dof_.push_back(2 * i);
    metric_.push_back(w);
    if (complex_modes) {
      dof_.push_back(2 * i + 1);
      metric_.push_back(w);
    }
  }

  count_ = dataset.size();
  const std::size_t d = dof_.size();
  data_.resize(count_ * d);
  parallel_for(count_, 0, [&](std::size_t i) {
    const ModeField c = forward_transform(dataset.samples[i]);
    const auto flat = c.flat();
    for (std::size_t k = 0; k < d; ++k) data_[i * d + k] = flat[dof_[k]];
  });

  mean_.assign(d, 0.0);
  for (std::size_t i = 0; i < count_; ++i)
    for (std::size_t k = 0; k < d; ++k) mean_[k] += data_[i * d + k];
  for (auto& m : mean_) m /= static_cast<double>(count_);

  norms_.resize(count_);
  centered_norm_sq_.resize(count_);
  for (std::size_t i = 0; i < count_; ++i) {
    double* y = &data_[i * d];
    double full = 0.0, centered = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      full += metric_[k] * y[k] * y[k];
      y[k] -= mean_[k];
      centered += metric_[k] * y[k] * y[k];
    }
    if (!std::isfinite(full)) throw std::invalid_argument(fmt::format("EmpiricalDrift: sample {} has infinite V-norm", i));
    norms_[i] = std::sqrt(full);
    centered_norm_sq_[i] = centered;
  }
}

void EmpiricalDrift::check_time(double t) const {
  if (!(t >= 0.0 && t <= t_max_))
    throw std::domain_error(fmt::format("empirical drift evaluated at t = {} outside [0, t_max = {}]", t, t_max_));
}

std::vector<double> EmpiricalDrift::pack(std::span<const double> flat) const {
  if (flat.size() != 2 * c0_.grid.mode_count())
    throw std::invalid_argument("EmpiricalDrift: state size does not match the mode layout");
  std::vector<double> out(dof_.size());
  for (std::size_t k = 0; k < dof_.size(); ++k) out[k] = flat[dof_[k]];
  return out;
}

void EmpiricalDrift::unpack(std::span<const double> packed, std::span<double> flat) const {
  std::fill(flat.begin(), flat.end(), 0.0);
  for (std::size_t k = 0; k < dof_.size(); ++k) flat[dof_[k]] = packed[k];
}

std::vector<double> EmpiricalDrift::softmax(std::span<const double> centered, double t) const {
  check_time(t);
  const ScheduleValue v = schedule_.at(t);
  const double a2 = v.alpha * v.alpha;
  const double quad = v.beta * v.beta / (2.0 * a2);
  const double lin = v.beta / a2;
  const std::size_t d = dof_.size();
  std::vector<double> xw(d);
  for (std::size_t k = 0; k < d; ++k) xw[k] = metric_[k] * centered[k];

  std::vector<double> p(count_);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count_; ++i) {
    p[i] = -quad * centered_norm_sq_[i] + lin * dot(&data_[i * d], xw.data(), d);
    top = std::max(top, p[i]);
  }
  double total = 0.0;
  for (auto& w : p) {
    w = std::exp(w - top);
    total += w;
  }
  for (auto& w : p) {
    w /= total;
    if (w < kWeightFlush) w = 0.0;
  }
  return p;
}

std::vector<double> EmpiricalDrift::centered_mean(std::span<const double> centered, double t) const {
  const std::vector<double> p = softmax(centered, t);
  const std::size_t d = dof_.size();
  std::vector<double> m(d, 0.0);
  for (std::size_t i = 0; i < count_; ++i) {
    if (p[i] == 0.0) continue;
    const double* y = &data_[i * d];
    for (std::size_t k = 0; k < d; ++k) m[k] += p[i] * y[k];
  }
  return m;
}

void EmpiricalDrift::velocity(double t, std::span<const double> x, std::span<double> out) const {
  check_time(t);
  if (out.size() != x.size()) throw std::invalid_argument("EmpiricalDrift::velocity: output size mismatch");
  const ScheduleValue v = schedule_.at(t);
  const double a2 = v.alpha * v.alpha;
  const double contraction = v.alpha_dalpha / a2;
  const std::vector<double> xs = pack(x);
  const std::size_t d = dof_.size();

  std::vector<double> pull(d, 0.0);
  if (v.beta > 0.0) {
    const double gain = v.dbeta - v.beta * contraction;
    const std::vector<double> m = centered_mean(xs, t);
    for (std::size_t k = 0; k < d; ++k) pull[k] = gain * m[k];
  } else {
    // β → 0 limit of (β̇ - βα̇/α)·E[x₁' | x']: (ββ̇/α²)·mean_i y_i' ⟨y_i', x'⟩_V.
    std::vector<double> xw(d);
    for (std::size_t k = 0; k < d; ++k) xw[k] = metric_[k] * xs[k];
    const double scale = v.beta_dbeta / (a2 * static_cast<double>(count_));
    for (std::size_t i = 0; i < count_; ++i) {
      const double* y = &data_[i * d];
      const double c = scale * dot(y, xw.data(), d);
      for (std::size_t k = 0; k < d; ++k) pull[k] += c * y[k];
    }
  }
  unpack(pull, out);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += contraction * x[k];
}

void EmpiricalDrift::to_frame(double t, std::span<double> x) const {
  const double beta = schedule_.at(t).beta;
  for (std::size_t k = 0; k < dof_.size(); ++k) x[dof_[k]] -= beta * mean_[k];
}

void EmpiricalDrift::from_frame(double t, std::span<double> x) const {
  const double beta = schedule_.at(t).beta;
  for (std::size_t k = 0; k < dof_.size(); ++k) x[dof_[k]] += beta * mean_[k];
}

ModeField EmpiricalDrift::conditional_mean(const ModeField& x, double t) const {
  require_same_grid(x.grid, c0_.grid, "conditional_mean");
  check_time(t);
  ModeField shifted = x;
  to_frame(t, shifted.flat());
  std::vector<double> m = centered_mean(pack(shifted.flat()), t);
  for (std::size_t k = 0; k < m.size(); ++k) m[k] += mean_[k];
  ModeField out(x.grid);
  unpack(m, out.flat());
  return out;
}

RealField EmpiricalDrift::conditional_mean(const RealField& x, double t) const {
  return inverse_transform(conditional_mean(forward_transform(x), t));
}

ModeField EmpiricalDrift::drift(const ModeField& x, double t) const {
  require_same_grid(x.grid, c0_.grid, "empirical drift");
  check_time(t);
  ModeField shifted = x;
  to_frame(t, shifted.flat());
  ModeField out(x.grid);
  velocity(t, shifted.flat(), out.flat());
  const double dbeta = schedule_.at(t).dbeta;
  auto flat = out.flat();
  for (std::size_t k = 0; k < dof_.size(); ++k) flat[dof_[k]] += scaled(dbeta, mean_[k]);
  return out;
}

RealField EmpiricalDrift::drift(const RealField& x, double t) const {
  return inverse_transform(drift(forward_transform(x), t));
}

std::vector<double> EmpiricalDrift::weights(const ModeField& x, double t) const {
  require_same_grid(x.grid, c0_.grid, "EmpiricalDrift::weights");
  check_time(t);
  ModeField shifted = x;
  to_frame(t, shifted.flat());
  return softmax(pack(shifted.flat()), t);
}

ModeField EmpiricalDrift::conditional_mean_derivative(const ModeField& x, double t, const ModeField& w) const {
  require_same_grid(w.grid, c0_.grid, "conditional_mean_derivative");
  const std::vector<double> p = weights(x, t);
  const ScheduleValue v = schedule_.at(t);
  const std::size_t d = dof_.size();
  const std::vector<double> ws = pack(w.flat());
  std::vector<double> ww(d);
  for (std::size_t k = 0; k < d; ++k) ww[k] = metric_[k] * ws[k];

  std::vector<double> a(count_);
  double abar = 0.0;
  for (std::size_t i = 0; i < count_; ++i) {
    a[i] = dot(&data_[i * d], ww.data(), d);
    abar += p[i] * a[i];
  }
  const double scale = v.beta / (v.alpha * v.alpha);
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < count_; ++i) {
    if (p[i] == 0.0) continue;
    const double c = scale * p[i] * (a[i] - abar);
    const double* y = &data_[i * d];
    for (std::size_t k = 0; k < d; ++k) out[k] += c * y[k];
  }
  ModeField result(x.grid);
  unpack(out, result.flat());
  return result;
}

}  // namespace sifield
