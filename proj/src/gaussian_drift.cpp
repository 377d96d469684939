#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "sifield/drift.hpp"
#include "sifield/transform.hpp"

namespace sifield {

namespace {

constexpr std::size_t kCoefficientCacheLimit = 8192;

void check_unit_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error(fmt::format("time {} outside [0, 1]", t));
}

double coefficient(const ScheduleValue& v, double c0, double c1) {
  return (v.alpha_dalpha * c0 + v.beta_dbeta * c1) / (v.alpha * v.alpha * c0 + v.beta * v.beta * c1);
}

}  // namespace

GaussianDrift::GaussianDrift(ModeSpectrum c0, ModeSpectrum c1, Schedule schedule)
    : c0_(std::move(c0)), c1_(std::move(c1)), schedule_(std::move(schedule)) {
  require_same_grid(c0_.grid, c1_.grid, "GaussianDrift");
  if (schedule_.is_per_mode()) require_same_grid(c0_.grid, schedule_.ratio().grid, "GaussianDrift schedule");
}

double GaussianDrift::mode_coefficient(double t, std::size_t flat) const {
  check_unit_time(t);
  if (flat >= c0_.variance.size()) throw std::out_of_range("mode position out of range");
  return coefficient(schedule_.at(t, flat), c0_[flat], c1_[flat]);
}

std::shared_ptr<const std::vector<double>> GaussianDrift::coefficients_at(double t) const {
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(t); it != cache_.end()) return it->second;
  }
  check_unit_time(t);
  auto values = std::make_shared<std::vector<double>>(c0_.variance.size());
  if (schedule_.is_per_mode()) {
    for (std::size_t i = 0; i < values->size(); ++i) (*values)[i] = coefficient(schedule_.at(t, i), c0_[i], c1_[i]);
  } else {
    const ScheduleValue v = schedule_.at(t);
    for (std::size_t i = 0; i < values->size(); ++i) (*values)[i] = coefficient(v, c0_[i], c1_[i]);
  }
  std::lock_guard lock(cache_mutex_);
  if (cache_.size() >= kCoefficientCacheLimit) cache_.clear();
  return cache_.emplace(t, std::move(values)).first->second;
}

void GaussianDrift::velocity(double t, std::span<const double> x, std::span<double> out) const {
  const auto b = coefficients_at(t);
  if (x.size() != 2 * b->size() || out.size() != x.size())
    throw std::invalid_argument("GaussianDrift::velocity: state size does not match the mode layout");
  for (std::size_t i = 0; i < b->size(); ++i) {
    out[2 * i] = (*b)[i] * x[2 * i];
    out[2 * i + 1] = (*b)[i] * x[2 * i + 1];
  }
}

double gaussian_drift_mode(double t, const ModeIndex& m, const GaussianDrift& gd) {
  return gd.mode_coefficient(t, gd.grid().flat_index(m));
}

RealField apply_gaussian_drift(const RealField& x, double t, const GaussianDrift& gd) {
  require_same_grid(x.grid, gd.grid(), "apply_gaussian_drift");
  ModeField c = forward_transform(x);
  ModeField out(c.grid);
  gd.velocity(t, c.flat(), out.flat());
  return inverse_transform(out);
}

std::vector<EnvelopePoint> drift_gradient_envelope(const GaussianDrift& gd, std::span<const double> t_grid) {
  std::vector<EnvelopePoint> out;
  out.reserve(t_grid.size());
  const std::size_t modes = gd.c0().variance.size();
  for (const double t : t_grid) {
    EnvelopePoint p{t, -1.0, 0, 0.0};
    for (std::size_t i = 0; i < modes; ++i) {
      const double b = gd.mode_coefficient(t, i);
      if (std::abs(b) > p.envelope) {
        p.envelope = std::abs(b);
        p.argmax = i;
        p.coefficient = b;
      }
    }
    out.push_back(p);
  }
  return out;
}

std::vector<double> uniform_time_grid(std::size_t points, double t0, double t1) {
  if (points < 2) throw std::invalid_argument("time grid needs at least 2 points");
  if (!(t0 < t1)) throw std::invalid_argument("time grid needs t0 < t1");
  std::vector<double> t(points);
  for (std::size_t i = 0; i < points; ++i)
    t[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(points - 1);
  t.back() = t1;
  return t;
}

double cameron_martin_inner(const ModeField& y, const ModeField& x, const ModeSpectrum& c0) {
  require_same_grid(y.grid, x.grid, "cameron_martin_inner");
  require_same_grid(y.grid, c0.grid, "cameron_martin_inner");
  double s = 0.0;
  for (std::size_t i = 0; i < y.coeffs.size(); ++i) {
    const double re = y.coeffs[i].real() * x.coeffs[i].real() + y.coeffs[i].imag() * x.coeffs[i].imag();
    s += y.grid.multiplicity(i) * re / c0[i];
  }
  return s;
}

double cameron_martin_inner(const RealField& y, const RealField& x, const ModeSpectrum& c0) {
  return cameron_martin_inner(forward_transform(y), forward_transform(x), c0);
}

double cameron_martin_norm_sq(const ModeField& y, const ModeSpectrum& c0) { return cameron_martin_inner(y, y, c0); }

double cameron_martin_norm_sq(const RealField& y, const ModeSpectrum& c0) {
  const ModeField c = forward_transform(y);
  return cameron_martin_inner(c, c, c0);
}

}  // namespace sifield
