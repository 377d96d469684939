#include "sifield/schedule.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace sifield {
namespace {

constexpr double kLimitBand = 1e-8;

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument(fmt::format("schedule time {} outside [0, 1]", t));
}

ScheduleValue from_squares(double a2, double b2, double ada, double bdb) {
  ScheduleValue v;
  v.alpha = std::sqrt(std::max(a2, 0.0));
  v.beta = std::sqrt(std::max(b2, 0.0));
  v.alpha_dalpha = ada;
  v.beta_dbeta = bdb;
  constexpr double inf = std::numeric_limits<double>::infinity();
  v.dalpha = v.alpha > 0.0 ? ada / v.alpha : (ada < 0.0 ? -inf : 0.0);
  v.dbeta = v.beta > 0.0 ? bdb / v.beta : (bdb > 0.0 ? inf : 0.0);
  return v;
}

}  // namespace

ScheduleValue linear_schedule_value(double t) {
  check_time(t);
  return {1.0 - t, t, -1.0, 1.0, -(1.0 - t), t};
}

ScheduleValue log_variance_schedule_value(double r, double t) {
  check_time(t);
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument(fmt::format("schedule ratio must be positive, got {}", r));
  if (std::abs(r - 1.0) < kLimitBand) return from_squares(1.0 - t, t, -0.5, 0.5);
  const double L = std::log(r);
  const double em = std::expm1(L);
  const double growth = std::exp(t * L);
  const double b2 = std::expm1(t * L) / em;
  const double a2 = growth * std::expm1((1.0 - t) * L) / em;
  const double bdb = 0.5 * L * growth / em;
  return from_squares(a2, b2, -bdb, bdb);
}

Schedule Schedule::linear() { return Schedule{}; }

Schedule Schedule::scale_adaptive(double mu_star) {
  if (!(mu_star > 0.0 && mu_star <= 1.0))
    throw std::invalid_argument(fmt::format("scale-adaptive schedule needs 0 < mu* <= 1, got {}", mu_star));
  Schedule s;
  s.kind_ = ScheduleKind::ScaleAdaptive;
  s.mu_star_ = mu_star;
  return s;
}

Schedule Schedule::per_mode(const ModeSpectrum& ratio) {
  for (double r : ratio.variance)
    if (!(r > 0.0)) throw std::invalid_argument("per-mode schedule needs positive ratios");
  Schedule s;
  s.kind_ = ScheduleKind::PerMode;
  s.ratio_ = std::make_shared<const ModeSpectrum>(ratio);
  return s;
}

const ModeSpectrum& Schedule::ratio() const {
  if (!ratio_) throw std::logic_error("schedule has no per-mode ratios");
  return *ratio_;
}

ScheduleValue Schedule::at(double t) const {
  switch (kind_) {
    case ScheduleKind::Linear: return linear_schedule_value(t);
    case ScheduleKind::ScaleAdaptive: return log_variance_schedule_value(mu_star_, t);
    case ScheduleKind::PerMode: break;
  }
  throw std::logic_error("per-mode schedule evaluated without a mode");
}

ScheduleValue Schedule::at(double t, std::size_t mode) const {
  if (kind_ == ScheduleKind::PerMode) return log_variance_schedule_value(ratio_->variance[mode], t);
  return at(t);
}

std::string Schedule::describe() const {
  switch (kind_) {
    case ScheduleKind::Linear: return "linear";
    case ScheduleKind::ScaleAdaptive: return fmt::format("scale-adaptive(mu*={:.17g})", mu_star_);
    case ScheduleKind::PerMode: return "per-mode";
  }
  return "unknown";
}

}  // namespace sifield
