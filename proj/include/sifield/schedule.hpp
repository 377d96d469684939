#pragma once

#include <memory>
#include <string>

#include "sifield/gaussian_measure.hpp"

namespace sifield {

/// Interpolation coefficients at one time. alpha_dalpha = α·α̇ and
/// beta_dbeta = β·β̇ are given in closed form; they stay finite where α̇ or β̇
/// diverge (t = 1 and t = 0 for the square-root schedules), so drift formulas
/// should use the products.
struct ScheduleValue {
  double alpha = 1.0;
  double beta = 0.0;
  double dalpha = -1.0;
  double dbeta = 1.0;
  double alpha_dalpha = 0.0;
  double beta_dbeta = 0.0;
};

enum class ScheduleKind { Linear, ScaleAdaptive, PerMode };

/// α = 1 - t, β = t.
ScheduleValue linear_schedule_value(double t);

/// The log-linear variance family: α² = (r^t - r)/(1 - r), β² = (1 - r^t)/(1 - r),
/// so that α²c₀ + β²c₁ = c₀^{1-t} c₁^t whenever r = c₁/c₀. Ratios with
/// |r - 1| < 1e-8 use the limit α² = 1 - t, β² = t.
ScheduleValue log_variance_schedule_value(double r, double t);

class Schedule {
 public:
  static Schedule linear();
  /// Scalar schedule with r = μ* for every mode; requires 0 < μ* <= 1.
  static Schedule scale_adaptive(double mu_star);
  /// Wavenumber-dependent schedule; `ratio` holds c₁(m)/c₀(m).
  static Schedule per_mode(const ModeSpectrum& ratio);

  ScheduleKind kind() const { return kind_; }
  bool is_per_mode() const { return kind_ == ScheduleKind::PerMode; }
  double mu_star() const { return mu_star_; }
  const ModeSpectrum& ratio() const;

  /// Scalar schedules only.
  ScheduleValue at(double t) const;
  /// Value for one flat mode position; scalar kinds ignore the mode.
  ScheduleValue at(double t, std::size_t mode) const;

  std::string describe() const;

 private:
  ScheduleKind kind_ = ScheduleKind::Linear;
  double mu_star_ = 1.0;
  std::shared_ptr<const ModeSpectrum> ratio_;
};

}  // namespace sifield
