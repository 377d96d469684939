#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "sifield/gaussian_measure.hpp"
#include "sifield/schedule.hpp"

namespace sifield {

/// Velocity field of the generative ODE dX = b_t(X) dt.
///
/// States are packed orthonormal coefficients (ModeField::flat()). A drift
/// may integrate in a translated frame x - s(t) when part of its velocity is
/// state independent and known in closed form; the integrator calls
/// to_frame at the start time and from_frame at the end time, and velocity()
/// returns the velocity of the frame coordinates.
class Drift {
 public:
  virtual ~Drift() = default;
  virtual const GridSpec& grid() const = 0;
  virtual double t_max() const { return 1.0; }
  virtual void velocity(double t, std::span<const double> x, std::span<double> out) const = 0;
  virtual void to_frame(double /*t*/, std::span<double> /*x*/) const {}
  virtual void from_frame(double /*t*/, std::span<double> /*x*/) const {}
};

/// Exact drift between N(0, C₀) noise and N(0, C₁) data with mutually
/// diagonal covariances: per mode B̃(t;m) = (αα̇c₀ + ββ̇c₁)/(α²c₀ + β²c₁).
class GaussianDrift final : public Drift {
 public:
  GaussianDrift(ModeSpectrum c0, ModeSpectrum c1, Schedule schedule);

  const GridSpec& grid() const override { return c0_.grid; }
  void velocity(double t, std::span<const double> x, std::span<double> out) const override;

  /// B̃(t; m) for a flat mode position; t in [0, 1].
  double mode_coefficient(double t, std::size_t flat) const;

  const ModeSpectrum& c0() const { return c0_; }
  const ModeSpectrum& c1() const { return c1_; }
  const Schedule& schedule() const { return schedule_; }

 private:
  std::shared_ptr<const std::vector<double>> coefficients_at(double t) const;

  ModeSpectrum c0_;
  ModeSpectrum c1_;
  Schedule schedule_;
  // Ensembles revisit the same stage times; B̃(t, ·) is memoized per t.
  mutable std::mutex cache_mutex_;
  mutable std::map<double, std::shared_ptr<const std::vector<double>>> cache_;
};

double gaussian_drift_mode(double t, const ModeIndex& m, const GaussianDrift& gd);
RealField apply_gaussian_drift(const RealField& x, double t, const GaussianDrift& gd);

struct EnvelopePoint {
  double t = 0.0;
  double envelope = 0.0;      ///< max_m |B̃(t; m)|
  std::size_t argmax = 0;     ///< flat mode attaining it
  double coefficient = 0.0;   ///< signed B̃ at argmax
};

std::vector<EnvelopePoint> drift_gradient_envelope(const GaussianDrift& gd, std::span<const double> t_grid);

/// `points` equispaced times covering [t0, t1].
std::vector<double> uniform_time_grid(std::size_t points, double t0 = 0.0, double t1 = 1.0);

/// ⟨y, x⟩_V = Σ_m ŷ(m) x̂(m) / c₀(m) (real part, conjugate pairs counted twice).
double cameron_martin_inner(const ModeField& y, const ModeField& x, const ModeSpectrum& c0);
double cameron_martin_inner(const RealField& y, const RealField& x, const ModeSpectrum& c0);
double cameron_martin_norm_sq(const ModeField& y, const ModeSpectrum& c0);
double cameron_martin_norm_sq(const RealField& y, const ModeSpectrum& c0);

/// Drift of the interpolant towards the empirical measure of a dataset,
/// b_t(x) = (α̇/α)x + (β̇ - βα̇/α) E[x₁ | I_t = x], with the conditional mean
/// a softmax over dataset samples weighted by the Cameron–Martin density of
/// N(β y, α² C₀) relative to N(0, α² C₀).
///
/// The dataset is stored centered; the mean moves as β_t ȳ in closed form
/// (see Drift), so square-root schedules with β̇₀ = ∞ stay integrable.
class EmpiricalDrift final : public Drift {
 public:
  EmpiricalDrift(const FieldEnsemble& dataset, ModeSpectrum c0, Schedule schedule, double t_max = 1.0 - 1e-3);

  const GridSpec& grid() const override { return c0_.grid; }
  double t_max() const override { return t_max_; }
  void velocity(double t, std::span<const double> x, std::span<double> out) const override;
  void to_frame(double t, std::span<double> x) const override;
  void from_frame(double t, std::span<double> x) const override;

  /// E[x₁ | I_t = x].
  ModeField conditional_mean(const ModeField& x, double t) const;
  RealField conditional_mean(const RealField& x, double t) const;
  /// b_t(x) in the original coordinates. Infinite where β̇_t = ∞ and ȳ ≠ 0.
  ModeField drift(const ModeField& x, double t) const;
  RealField drift(const RealField& x, double t) const;

  /// Softmax weights over the dataset.
  std::vector<double> weights(const ModeField& x, double t) const;
  /// d/ds E[x₁ | I_t = x + s w] at s = 0, from the weights:
  /// (β/α²) Cov(⟨x₁, w⟩_V, x₁ | I_t = x).
  ModeField conditional_mean_derivative(const ModeField& x, double t, const ModeField& w) const;

  std::size_t dataset_size() const { return count_; }
  /// ‖y_i‖_V of the (uncentered) samples.
  const std::vector<double>& dataset_norms() const { return norms_; }
  const Schedule& schedule() const { return schedule_; }
  const ModeSpectrum& c0() const { return c0_; }

 private:
  void check_time(double t) const;
  std::vector<double> pack(std::span<const double> flat) const;
  void unpack(std::span<const double> packed, std::span<double> flat) const;
  std::vector<double> softmax(std::span<const double> centered, double t) const;
  std::vector<double> centered_mean(std::span<const double> centered, double t) const;

  ModeSpectrum c0_;
  Schedule schedule_;
  double t_max_;
  std::size_t count_ = 0;
  std::vector<std::size_t> dof_;      ///< flat double indices carrying a real degree of freedom
  std::vector<double> metric_;        ///< mult/c₀ per packed entry
  std::vector<double> mean_;          ///< packed ȳ
  std::vector<double> data_;          ///< packed centered samples, row-major count_ x dof_.size()
  std::vector<double> centered_norm_sq_;
  std::vector<double> norms_;
};

}  // namespace sifield
