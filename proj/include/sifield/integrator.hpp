#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sifield/drift.hpp"

namespace sifield {

enum class Scheme { Euler, Heun, RK4 };

std::string_view to_string(Scheme scheme);
Scheme scheme_from_string(std::string_view name);

struct IntegratorConfig {
  Scheme scheme = Scheme::RK4;
  int steps = 10;
  double t_end = 1.0;
};

/// Raised when the state stops being finite or exceeds the divergence threshold.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(int step, double max_abs);
  int step() const { return step_; }
  double max_abs() const { return max_abs_; }

 private:
  int step_;
  double max_abs_;
};

inline constexpr double kDivergenceThreshold = 1e12;

/// Integrates packed coefficients in place from t = 0 to cfg.t_end.
void integrate_coefficients(std::span<double> x, const Drift& drift, const IntegratorConfig& cfg);

ModeField integrate(ModeField x0, const Drift& drift, const IntegratorConfig& cfg);
RealField integrate(const RealField& x0, const Drift& drift, const IntegratorConfig& cfg);

/// Draws sample(noise, seed, i) for i < count and integrates each.
FieldEnsemble generate_ensemble(const ModeSpectrum& noise, const Drift& drift, const IntegratorConfig& cfg,
                                std::size_t count, std::uint64_t seed, unsigned threads = 0);

/// y(t_end)/y(0) for the scalar ODE y' = b(t) y under cfg's scheme.
double linear_gain(const std::function<double(double)>& b, const IntegratorConfig& cfg);

}  // namespace sifield
