#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sifield/gaussian_measure.hpp"

namespace sifield {

/// Stochastically forced 2D vorticity equation on [0, 2π)²,
///   dω + v·∇ω dt = νΔω dt - αω dt + ε dη,
/// with v = ∇⊥(-Δ)^{-1}ω. State is kept as orthonormal Fourier coefficients
/// on a simulation grid of sim_n points per axis and truncated to n for output.
struct NSEConfig {
  int n = 64;
  int sim_n = 0;  ///< 0 selects 3n/2
  double nu = 1e-3;
  double alpha_damp = 0.1;
  double eps = 1.0;
  std::vector<ModeIndex> forced_modes;  ///< empty selects all 1 <= |m| <= 4
  double dt = 0.01;  ///< keeps the forced-run CFL number below 1 at n = 64
  int burn_in = 4000;
  int thin = 100;
  int trajectories = 4;
};

/// Modes with kmin <= |m| <= kmax, one representative per conjugate pair.
std::vector<ModeIndex> forcing_band(double kmin, double kmax);

struct NSEStats {
  double max_cfl = 0.0;
  std::uint64_t steps = 0;
};

class NavierStokesSolver {
 public:
  explicit NavierStokesSolver(const NSEConfig& cfg);

  const GridSpec& grid() const { return grid_; }
  ModeField& state() { return omega_; }
  const ModeField& state() const { return omega_; }
  void set_state(const RealField& omega);

  /// One integrating-factor RK4 step of the deterministic part, then the
  /// forcing increment when rng is given and ε > 0.
  void step(std::mt19937_64* rng);

  double time() const { return time_; }
  /// ½ Σ |v̂|² and ½ Σ |ω̂|² (orthonormal coefficients, conjugates counted).
  double energy() const;
  double enstrophy() const;
  /// max |v| dt / Δx of the current state.
  double cfl() const;

  /// Vorticity truncated to an n-point grid.
  RealField snapshot(int n) const;

 private:
  ModeField nonlinear(const ModeField& w) const;
  void dealias(ModeField& w) const;

  NSEConfig cfg_;
  GridSpec grid_;
  double time_ = 0.0;
  int kmax_;
  ModeField omega_;
  std::vector<double> decay_half_;
  std::vector<double> decay_full_;
  std::vector<std::size_t> forced_;  ///< flat positions of forced modes (with conjugate partners when stored)
  std::vector<std::size_t> partner_;
};

/// `count` vorticity snapshots on cfg.n, `thin` steps apart after `burn_in`
/// steps, from cfg.trajectories independent trajectories started at rest.
/// Ordered by snapshot time, then trajectory.
FieldEnsemble nse_simulate(const NSEConfig& cfg, std::size_t count, std::uint64_t seed, unsigned threads = 0,
                           NSEStats* stats = nullptr);

/// ½ Σ |ω̂|² per sample.
std::vector<double> enstrophy_series(const FieldEnsemble& e);
/// Lag-1 autocorrelation of a series (0 when it has no variance).
double lag1_autocorrelation(const std::vector<double>& series);

struct Decorrelated {
  FieldEnsemble ensemble;
  double lag1_autocorrelation = 0.0;  ///< of total enstrophy at the retained lag
};

/// Keeps every `thin`-th sample.
Decorrelated decorrelate(const FieldEnsemble& e, int thin);

}  // namespace sifield
