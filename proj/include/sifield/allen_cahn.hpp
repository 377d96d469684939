#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "sifield/gaussian_measure.hpp"

namespace sifield {

enum class Potential { DoubleWell, Quadratic };

std::string_view to_string(Potential p);
Potential potential_from_string(std::string_view name);

/// Preconditioned MALA on the finite-difference energy
///   E(u) = Σ_j ½(u_{j+1} - u_j)²/h + h Σ_j V(u_j),  h = 1/(n-1),
/// with free (zero-Neumann) endpoints. Proposals are made in the cosine
/// eigenbasis with preconditioner (L/h² + κ)^{-1}, κ the curvature of V at
/// its minima, and `step` the Langevin time step in those units.
struct AllenCahnConfig {
  int n = 32;
  double step = 0.5;
  int burn_in = 1000;
  int thin = 10;
  Potential potential = Potential::DoubleWell;
  int chains = 8;
};

struct AllenCahnStats {
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  double acceptance_rate() const { return proposals == 0 ? 0.0 : static_cast<double>(accepted) / proposals; }
};

double potential_value(Potential p, double u);
double potential_derivative(Potential p, double u);

/// E(u) for nodal values u (size n).
double allen_cahn_energy(Potential p, std::span<const double> u);

GridSpec allen_cahn_grid(int n);

/// Variance of the Gaussian reference part exp(-Σ ½(u_{j+1}-u_j)²/h) per
/// cosine mode, h²/λ_k with λ_k = 2 - 2cos(πk/n); the constant mode, which
/// that part leaves free, gets `zero_mode_variance`.
ModeSpectrum allen_cahn_reference_spectrum(int n, double zero_mode_variance = 1.0);

/// `count` states taken every `thin` steps after `burn_in`, split across
/// cfg.chains independent chains (chain c uses its own substream) and
/// ordered by retained step, then chain.
FieldEnsemble allen_cahn_sample(const AllenCahnConfig& cfg, std::size_t count, std::uint64_t seed,
                                unsigned threads = 0, AllenCahnStats* stats = nullptr);

}  // namespace sifield
