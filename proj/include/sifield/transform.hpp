#pragma once

#include "sifield/grid.hpp"

namespace sifield {

/// Coefficients of f in the grid's orthonormal eigenbasis:
/// c(m) = Σ_j h^d f(y_j) conj(φ_m(y_j)), so Σ_j h^d f_j² = Σ_m mult(m)|c(m)|².
ModeField forward_transform(const RealField& f);

/// Inverse of forward_transform.
RealField inverse_transform(const ModeField& c);

/// Evaluates the orthonormal eigenfunction φ_m at node (j0, j1) directly.
/// Complex for PeriodicFourier; slow, meant for oracles and diagnostics.
std::complex<double> eigenfunction(const GridSpec& grid, const ModeIndex& m, int j0, int j1);

}  // namespace sifield
