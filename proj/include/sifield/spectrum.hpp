#pragma once

#include <span>
#include <vector>

#include "sifield/grid.hpp"

namespace sifield {

struct ShellValue {
  int k = 0;
  double energy = 0.0;
};

/// Shell index k with k <= |m| < k+1 for a flat mode position, or -1 when
/// the mode falls outside the binned range 1..grid.max_shell().
int shell_of(const GridSpec& grid, std::size_t flat);

/// E(k) = Σ_{k <= |m| < k+1} |c(m)|², counting both members of conjugate
/// pairs, for k = 1..floor(n/2)-1.
std::vector<ShellValue> shell_spectrum(const ModeField& c);

/// Same binning applied to a per-mode quantity already aligned with the mode
/// layout (e.g. variances); multiplicities are applied.
std::vector<ShellValue> shell_sums(const GridSpec& grid, std::span<const double> per_mode);

/// Σ_j h^d f_j².
double l2_norm_sq(const RealField& f);
/// Σ_m mult(m) |c(m)|² over the whole layout.
double coefficient_norm_sq(const ModeField& c);

}  // namespace sifield
