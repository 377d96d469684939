#include "sifield/spectrum.hpp"

#include <cmath>
#include <stdexcept>

namespace sifield {

int shell_of(const GridSpec& grid, std::size_t flat) {
  const int r2 = grid.mode_norm_sq(flat);
  int k = static_cast<int>(std::sqrt(static_cast<double>(r2)));
  // Integer correction so that k² <= r2 < (k+1)² holds exactly.
  while (k * k > r2) --k;
  while ((k + 1) * (k + 1) <= r2) ++k;
  return (k >= 1 && k <= grid.max_shell()) ? k : -1;
}

std::vector<ShellValue> shell_sums(const GridSpec& grid, std::span<const double> per_mode) {
  if (per_mode.size() != grid.mode_count()) throw std::invalid_argument("shell_sums: layout size mismatch");
  const int top = grid.max_shell();
  std::vector<ShellValue> out(static_cast<std::size_t>(std::max(top, 0)));
  for (int k = 1; k <= top; ++k) out[static_cast<std::size_t>(k - 1)].k = k;
  for (std::size_t i = 0; i < per_mode.size(); ++i) {
    const int k = shell_of(grid, i);
    if (k < 0) continue;
    out[static_cast<std::size_t>(k - 1)].energy += grid.multiplicity(i) * per_mode[i];
  }
  return out;
}

std::vector<ShellValue> shell_spectrum(const ModeField& c) {
  std::vector<double> power(c.coeffs.size());
  for (std::size_t i = 0; i < power.size(); ++i) power[i] = std::norm(c.coeffs[i]);
  return shell_sums(c.grid, power);
}

double l2_norm_sq(const RealField& f) {
  double s = 0.0;
  for (double v : f.values) s += v * v;
  return s * f.grid.cell_volume();
}

double coefficient_norm_sq(const ModeField& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.coeffs.size(); ++i) s += c.grid.multiplicity(i) * std::norm(c.coeffs[i]);
  return s;
}

}  // namespace sifield
