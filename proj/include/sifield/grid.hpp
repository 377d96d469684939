#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sifield {

/// Eigenfunction family of the discretized domain.
///
///  - DirichletSine: -Δ with zero boundary values, eigenfunctions
///    prod_i 2 sin(2π m_i y_i), m_i >= 1, eigenvalue 4π²|m|². A grid with
///    n points per period stores the (n/2-1)^d interior nodes y_j = j/n of
///    the odd-symmetric cell (0, 1/2)^d, on which these sines are complete.
///  - PeriodicFourier: torus [0, 2π)^d, eigenfunctions e^{i m·y}/(2π)^{d/2},
///    eigenvalue |m|². Coefficients kept in the r2c half-plane layout.
///  - NeumannCosine: zero-Neumann finite-difference grid on [0, 1] with
///    nodes y_j = j/(n-1); DCT-II eigenvectors of the path-graph Laplacian,
///    continuum eigenvalue π²|m|².
enum class Basis : std::uint8_t { DirichletSine = 0, PeriodicFourier = 1, NeumannCosine = 2 };

std::string_view to_string(Basis basis);
Basis basis_from_string(std::string_view name);

using ModeIndex = std::array<int, 2>;

class GridSpec {
 public:
  GridSpec() = default;
  GridSpec(int ndim, int n, Basis basis);

  int ndim() const { return ndim_; }
  int n() const { return n_; }
  Basis basis() const { return basis_; }

  /// Stored values per axis in physical space.
  int axis_size() const;
  /// Number of real values in a RealField.
  std::size_t size() const;

  /// Mode-layout extents (last axis is halved for PeriodicFourier).
  std::array<int, 2> mode_shape() const;
  std::size_t mode_count() const;

  /// Signed mode index of a flat mode-layout position (unused axes are 0).
  ModeIndex mode_index(std::size_t flat) const;
  /// Integer |m|² of a flat mode-layout position.
  int mode_norm_sq(std::size_t flat) const;
  double mode_norm(std::size_t flat) const;
  /// 2 when the entry stands for itself and its (unstored) conjugate, else 1.
  int multiplicity(std::size_t flat) const;

  bool admissible(const ModeIndex& m) const;
  /// Flat layout position of an admissible mode; for PeriodicFourier modes
  /// in the unstored half, the position of the conjugate partner.
  std::size_t flat_index(const ModeIndex& m) const;

  /// Laplacian eigenvalue of mode m. Throws for inadmissible m.
  double eigenvalue(const ModeIndex& m) const;
  /// Eigenvalue of the flat mode-layout position.
  double eigenvalue(std::size_t flat) const;

  /// Quadrature weight per stored node (h^d).
  double cell_volume() const;
  /// Coordinate of node j along any axis.
  double coordinate(int j) const;

  /// Largest shell index used in spectra: floor(n/2) - 1.
  int max_shell() const { return n_ / 2 - 1; }

  bool operator==(const GridSpec&) const = default;

 private:
  int ndim_ = 1;
  int n_ = 4;
  Basis basis_ = Basis::PeriodicFourier;
};

/// Laplacian eigenvalue for a mode with squared norm |m|², by basis.
double laplacian_eigenvalue(Basis basis, double norm_sq);

std::string describe(const GridSpec& grid);

/// Real samples on a grid, row-major.
struct RealField {
  GridSpec grid;
  std::vector<double> values;

  RealField() = default;
  explicit RealField(const GridSpec& g) : grid(g), values(g.size(), 0.0) {}
  RealField(const GridSpec& g, std::vector<double> v);

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Coefficients in the orthonormal eigenbasis, laid out per GridSpec::mode_shape.
/// Sine and cosine bases keep zero imaginary parts.
struct ModeField {
  GridSpec grid;
  std::vector<std::complex<double>> coeffs;

  ModeField() = default;
  explicit ModeField(const GridSpec& g) : grid(g), coeffs(g.mode_count()) {}

  /// Interleaved (re, im) view, used for all flat linear algebra on coefficients.
  std::span<double> flat() {
    return {reinterpret_cast<double*>(coeffs.data()), coeffs.size() * 2};
  }
  std::span<const double> flat() const {
    return {reinterpret_cast<const double*>(coeffs.data()), coeffs.size() * 2};
  }
};

/// Throws std::invalid_argument if the grids differ.
void require_same_grid(const GridSpec& a, const GridSpec& b, std::string_view what);

}  // namespace sifield
