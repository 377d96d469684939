#include "sifield/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace sifield {

std::string_view to_string(Basis basis) {
  switch (basis) {
    case Basis::DirichletSine: return "dirichlet-sine";
    case Basis::PeriodicFourier: return "periodic-fourier";
    case Basis::NeumannCosine: return "neumann-cosine";
  }
  return "unknown";
}

Basis basis_from_string(std::string_view name) {
  if (name == "dirichlet-sine" || name == "dirichlet") return Basis::DirichletSine;
  if (name == "periodic-fourier" || name == "periodic") return Basis::PeriodicFourier;
  if (name == "neumann-cosine" || name == "neumann") return Basis::NeumannCosine;
  throw std::invalid_argument(fmt::format("unknown basis '{}'", name));
}

GridSpec::GridSpec(int ndim, int n, Basis basis) : ndim_(ndim), n_(n), basis_(basis) {
  if (ndim != 1 && ndim != 2) throw std::invalid_argument(fmt::format("ndim must be 1 or 2, got {}", ndim));
  if (n < 2) throw std::invalid_argument(fmt::format("n must be >= 2, got {}", n));
  switch (basis) {
    case Basis::DirichletSine:
      if (n < 4 || n % 2 != 0)
        throw std::invalid_argument(fmt::format("dirichlet-sine grid needs even n >= 4, got {}", n));
      break;
    case Basis::PeriodicFourier:
      if (n % 2 != 0) throw std::invalid_argument(fmt::format("periodic grid needs even n, got {}", n));
      break;
    case Basis::NeumannCosine:
      break;
    default:
      throw std::invalid_argument("invalid basis tag");
  }
}

int GridSpec::axis_size() const { return basis_ == Basis::DirichletSine ? n_ / 2 - 1 : n_; }

std::size_t GridSpec::size() const {
  const auto a = static_cast<std::size_t>(axis_size());
  return ndim_ == 1 ? a : a * a;
}

std::array<int, 2> GridSpec::mode_shape() const {
  switch (basis_) {
    case Basis::DirichletSine: {
      const int m = n_ / 2 - 1;
      return {m, ndim_ == 2 ? m : 1};
    }
    case Basis::PeriodicFourier:
      return ndim_ == 2 ? std::array<int, 2>{n_, n_ / 2 + 1} : std::array<int, 2>{n_ / 2 + 1, 1};
    case Basis::NeumannCosine:
      return {n_, ndim_ == 2 ? n_ : 1};
  }
  return {0, 0};
}

std::size_t GridSpec::mode_count() const {
  const auto s = mode_shape();
  return static_cast<std::size_t>(s[0]) * static_cast<std::size_t>(s[1]);
}

ModeIndex GridSpec::mode_index(std::size_t flat) const {
  const auto s = mode_shape();
  const int i0 = static_cast<int>(flat / static_cast<std::size_t>(s[1]));
  const int i1 = static_cast<int>(flat % static_cast<std::size_t>(s[1]));
  switch (basis_) {
    case Basis::DirichletSine:
      return ndim_ == 2 ? ModeIndex{i0 + 1, i1 + 1} : ModeIndex{i0 + 1, 0};
    case Basis::PeriodicFourier:
      if (ndim_ == 1) return {i0, 0};
      return {i0 <= n_ / 2 ? i0 : i0 - n_, i1};
    case Basis::NeumannCosine:
      return {i0, i1};
  }
  return {0, 0};
}

int GridSpec::mode_norm_sq(std::size_t flat) const {
  const auto m = mode_index(flat);
  return m[0] * m[0] + m[1] * m[1];
}

double GridSpec::mode_norm(std::size_t flat) const { return std::sqrt(static_cast<double>(mode_norm_sq(flat))); }

int GridSpec::multiplicity(std::size_t flat) const {
  if (basis_ != Basis::PeriodicFourier) return 1;
  const auto s = mode_shape();
  const int last = ndim_ == 2 ? static_cast<int>(flat % static_cast<std::size_t>(s[1]))
                              : static_cast<int>(flat);
  return (last == 0 || last == n_ / 2) ? 1 : 2;
}

bool GridSpec::admissible(const ModeIndex& m) const {
  if (ndim_ == 1 && m[1] != 0) return false;
  const auto in = [&](int v, int lo, int hi) { return v >= lo && v <= hi; };
  switch (basis_) {
    case Basis::DirichletSine: {
      const int top = n_ / 2 - 1;
      return in(m[0], 1, top) && (ndim_ == 1 || in(m[1], 1, top));
    }
    case Basis::PeriodicFourier:
      return in(m[0], -n_ / 2, n_ / 2) && in(m[1], -n_ / 2, n_ / 2);
    case Basis::NeumannCosine:
      return in(m[0], 0, n_ - 1) && (ndim_ == 1 || in(m[1], 0, n_ - 1));
  }
  return false;
}

std::size_t GridSpec::flat_index(const ModeIndex& m) const {
  if (!admissible(m))
    throw std::invalid_argument(fmt::format("mode ({}, {}) is not admissible on {}", m[0], m[1], describe(*this)));
  const auto s = mode_shape();
  const auto at = [&](int i0, int i1) {
    return static_cast<std::size_t>(i0) * static_cast<std::size_t>(s[1]) + static_cast<std::size_t>(i1);
  };
  switch (basis_) {
    case Basis::DirichletSine:
      return ndim_ == 2 ? at(m[0] - 1, m[1] - 1) : at(m[0] - 1, 0);
    case Basis::NeumannCosine:
      return at(m[0], m[1]);
    case Basis::PeriodicFourier: {
      if (ndim_ == 1) return at(std::abs(m[0]), 0);
      int a = m[0];
      int b = m[1];
      if (b < 0 && b != -n_ / 2) {
        a = -a;
        b = -b;
      }
      if (b == -n_ / 2) b = n_ / 2;
      const int i0 = ((a % n_) + n_) % n_;
      return at(i0, b);
    }
  }
  return 0;
}

double laplacian_eigenvalue(Basis basis, double norm_sq) {
  constexpr double pi = std::numbers::pi;
  switch (basis) {
    case Basis::DirichletSine: return 4.0 * pi * pi * norm_sq;
    case Basis::PeriodicFourier: return norm_sq;
    case Basis::NeumannCosine: return pi * pi * norm_sq;
  }
  return 0.0;
}

double GridSpec::eigenvalue(const ModeIndex& m) const {
  if (!admissible(m))
    throw std::invalid_argument(fmt::format("mode ({}, {}) is not admissible on {}", m[0], m[1], describe(*this)));
  return laplacian_eigenvalue(basis_, static_cast<double>(m[0] * m[0] + m[1] * m[1]));
}

double GridSpec::eigenvalue(std::size_t flat) const {
  return laplacian_eigenvalue(basis_, static_cast<double>(mode_norm_sq(flat)));
}

double GridSpec::cell_volume() const {
  double h = 0.0;
  switch (basis_) {
    case Basis::DirichletSine: h = 1.0 / n_; break;
    case Basis::PeriodicFourier: h = 2.0 * std::numbers::pi / n_; break;
    case Basis::NeumannCosine: h = 1.0 / (n_ - 1); break;
  }
  return ndim_ == 1 ? h : h * h;
}

double GridSpec::coordinate(int j) const {
  switch (basis_) {
    case Basis::DirichletSine: return static_cast<double>(j + 1) / n_;
    case Basis::PeriodicFourier: return 2.0 * std::numbers::pi * j / n_;
    case Basis::NeumannCosine: return static_cast<double>(j) / (n_ - 1);
  }
  return 0.0;
}

std::string describe(const GridSpec& grid) {
  return fmt::format("{}D {} grid n={}", grid.ndim(), to_string(grid.basis()), grid.n());
}

RealField::RealField(const GridSpec& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size())
    throw std::invalid_argument(
        fmt::format("field has {} values but {} expects {}", values.size(), describe(grid), grid.size()));
}

void require_same_grid(const GridSpec& a, const GridSpec& b, std::string_view what) {
  if (!(a == b)) throw std::invalid_argument(fmt::format("{}: grid mismatch ({} vs {})", what, describe(a), describe(b)));
}

}  // namespace sifield
