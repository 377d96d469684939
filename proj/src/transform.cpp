#include "sifield/transform.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace sifield {
namespace {

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

enum class Direction { Forward, Inverse };

// FFTW planning is not thread-safe; execution of a finished plan with the
// new-array interface is. Plans are created once per (grid, direction).
class PlanCache {
 public:
  fftw_plan get(const GridSpec& grid, Direction dir) {
    const auto key = std::make_tuple(static_cast<int>(grid.basis()), grid.ndim(), grid.n(), static_cast<int>(dir));
    std::lock_guard lock(mutex_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second.get();
    PlanHandle plan(make(grid, dir));
    if (!plan) throw std::runtime_error("FFTW plan creation failed for " + describe(grid));
    return plans_.emplace(key, std::move(plan)).first->second.get();
  }

 private:
  static fftw_plan make(const GridSpec& grid, Direction dir) {
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int d = grid.ndim();
    const int a = grid.axis_size();
    int dims[2] = {a, a};
    const std::size_t real_len = grid.size();
    const std::size_t complex_len = grid.mode_count();
    double* rin = fftw_alloc_real(real_len);
    double* rout = fftw_alloc_real(real_len);
    fftw_complex* cbuf = fftw_alloc_complex(complex_len);
    fftw_plan plan = nullptr;
    switch (grid.basis()) {
      case Basis::DirichletSine: {
        fftw_r2r_kind kinds[2] = {FFTW_RODFT00, FFTW_RODFT00};
        plan = fftw_plan_r2r(d, dims, rin, rout, kinds, flags);
        break;
      }
      case Basis::NeumannCosine: {
        const fftw_r2r_kind k = dir == Direction::Forward ? FFTW_REDFT10 : FFTW_REDFT01;
        fftw_r2r_kind kinds[2] = {k, k};
        plan = fftw_plan_r2r(d, dims, rin, rout, kinds, flags);
        break;
      }
      case Basis::PeriodicFourier:
        plan = dir == Direction::Forward ? fftw_plan_dft_r2c(d, dims, rin, cbuf, flags)
                                         : fftw_plan_dft_c2r(d, dims, cbuf, rout, flags);
        break;
    }
    fftw_free(rin);
    fftw_free(rout);
    fftw_free(cbuf);
    return plan;
  }

  std::mutex mutex_;
  std::map<std::tuple<int, int, int, int>, PlanHandle> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

// Per-axis scale applied to coefficient index k after the forward r2r
// transform (forward) or before the inverse r2r transform (inverse).
std::vector<double> axis_scale(const GridSpec& grid, Direction dir) {
  const int a = grid.axis_size();
  std::vector<double> s(static_cast<std::size_t>(a), 1.0);
  if (grid.basis() == Basis::DirichletSine) {
    if (dir == Direction::Forward)
      for (auto& v : s) v = 1.0 / grid.n();
  } else if (grid.basis() == Basis::NeumannCosine) {
    const double h = 1.0 / (grid.n() - 1);
    for (int k = 0; k < a; ++k) {
      const double norm = std::sqrt((k == 0 ? 1.0 : 2.0) / a);
      s[static_cast<std::size_t>(k)] =
          dir == Direction::Forward ? std::sqrt(h) * norm / 2.0 : norm / std::sqrt(h) * (k == 0 ? 1.0 : 0.5);
    }
  }
  return s;
}

}  // namespace

ModeField forward_transform(const RealField& f) {
  const GridSpec& grid = f.grid;
  if (f.values.size() != grid.size()) throw std::invalid_argument("forward_transform: field size mismatch");
  ModeField out(grid);
  fftw_plan plan = plan_cache().get(grid, Direction::Forward);
  if (grid.basis() == Basis::PeriodicFourier) {
    // r2c does not modify its input for out-of-place plans.
    fftw_execute_dft_r2c(plan, const_cast<double*>(f.values.data()),
                         reinterpret_cast<fftw_complex*>(out.coeffs.data()));
    const double scale = std::pow(std::sqrt(2.0 * std::numbers::pi) / grid.n(), grid.ndim());
    for (auto& c : out.coeffs) c *= scale;
    return out;
  }
  std::vector<double> buf(grid.size());
  fftw_execute_r2r(plan, const_cast<double*>(f.values.data()), buf.data());
  const auto s = axis_scale(grid, Direction::Forward);
  const auto shape = grid.mode_shape();
  for (int i0 = 0; i0 < shape[0]; ++i0)
    for (int i1 = 0; i1 < shape[1]; ++i1) {
      const std::size_t k = static_cast<std::size_t>(i0) * static_cast<std::size_t>(shape[1]) + static_cast<std::size_t>(i1);
      const double w = s[static_cast<std::size_t>(i0)] * (grid.ndim() == 2 ? s[static_cast<std::size_t>(i1)] : 1.0);
      out.coeffs[k] = {buf[k] * w, 0.0};
    }
  return out;
}

RealField inverse_transform(const ModeField& c) {
  const GridSpec& grid = c.grid;
  if (c.coeffs.size() != grid.mode_count()) throw std::invalid_argument("inverse_transform: coefficient size mismatch");
  RealField out(grid);
  fftw_plan plan = plan_cache().get(grid, Direction::Inverse);
  if (grid.basis() == Basis::PeriodicFourier) {
    std::vector<std::complex<double>> tmp = c.coeffs;  // c2r destroys its input
    fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(tmp.data()), out.values.data());
    const double scale = std::pow(2.0 * std::numbers::pi, -0.5 * grid.ndim());
    for (auto& v : out.values) v *= scale;
    return out;
  }
  const auto s = axis_scale(grid, Direction::Inverse);
  const auto shape = grid.mode_shape();
  std::vector<double> buf(grid.size());
  for (int i0 = 0; i0 < shape[0]; ++i0)
    for (int i1 = 0; i1 < shape[1]; ++i1) {
      const std::size_t k = static_cast<std::size_t>(i0) * static_cast<std::size_t>(shape[1]) + static_cast<std::size_t>(i1);
      const double w = s[static_cast<std::size_t>(i0)] * (grid.ndim() == 2 ? s[static_cast<std::size_t>(i1)] : 1.0);
      buf[k] = c.coeffs[k].real() * w;
    }
  fftw_execute_r2r(plan, buf.data(), out.values.data());
  return out;
}

std::complex<double> eigenfunction(const GridSpec& grid, const ModeIndex& m, int j0, int j1) {
  constexpr double pi = std::numbers::pi;
  const auto axis = [&](int mi, int j) -> std::complex<double> {
    const double y = grid.coordinate(j);
    switch (grid.basis()) {
      case Basis::DirichletSine:
        return 2.0 * std::sin(2.0 * pi * mi * y);
      case Basis::PeriodicFourier:
        return std::polar(1.0 / std::sqrt(2.0 * pi), mi * y);
      case Basis::NeumannCosine: {
        const int a = grid.axis_size();
        const double h = 1.0 / (grid.n() - 1);
        const double norm = std::sqrt((mi == 0 ? 1.0 : 2.0) / a) / std::sqrt(h);
        return norm * std::cos(pi * mi * (j + 0.5) / a);
      }
    }
    return 0.0;
  };
  if (!grid.admissible(m)) throw std::invalid_argument("eigenfunction: inadmissible mode");
  return grid.ndim() == 1 ? axis(m[0], j0) : axis(m[0], j0) * axis(m[1], j1);
}

}  // namespace sifield
