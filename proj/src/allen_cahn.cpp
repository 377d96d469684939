#include "sifield/allen_cahn.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "sifield/integrator.hpp"
#include "sifield/parallel.hpp"
#include "sifield/random.hpp"
#include "sifield/transform.hpp"

namespace sifield {

namespace {

double path_laplacian_eigenvalue(int k, int n) { return 2.0 - 2.0 * std::cos(std::numbers::pi * k / n); }

double curvature_at_minimum(Potential p) { return p == Potential::DoubleWell ? 8.0 : 2.0; }

void validate(const AllenCahnConfig& cfg) {
  if (cfg.n < 8) throw std::invalid_argument(fmt::format("Allen-Cahn grid needs n >= 8, got {}", cfg.n));
  if (!(cfg.step > 0.0)) throw std::invalid_argument("Allen-Cahn step must be > 0");
  if (cfg.thin < 1) throw std::invalid_argument("Allen-Cahn thin must be >= 1");
  if (cfg.burn_in < 0) throw std::invalid_argument("Allen-Cahn burn_in must be >= 0");
  if (cfg.chains < 1) throw std::invalid_argument("Allen-Cahn chains must be >= 1");
}

struct ChainState {
  ModeField c;
  RealField u;
  std::vector<double> grad;
  double energy = 0.0;
};

class Chain {
 public:
  Chain(const AllenCahnConfig& cfg, std::uint64_t seed, std::uint64_t index)
      : cfg_(cfg), grid_(allen_cahn_grid(cfg.n)), rng_(substream(seed, StreamTag::AllenCahnChain, index)) {
    const double h = 1.0 / (cfg.n - 1);
    const double kappa = curvature_at_minimum(cfg.potential);
    stiffness_.resize(cfg.n);
    precond_.resize(cfg.n);
    for (int k = 0; k < cfg.n; ++k) {
      stiffness_[k] = path_laplacian_eigenvalue(k, cfg.n) / (h * h);
      precond_[k] = 1.0 / (stiffness_[k] + kappa);
    }
    state_.c = ModeField(grid_);
    evaluate(state_);
  }

  void step() {
    const double tau = cfg_.step;
    const int n = cfg_.n;
    ChainState next;
    next.c = ModeField(grid_);
    for (int k = 0; k < n; ++k) {
      const double drift = -tau * precond_[k] * state_.grad[k];
      next.c.coeffs[k] = state_.c.coeffs[k].real() + drift + std::sqrt(2.0 * tau * precond_[k]) * normal_(rng_);
    }
    evaluate(next);
    ++stats_.proposals;

    double log_q = 0.0;
    for (int k = 0; k < n; ++k) {
      const double x = state_.c.coeffs[k].real();
      const double y = next.c.coeffs[k].real();
      const double fwd = y - x + tau * precond_[k] * state_.grad[k];
      const double bwd = x - y + tau * precond_[k] * next.grad[k];
      log_q += (fwd * fwd - bwd * bwd) / (4.0 * tau * precond_[k]);
    }
    const double log_accept = state_.energy - next.energy + log_q;
    if (std::log(uniform_(rng_)) < log_accept) {
      state_ = std::move(next);
      ++stats_.accepted;
    }
  }

  const RealField& field() const { return state_.u; }
  const AllenCahnStats& stats() const { return stats_; }

 private:
  void evaluate(ChainState& s) const {
    s.u = inverse_transform(s.c);
    s.energy = allen_cahn_energy(cfg_.potential, s.u.values);
    if (!std::isfinite(s.energy)) throw NumericalError(static_cast<int>(stats_.proposals), INFINITY);
    RealField dv(grid_);
    for (std::size_t j = 0; j < dv.values.size(); ++j) dv[j] = potential_derivative(cfg_.potential, s.u[j]);
    const ModeField g = forward_transform(dv);
    s.grad.resize(cfg_.n);
    for (int k = 0; k < cfg_.n; ++k) s.grad[k] = stiffness_[k] * s.c.coeffs[k].real() + g.coeffs[k].real();
  }

  AllenCahnConfig cfg_;
  GridSpec grid_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::vector<double> stiffness_;
  std::vector<double> precond_;
  ChainState state_;
  AllenCahnStats stats_;
};

}  // namespace

std::string_view to_string(Potential p) { return p == Potential::DoubleWell ? "double-well" : "quadratic"; }

Potential potential_from_string(std::string_view name) {
  if (name == "double-well") return Potential::DoubleWell;
  if (name == "quadratic") return Potential::Quadratic;
  throw std::invalid_argument(fmt::format("unknown potential '{}' (expected double-well or quadratic)", name));
}

double potential_value(Potential p, double u) {
  if (p == Potential::Quadratic) return u * u;
  const double w = 1.0 - u * u;
  return w * w;
}

double potential_derivative(Potential p, double u) {
  if (p == Potential::Quadratic) return 2.0 * u;
  return -4.0 * u * (1.0 - u * u);
}

double allen_cahn_energy(Potential p, std::span<const double> u) {
  if (u.size() < 2) throw std::invalid_argument("Allen-Cahn energy needs at least two nodes");
  const double h = 1.0 / static_cast<double>(u.size() - 1);
  double gradient = 0.0, potential = 0.0;
  for (std::size_t j = 0; j + 1 < u.size(); ++j) {
    const double d = u[j + 1] - u[j];
    gradient += d * d;
  }
  for (const double v : u) potential += potential_value(p, v);
  return 0.5 * gradient / h + h * potential;
}

GridSpec allen_cahn_grid(int n) { return GridSpec(1, n, Basis::NeumannCosine); }

ModeSpectrum allen_cahn_reference_spectrum(int n, double zero_mode_variance) {
  if (!(zero_mode_variance > 0.0)) throw std::invalid_argument("zero-mode variance must be > 0");
  const GridSpec grid = allen_cahn_grid(n);
  const double h = 1.0 / (n - 1);
  std::vector<double> c(grid.mode_count());
  c[0] = zero_mode_variance;
  for (int k = 1; k < n; ++k) c[k] = h * h / path_laplacian_eigenvalue(k, n);
  return {grid, std::move(c)};
}

FieldEnsemble allen_cahn_sample(const AllenCahnConfig& cfg, std::size_t count, std::uint64_t seed, unsigned threads,
                                AllenCahnStats* stats) {
  validate(cfg);
  if (count == 0) throw std::invalid_argument("Allen-Cahn sample count must be >= 1");
  FieldEnsemble out;
  out.grid = allen_cahn_grid(cfg.n);
  out.samples.resize(count);
  const auto chains = static_cast<std::size_t>(cfg.chains);
  std::vector<AllenCahnStats> chain_stats(chains);
  parallel_for(chains, threads, [&](std::size_t c) {
    if (c >= count) return;
    Chain chain(cfg, seed, c);
    for (int s = 0; s < cfg.burn_in; ++s) chain.step();
    for (std::size_t slot = c; slot < count; slot += chains) {
      for (int s = 0; s < cfg.thin; ++s) chain.step();
      out.samples[slot] = chain.field();
    }
    chain_stats[c] = chain.stats();
  });
  if (stats) {
    *stats = {};
    for (const auto& s : chain_stats) {
      stats->proposals += s.proposals;
      stats->accepted += s.accepted;
    }
  }
  out.metadata["seed"] = std::to_string(seed);
  out.metadata["source"] = "allen-cahn";
  out.metadata["potential"] = std::string(to_string(cfg.potential));
  out.metadata["step"] = fmt::format("{}", cfg.step);
  out.metadata["burn_in"] = std::to_string(cfg.burn_in);
  out.metadata["thin"] = std::to_string(cfg.thin);
  out.metadata["chains"] = std::to_string(cfg.chains);
  return out;
}

}  // namespace sifield
