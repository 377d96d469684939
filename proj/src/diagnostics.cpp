#include "sifield/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "sifield/parallel.hpp"
#include "sifield/spectrum.hpp"
#include "sifield/transform.hpp"

namespace sifield {

namespace {

// Pairwise sum over values[begin, end) with stride; order fixed by the index range alone.
double pairwise_sum(const std::vector<double>& values, std::size_t begin, std::size_t end, std::size_t stride,
                    std::size_t offset) {
  if (end - begin <= 8) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += values[i * stride + offset];
    return s;
  }
  const std::size_t mid = begin + (end - begin) / 2;
  return pairwise_sum(values, begin, mid, stride, offset) + pairwise_sum(values, mid, end, stride, offset);
}

}  // namespace

const ShellEstimate& SpectrumReport::shell(int k) const {
  for (const auto& s : shells)
    if (s.k == k) return s;
  throw std::out_of_range(fmt::format("spectrum has no shell {}", k));
}

SpectrumReport ensemble_spectrum(const FieldEnsemble& e, unsigned threads) {
  if (e.empty()) throw std::invalid_argument("ensemble_spectrum: empty ensemble");
  const std::size_t count = e.size();
  const auto shells = static_cast<std::size_t>(std::max(e.grid.max_shell(), 0));
  std::vector<double> energy(count * shells);
  parallel_for(count, threads, [&](std::size_t i) {
    require_same_grid(e.samples[i].grid, e.grid, "ensemble_spectrum");
    const auto s = shell_spectrum(forward_transform(e.samples[i]));
    for (std::size_t k = 0; k < shells; ++k) energy[i * shells + k] = s[k].energy;
  });

  SpectrumReport r;
  r.grid = e.grid;
  r.ensemble_size = count;
  const double m = static_cast<double>(count);
  for (std::size_t k = 0; k < shells; ++k) {
    const double mean = pairwise_sum(energy, 0, count, shells, k) / m;
    std::vector<double> dev(count);
    for (std::size_t i = 0; i < count; ++i) dev[i] = (energy[i * shells + k] - mean) * (energy[i * shells + k] - mean);
    const double var = count > 1 ? pairwise_sum(dev, 0, count, 1, 0) / (m - 1.0) : 0.0;
    r.shells.push_back({static_cast<int>(k + 1), mean, std::sqrt(var / m), std::nullopt});
  }
  return r;
}

SpectrumReport analytic_spectrum(const ModeSpectrum& c) {
  SpectrumReport r;
  r.grid = c.grid;
  for (const auto& s : shell_sums(c.grid, c.variance)) r.shells.push_back({s.k, s.energy, 0.0, std::nullopt});
  return r;
}

void attach_reference(SpectrumReport& est, const SpectrumReport& ref) {
  if (est.shells.size() != ref.shells.size()) throw std::invalid_argument("attach_reference: shell count mismatch");
  for (std::size_t i = 0; i < est.shells.size(); ++i) {
    if (est.shells[i].k != ref.shells[i].k) throw std::invalid_argument("attach_reference: shell index mismatch");
    est.shells[i].reference = ref.shells[i].estimate;
  }
}

SpectrumReport truncate_shells(const SpectrumReport& r, int kmax) {
  SpectrumReport out = r;
  std::erase_if(out.shells, [&](const ShellEstimate& s) { return s.k > kmax; });
  return out;
}

LogError spectrum_log_error(const SpectrumReport& est, const SpectrumReport& ref) {
  if (est.shells.size() != ref.shells.size()) throw std::invalid_argument("spectrum_log_error: shell count mismatch");
  if (est.shells.empty()) throw std::invalid_argument("spectrum_log_error: no shells");
  LogError out;
  double total = 0.0;
  for (std::size_t i = 0; i < est.shells.size(); ++i) {
    const auto& a = est.shells[i];
    const auto& b = ref.shells[i];
    if (a.k != b.k) throw std::invalid_argument("spectrum_log_error: shell index mismatch");
    if (!(b.estimate > 0.0)) throw std::invalid_argument(fmt::format("spectrum_log_error: reference shell {} is zero", b.k));
    const double e = std::abs(std::log10(a.estimate) - std::log10(b.estimate));
    out.k.push_back(a.k);
    out.per_shell.push_back(e);
    out.max = std::max(out.max, e);
    total += e;
  }
  out.mean = total / static_cast<double>(out.per_shell.size());
  return out;
}

BimodalityReport bimodality_report(const FieldEnsemble& e, double bin_width, int smoothing) {
  if (e.grid.ndim() != 1) throw std::invalid_argument("bimodality_report expects a 1D ensemble");
  if (e.empty()) throw std::invalid_argument("bimodality_report: empty ensemble");
  if (!(bin_width > 0.0) || smoothing < 0) throw std::invalid_argument("bimodality_report: invalid binning");
  BimodalityReport r;
  r.bin_width = bin_width;
  double positive = 0.0;
  for (const auto& f : e.samples) {
    double s = 0.0;
    for (const double v : f.values) s += v;
    const double mean = s / static_cast<double>(f.values.size());
    r.means.push_back(mean);
    positive += mean > 0.0 ? 1.0 : (mean == 0.0 ? 0.5 : 0.0);
  }
  r.positive_fraction = positive / static_cast<double>(e.size());

  // Bins centered on integer multiples of bin_width.
  const auto bin_of = [&](double v) { return static_cast<long>(std::lround(v / bin_width)); };
  const auto [lo, hi] = std::minmax_element(r.means.begin(), r.means.end());
  const long first = bin_of(*lo), last = bin_of(*hi);
  r.histogram_min = static_cast<double>(first) * bin_width;
  r.histogram.assign(static_cast<std::size_t>(last - first + 1), 0);
  for (const double m : r.means) ++r.histogram[static_cast<std::size_t>(bin_of(m) - first)];

  const auto bins = static_cast<long>(r.histogram.size());
  std::vector<double> smooth(r.histogram.size(), 0.0);
  for (long b = 0; b < bins; ++b)
    for (long o = -smoothing; o <= smoothing; ++o)
      if (b + o >= 0 && b + o < bins) smooth[static_cast<std::size_t>(b)] += static_cast<double>(r.histogram[static_cast<std::size_t>(b + o)]);

  // Prominence: height above the higher of the two valleys separating the
  // peak from taller ground (or the histogram edge) on either side.
  const auto valley = [&](long b, long dir) {
    const double v = smooth[static_cast<std::size_t>(b)];
    double lowest = v;
    for (long i = b + dir; i >= 0 && i < bins; i += dir) {
      const double w = smooth[static_cast<std::size_t>(i)];
      if (w > v) break;
      lowest = std::min(lowest, w);
    }
    return lowest;
  };
  std::vector<std::pair<double, long>> peaks;
  double tallest = 0.0;
  for (long b = 0; b < bins; ++b) {
    const double v = smooth[static_cast<std::size_t>(b)];
    const double left = b > 0 ? smooth[static_cast<std::size_t>(b - 1)] : -1.0;
    const double right = b + 1 < bins ? smooth[static_cast<std::size_t>(b + 1)] : -1.0;
    tallest = std::max(tallest, v);
    // Plateaus count once, at their left edge.
    if (v > left && v >= right) peaks.emplace_back(v - std::max(valley(b, -1), valley(b, 1)), b);
  }
  std::sort(peaks.begin(), peaks.end(), [&](const auto& a, const auto& b) {
    const double ha = smooth[static_cast<std::size_t>(a.second)], hb = smooth[static_cast<std::size_t>(b.second)];
    return ha > hb || (ha == hb && a.second < b.second);
  });
  for (const auto& [prominence, b] : peaks) {
    if (r.mode_centers.size() == 2) break;
    // The tallest peak is always a mode; later ones need a tenth of its height in prominence.
    if (!r.mode_centers.empty() && prominence < 0.1 * tallest) continue;
    r.mode_centers.push_back(static_cast<double>(first + b) * bin_width);
  }
  return r;
}

ConditioningReport conditioning_report(const GaussianDrift& gd, std::span<const double> t_grid) {
  ConditioningReport r;
  const MuRatio ratio = mu_ratio(gd.c1(), gd.c0());
  r.mu_star = ratio.min;
  r.mu_max = ratio.max;
  for (const auto& p : drift_gradient_envelope(gd, t_grid))
    r.rows.push_back({p.t, p.envelope, gd.grid().mode_index(p.argmax), p.coefficient});
  return r;
}

ModeSpectrum transported_variance(const GaussianDrift& gd, const IntegratorConfig& cfg) {
  std::vector<double> v(gd.c0().variance.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double g = linear_gain([&](double t) { return gd.mode_coefficient(t, i); }, cfg);
    v[i] = std::max(g * g * gd.c0()[i], kVarianceFloor);
  }
  return {gd.grid(), std::move(v)};
}

ModeSpectrum interpolant_variance(const GaussianDrift& gd, double t) {
  std::vector<double> v(gd.c0().variance.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const ScheduleValue s = gd.schedule().at(t, i);
    v[i] = s.alpha * s.alpha * gd.c0()[i] + s.beta * s.beta * gd.c1()[i];
  }
  return {gd.grid(), std::move(v)};
}

}  // namespace sifield
