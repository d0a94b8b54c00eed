#include "fdnreverb/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fdnreverb/errors.hpp"

namespace fdnreverb {

namespace {

// Compensated (Kahan) accumulator. The window-additivity contract asks for
// 1e-12 relative agreement between split and whole windows, which plain
// accumulation over ~1e5 samples does not reliably deliver.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    double y = x - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

double compute_energy_window(const SampledRir& rir, std::int64_t from_sample,
                             std::int64_t to_sample) {
  validate(rir);
  const auto n = static_cast<std::int64_t>(rir.samples.size());
  if (from_sample < 0 || from_sample > to_sample || to_sample > n)
    throw_error(ErrorKind::range,
                "energy window [" + std::to_string(from_sample) + ", " +
                    std::to_string(to_sample) + ") out of range for length " +
                    std::to_string(n));
  KahanSum e;
  for (std::int64_t i = from_sample; i < to_sample; ++i)
    e.add(rir.samples[i] * rir.samples[i]);
  return e.sum;
}

std::vector<double> schroeder_edc(const SampledRir& rir, double floor_db) {
  validate(rir);
  const std::size_t n = rir.samples.size();
  // Backward running sum of squares. Adding non-negative terms keeps the
  // suffix sums monotone, so the curve is non-increasing by construction.
  std::vector<double> suffix(n);
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    acc += rir.samples[i] * rir.samples[i];
    suffix[i] = acc;
  }
  const double total = suffix[0];
  if (total <= 0.0)
    throw_error(ErrorKind::degenerate_input,
                "zero-energy input: decay curve undefined");
  std::vector<double> edc(n);
  for (std::size_t i = 0; i < n; ++i) {
    edc[i] = suffix[i] > 0.0
                 ? std::max(floor_db, 10.0 * std::log10(suffix[i] / total))
                 : floor_db;
  }
  return edc;
}

double measure_t30(std::span<const double> edc, double level_db,
                   double floor_db) {
  if (edc.empty())
    throw_error(ErrorKind::range, "empty decay curve");
  if (level_db >= 0.0)
    throw_error(ErrorKind::config, "decay level must be negative");
  constexpr double kFloorEps = 1e-9;
  for (std::size_t i = 0; i < edc.size(); ++i) {
    if (edc[i] > level_db) continue;
    if (i == 0) return 0.0;
    const double lo = edc[i - 1];
    const double hi = edc[i];
    // A floor-capped sample stands for -inf dB: the decay completed within
    // the step, so the crossing collapses onto the previous sample.
    if (hi <= floor_db + kFloorEps) return static_cast<double>(i - 1);
    return static_cast<double>(i - 1) + (level_db - lo) / (hi - lo);
  }
  throw_error(ErrorKind::not_measurable,
              "decay never reaches " + std::to_string(level_db) +
                  " dB; pad the input or lower the level");
}

AcousticMetrics compute_metrics(const SampledRir& rir,
                                const MetricConfig& cfg) {
  validate(rir);
  const auto n = static_cast<std::int64_t>(rir.samples.size());
  const WindowSamples win = windows_in_samples(cfg, rir.sample_rate_hz);
  const std::int64_t n50 = std::min(win.n50, n);
  const std::int64_t n80 = std::min(win.n80, n);

  // One pass accumulating through the window boundaries keeps the partial
  // energies exactly monotone (e50 <= e80 <= total).
  KahanSum energy;
  KahanSum moment;
  double e50 = 0.0;
  double e80 = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (i == n50) e50 = energy.sum;
    if (i == n80) e80 = energy.sum;
    const double sq = rir.samples[i] * rir.samples[i];
    energy.add(sq);
    moment.add(static_cast<double>(i) * sq);
  }
  if (n50 == n) e50 = energy.sum;
  if (n80 == n) e80 = energy.sum;
  const double total = energy.sum;
  if (total <= 0.0)
    throw_error(ErrorKind::degenerate_input,
                "zero-energy input: metrics undefined");

  AcousticMetrics m;
  // An empty early window would push clarity to -inf; floor the ratio the
  // same way the EDC floors its log.
  const double ratio_floor = std::pow(10.0, cfg.edc_floor_db / 10.0);
  m.clarity = std::log10(std::max(e50 / total, ratio_floor));
  m.definition = e80 / total;
  m.center_time_samples = moment.sum / total;
  const std::vector<double> edc = schroeder_edc(rir, cfg.edc_floor_db);
  m.t30_samples = measure_t30(edc, cfg.t30_level_db, cfg.edc_floor_db);
  return m;
}

std::pair<EarlyReflections, SampledRir> extract_early_reflections(
    const SampledRir& rir, int k, double window_ms) {
  validate(rir);
  if (k < 1)
    throw_error(ErrorKind::range, "tap count k must be >= 1");
  const auto n = static_cast<std::int64_t>(rir.samples.size());
  MetricConfig wcfg;
  wcfg.early_window_ms = window_ms;
  const std::int64_t win = windows_in_samples(wcfg, rir.sample_rate_hz).n50;
  if (win < 1)
    throw_error(ErrorKind::range, "empty early-reflection window");
  if (win > n)
    throw_error(ErrorKind::range,
                "early window (" + std::to_string(win) +
                    " samples) exceeds signal length " + std::to_string(n));

  // Candidate peaks: nonzero samples at least as large in magnitude as
  // both neighbours (only the existing neighbour at the signal edges).
  std::vector<std::int64_t> peaks;
  for (std::int64_t i = 0; i < win; ++i) {
    const double a = std::abs(rir.samples[i]);
    if (a == 0.0) continue;
    if (i > 0 && a < std::abs(rir.samples[i - 1])) continue;
    if (i + 1 < n && a < std::abs(rir.samples[i + 1])) continue;
    peaks.push_back(i);
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [&](std::int64_t a, std::int64_t b) {
                     const double ma = std::abs(rir.samples[a]);
                     const double mb = std::abs(rir.samples[b]);
                     if (ma != mb) return ma > mb;
                     return a < b;
                   });
  if (peaks.size() > static_cast<std::size_t>(k)) peaks.resize(k);
  std::sort(peaks.begin(), peaks.end());

  EarlyReflections early;
  SampledRir residual = rir;
  early.taps.reserve(peaks.size());
  for (std::int64_t i : peaks) {
    early.taps.push_back({static_cast<int>(i), rir.samples[i]});
    residual.samples[i] = 0.0;
  }
  return {std::move(early), std::move(residual)};
}

EarlyConstants early_constants(const EarlyReflections& early,
                               int sample_rate_hz, const MetricConfig& cfg) {
  validate(early);
  if (early.taps.empty())
    throw_error(ErrorKind::config, "early reflections are empty");
  const WindowSamples win = windows_in_samples(cfg, sample_rate_hz);
  EarlyConstants ec;
  for (const Tap& t : early.taps) {
    const double sq = t.gain * t.gain;
    if (t.delay_samples < win.n50) ec.e50 += sq;
    if (t.delay_samples < win.n80) ec.e80 += sq;
    ec.etot += sq;
    ec.moment += static_cast<double>(t.delay_samples) * sq;
    ec.i0 = std::max(ec.i0, std::abs(t.gain));
  }
  if (!(ec.i0 > 0.0))
    throw_error(ErrorKind::degenerate_input,
                "early reflections carry no energy (direct path missing)");
  return ec;
}

}  // namespace fdnreverb
