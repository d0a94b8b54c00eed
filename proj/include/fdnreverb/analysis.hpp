// Room-impulse-response analysis: energy windows, psychoacoustic metrics,
// Schroeder decay curve, early-reflection extraction.
#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fdnreverb/types.hpp"

namespace fdnreverb {

/// Sum of squared samples over the half-open window [from, to).
/// Bounds must satisfy 0 <= from <= to <= length.
double compute_energy_window(const SampledRir& rir, std::int64_t from_sample,
                             std::int64_t to_sample);

/// Backward-integrated energy decay curve in dB relative to total energy:
/// EDC[n] = 10*log10(sum_{m>=n} f[m]^2 / total). Starts at 0 dB and is
/// non-increasing. Values are capped at floor_db; a capped value stands
/// for "fully decayed" (the uncapped value is -inf).
std::vector<double> schroeder_edc(const SampledRir& rir,
                                  double floor_db = -120.0);

/// First crossing time of level_db on an EDC, in samples, with linear
/// interpolation between the bracketing samples. Samples at or below
/// floor_db are treated as fully decayed, so a crossing into the floor
/// collapses onto the preceding sample. Throws not-measurable if the
/// curve never reaches level_db.
double measure_t30(std::span<const double> edc, double level_db = -30.0,
                   double floor_db = -120.0);

/// All four metrics of an RIR. Throws degenerate-input on zero energy and
/// propagates not-measurable from the T30 estimate.
AcousticMetrics compute_metrics(const SampledRir& rir,
                                const MetricConfig& cfg = {});

/// Splits an RIR into the k largest-|amplitude| local peaks inside the
/// first window_ms and the residual tail (the input with those sample
/// positions zeroed). The split is exact: re-inserting the taps into the
/// residual reproduces the input bit for bit. Returns fewer than k taps
/// when the window holds fewer peaks.
std::pair<EarlyReflections, SampledRir> extract_early_reflections(
    const SampledRir& rir, int k = 43, double window_ms = 50.0);

/// Energy/moment constants of a known early-reflection tap list, used as
/// additive constants inside the fit residuals.
EarlyConstants early_constants(const EarlyReflections& early,
                               int sample_rate_hz,
                               const MetricConfig& cfg = {});

}  // namespace fdnreverb
