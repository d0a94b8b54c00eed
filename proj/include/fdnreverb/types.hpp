// Domain types shared across analysis, model fitting and rendering.
#pragma once

#include <cstdint>
#include <vector>

namespace fdnreverb {

/// Mono, uniformly sampled impulse response. All time quantities in this
/// toolkit are stored in samples; millisecond boundaries are converted at
/// the edges using sample_rate_hz.
struct SampledRir {
  int sample_rate_hz = 0;
  std::vector<double> samples;
};

/// Throws FdnError if the invariants are broken: positive sample rate,
/// at least one sample, every sample finite.
void validate(const SampledRir& rir);

/// One tap of the delayed-sum early-reflection network.
struct Tap {
  int delay_samples = 0;
  double gain = 0.0;
};

/// Sparse tap list (gain, delay) for the early reflections. Delays are
/// strictly increasing; the direct path is the tap with the largest
/// absolute gain.
struct EarlyReflections {
  std::vector<Tap> taps;
};

void validate(const EarlyReflections& early);

/// The four psychoacoustic quantities, either measured or used as targets.
///  clarity              log10 of early(50ms)/total energy, <= 0
///  definition           early(80ms)/total energy, in [0,1]
///  center_time_samples  energy-weighted mean arrival time
///  t30_samples          time to decay by 30 dB on the energy decay curve
struct AcousticMetrics {
  double clarity = 0.0;
  double definition = 0.0;
  double center_time_samples = 0.0;
  double t30_samples = 0.0;
};

/// Analysis configuration. Window boundaries are in milliseconds and get
/// floored to samples; the EDC floor caps log-of-zero tails.
struct MetricConfig {
  double early_window_ms = 50.0;
  double definition_window_ms = 80.0;
  double edc_floor_db = -120.0;
  double t30_level_db = -30.0;
};

/// Window boundaries converted to samples (half-open, floor of ms*fs/1000).
struct WindowSamples {
  std::int64_t n50 = 0;  // early/clarity window
  std::int64_t n80 = 0;  // definition window
};

WindowSamples windows_in_samples(const MetricConfig& cfg, int sample_rate_hz);

/// Precomputed energy/moment constants of the early reflections, used in
/// the constraint residuals. e50 <= e80 <= etot; i0 is the direct-path
/// amplitude (largest |gain|).
struct EarlyConstants {
  double e50 = 0.0;
  double e80 = 0.0;
  double etot = 0.0;
  double moment = 0.0;
  double i0 = 0.0;
};

/// Metric targets for the fit, plus the tail decay target: the fitted tail
/// amplitude at t30 should equal decay_target_amplitude * i0.
struct TargetMetrics {
  double clarity = 0.0;
  double definition = 0.0;
  double center_time_samples = 0.0;
  double t30_samples = 0.0;
  double decay_target_amplitude = 1e-3;
};

TargetMetrics make_targets(const AcousticMetrics& m,
                           double decay_target_amplitude = 1e-3);

/// Parameters of the reverberant-tail network: a sum of feedback loops
/// sharing a per-sample decay factor alpha, each with gain beta and input
/// delay kappa (samples). kappas are strictly increasing and non-negative.
struct FdnParams {
  int sample_rate_hz = 0;
  double alpha = 0.0;
  std::vector<double> betas;
  std::vector<int> kappas;
};

void validate(const FdnParams& p);

/// Full network description as serialized to params.json: the tail loops
/// plus the early-reflection taps.
struct NetworkParams {
  FdnParams fdn;
  EarlyReflections early;
};

}  // namespace fdnreverb
