#include "fdnreverb/types.hpp"

#include <cmath>
#include <string>

#include "fdnreverb/errors.hpp"

namespace fdnreverb {

void validate(const SampledRir& rir) {
  if (rir.sample_rate_hz <= 0)
    throw_error(ErrorKind::config, "sample rate must be positive, got " +
                                       std::to_string(rir.sample_rate_hz));
  if (rir.samples.empty())
    throw_error(ErrorKind::degenerate_input, "impulse response is empty");
  for (std::size_t i = 0; i < rir.samples.size(); ++i) {
    if (!std::isfinite(rir.samples[i]))
      throw_error(ErrorKind::degenerate_input,
                  "non-finite sample at index " + std::to_string(i));
  }
}

void validate(const EarlyReflections& early) {
  for (std::size_t i = 0; i < early.taps.size(); ++i) {
    const Tap& t = early.taps[i];
    if (t.delay_samples < 0)
      throw_error(ErrorKind::config, "tap delay must be non-negative");
    if (!std::isfinite(t.gain))
      throw_error(ErrorKind::config, "tap gain must be finite");
    if (i > 0 && early.taps[i - 1].delay_samples >= t.delay_samples)
      throw_error(ErrorKind::config,
                  "tap delays must be strictly increasing (duplicate or "
                  "unsorted delay at index " +
                      std::to_string(i) + ")");
  }
}

WindowSamples windows_in_samples(const MetricConfig& cfg, int sample_rate_hz) {
  if (sample_rate_hz <= 0)
    throw_error(ErrorKind::config, "sample rate must be positive");
  if (cfg.early_window_ms < 0 || cfg.definition_window_ms < 0)
    throw_error(ErrorKind::config, "metric windows must be non-negative");
  // The tiny epsilon keeps exact millisecond boundaries (50 ms at 48 kHz
  // = 2400) from landing one sample short through rounding.
  auto to_samples = [sample_rate_hz](double ms) {
    return static_cast<std::int64_t>(
        std::floor(ms * static_cast<double>(sample_rate_hz) / 1000.0 + 1e-9));
  };
  WindowSamples w;
  w.n50 = to_samples(cfg.early_window_ms);
  w.n80 = to_samples(cfg.definition_window_ms);
  return w;
}

TargetMetrics make_targets(const AcousticMetrics& m,
                           double decay_target_amplitude) {
  TargetMetrics t;
  t.clarity = m.clarity;
  t.definition = m.definition;
  t.center_time_samples = m.center_time_samples;
  t.t30_samples = m.t30_samples;
  t.decay_target_amplitude = decay_target_amplitude;
  return t;
}

void validate(const FdnParams& p) {
  if (p.sample_rate_hz <= 0)
    throw_error(ErrorKind::config, "sample rate must be positive");
  if (!(p.alpha > 0.0 && p.alpha < 1.0))
    throw_error(ErrorKind::config,
                "alpha must lie strictly inside (0,1), got " +
                    std::to_string(p.alpha));
  if (p.betas.size() != p.kappas.size())
    throw_error(ErrorKind::config, "betas and kappas must have equal length");
  for (std::size_t i = 0; i < p.betas.size(); ++i) {
    if (!(std::isfinite(p.betas[i]) && p.betas[i] >= 0.0))
      throw_error(ErrorKind::config, "loop gains must be finite and >= 0");
    if (p.kappas[i] < 0)
      throw_error(ErrorKind::config, "loop delays must be non-negative");
    if (i > 0 && p.kappas[i - 1] >= p.kappas[i])
      throw_error(ErrorKind::config,
                  "loop delays must be strictly increasing");
  }
}

}  // namespace fdnreverb
