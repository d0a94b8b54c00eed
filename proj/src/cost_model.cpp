#include "fdnreverb/cost_model.hpp"

#include <cmath>
#include <string>

#include "fdnreverb/errors.hpp"

namespace fdnreverb {

namespace {

bool is_power_of_two(int x) { return x > 0 && (x & (x - 1)) == 0; }

}  // namespace

long long network_flops_per_sample(int n_taps, int n_loops) {
  long long flops = 0;
  if (n_taps > 0) flops += 2LL * n_taps - 1;    // tap multiplies + sum
  if (n_loops > 0) flops += 4LL * n_loops - 1;  // loop recurrences + sum
  if (n_taps > 0 && n_loops > 0) flops += 1;    // early + tail
  return flops;
}

double flops_per_sample(const CostModel& model, RenderMethod method) {
  if (model.n_taps <= 0 || model.n_loops <= 0 || model.rir_length_n <= 0)
    throw_error(ErrorKind::config, "cost model sizes must be positive");
  if (!is_power_of_two(model.fft_window_w))
    throw_error(ErrorKind::config, "FFT window must be a power of two, got " +
                                       std::to_string(model.fft_window_w));
  switch (method) {
    case RenderMethod::fdn:
      return static_cast<double>(
          network_flops_per_sample(model.n_taps, model.n_loops));
    case RenderMethod::direct_conv:
      return 2.0 * static_cast<double>(model.rir_length_n);
    case RenderMethod::partitioned_fft: {
      const double n = static_cast<double>(model.rir_length_n);
      const double w = static_cast<double>(model.fft_window_w);
      return (n / w) * (4.0 * std::log2(w) + 1.0);
    }
  }
  throw_error(ErrorKind::config, "unknown render method");
}

}  // namespace fdnreverb
