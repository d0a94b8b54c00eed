// Reference convolvers for benchmarking against the streaming network:
// exact direct convolution (OpenMP kernel plus the serial reference it is
// tested against) and a uniform-partitioned overlap-save FFT convolver.
#pragma once

#include <span>
#include <vector>

namespace fdnreverb {

/// Exact linear convolution, output length = len(input) + len(rir) - 1.
/// Parallelized over output samples; each output sample is accumulated in
/// a fixed serial order, so the result is bit-identical to
/// convolve_direct_serial regardless of thread count.
std::vector<double> convolve_direct(std::span<const double> rir,
                                    std::span<const double> input);

/// Single-threaded reference implementation of the same kernel.
std::vector<double> convolve_direct_serial(std::span<const double> rir,
                                           std::span<const double> input);

struct PartitionedResult {
  /// Emitted stream: window_w zeros (the inherent block latency), then
  /// the full linear convolution. Length = window_w + len(input) +
  /// len(rir) - 1.
  std::vector<double> output;
  int latency_samples = 0;
};

/// Uniform-partitioned overlap-save convolution with FFT blocks of
/// window_w samples (power of two). Matches convolve_direct after the
/// reported latency shift.
PartitionedResult convolve_partitioned(std::span<const double> rir,
                                       std::span<const double> input,
                                       int window_w);

}  // namespace fdnreverb
