// Analytic per-sample FLOP costs of the rendering methods. Multiplications
// and additions each count as one FLOP; delay-line reads are free.
#pragma once

namespace fdnreverb {

struct CostModel {
  int n_taps = 43;
  int n_loops = 16;
  int rir_length_n = 4735;
  int fft_window_w = 512;
};

enum class RenderMethod { fdn, direct_conv, partitioned_fft };

/// fdn:             (2*taps - 1) + (4*loops - 1) + 1 inter-branch add
/// direct_conv:     2*N
/// partitioned_fft: (N/W) * (4*log2(W) + 1)
double flops_per_sample(const CostModel& model, RenderMethod method);

/// Per-sample cost of a tap/loop configuration, handling empty branches.
/// Matches exactly what the streaming renderer counts.
long long network_flops_per_sample(int n_taps, int n_loops);

}  // namespace fdnreverb
