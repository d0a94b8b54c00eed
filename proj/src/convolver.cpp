#include "fdnreverb/convolver.hpp"

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstring>
#include <string>

#include "fdnreverb/errors.hpp"

namespace fdnreverb {

namespace {

inline double convolve_at(std::span<const double> rir,
                          std::span<const double> input, std::int64_t n) {
  const auto nr = static_cast<std::int64_t>(rir.size());
  const auto ni = static_cast<std::int64_t>(input.size());
  const std::int64_t k_lo = std::max<std::int64_t>(0, n - ni + 1);
  const std::int64_t k_hi = std::min<std::int64_t>(nr - 1, n);
  double acc = 0.0;
  for (std::int64_t k = k_lo; k <= k_hi; ++k) acc += rir[k] * input[n - k];
  return acc;
}

void check_nonempty(std::span<const double> rir,
                    std::span<const double> input) {
  if (rir.empty()) throw_error(ErrorKind::range, "empty impulse response");
  if (input.empty()) throw_error(ErrorKind::range, "empty input signal");
}

}  // namespace

std::vector<double> convolve_direct(std::span<const double> rir,
                                    std::span<const double> input) {
  check_nonempty(rir, input);
  const auto out_len =
      static_cast<std::int64_t>(rir.size() + input.size() - 1);
  std::vector<double> out(static_cast<std::size_t>(out_len));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t n = 0; n < out_len; ++n)
    out[static_cast<std::size_t>(n)] = convolve_at(rir, input, n);
  return out;
}

std::vector<double> convolve_direct_serial(std::span<const double> rir,
                                           std::span<const double> input) {
  check_nonempty(rir, input);
  const auto out_len =
      static_cast<std::int64_t>(rir.size() + input.size() - 1);
  std::vector<double> out(static_cast<std::size_t>(out_len));
  for (std::int64_t n = 0; n < out_len; ++n)
    out[static_cast<std::size_t>(n)] = convolve_at(rir, input, n);
  return out;
}

namespace {

// RAII wrappers around the FFTW C API.
struct FftwBuffer {
  explicit FftwBuffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {
    if (ptr == nullptr) throw std::bad_alloc();
    std::memset(ptr, 0, bytes);
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  void* ptr;
};

struct FftwPlan {
  explicit FftwPlan(fftw_plan p) : plan(p) {}
  ~FftwPlan() { fftw_destroy_plan(plan); }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
  fftw_plan plan;
};

}  // namespace

PartitionedResult convolve_partitioned(std::span<const double> rir,
                                       std::span<const double> input,
                                       int window_w) {
  check_nonempty(rir, input);
  if (window_w < 2 || (window_w & (window_w - 1)) != 0)
    throw_error(ErrorKind::config,
                "FFT window must be a power of two >= 2, got " +
                    std::to_string(window_w));
  if (window_w > (1 << 22))
    throw_error(ErrorKind::config,
                "FFT window exceeds the practical transform limit");

  const std::size_t w = static_cast<std::size_t>(window_w);
  const std::size_t fft_len = 2 * w;
  const std::size_t bins = w + 1;  // real FFT of length 2W
  const std::size_t n_parts = (rir.size() + w - 1) / w;

  FftwBuffer time_buf(sizeof(double) * fft_len);
  FftwBuffer freq_buf(sizeof(fftw_complex) * bins);
  auto* time = static_cast<double*>(time_buf.ptr);
  auto* freq = static_cast<fftw_complex*>(freq_buf.ptr);
  FftwPlan fwd(fftw_plan_dft_r2c_1d(static_cast<int>(fft_len), time, freq,
                                    FFTW_ESTIMATE));
  FftwPlan inv(fftw_plan_dft_c2r_1d(static_cast<int>(fft_len), freq, time,
                                    FFTW_ESTIMATE));

  using Cplx = std::complex<double>;
  // Partition spectra: each W-sample slice of the RIR, zero-padded to 2W.
  std::vector<std::vector<Cplx>> h_spectra(n_parts,
                                           std::vector<Cplx>(bins));
  for (std::size_t p = 0; p < n_parts; ++p) {
    std::memset(time, 0, sizeof(double) * fft_len);
    const std::size_t base = p * w;
    const std::size_t count = std::min(w, rir.size() - base);
    std::memcpy(time, rir.data() + base, sizeof(double) * count);
    fftw_execute(fwd.plan);
    std::memcpy(h_spectra[p].data(), freq, sizeof(Cplx) * bins);
  }

  const std::size_t conv_len = input.size() + rir.size() - 1;
  const std::size_t n_blocks = (conv_len + w - 1) / w;
  // Frequency-domain delay line of the most recent input-block spectra.
  std::vector<std::vector<Cplx>> fdl(n_parts, std::vector<Cplx>(bins));
  std::vector<Cplx> acc(bins);

  PartitionedResult result;
  result.latency_samples = window_w;
  result.output.assign(w + conv_len, 0.0);

  std::vector<double> in_window(fft_len, 0.0);  // sliding [prev W | cur W]
  for (std::size_t b = 0; b < n_blocks; ++b) {
    std::memmove(in_window.data(), in_window.data() + w, sizeof(double) * w);
    for (std::size_t i = 0; i < w; ++i) {
      const std::size_t t = b * w + i;
      in_window[w + i] = t < input.size() ? input[t] : 0.0;
    }
    std::memcpy(time, in_window.data(), sizeof(double) * fft_len);
    fftw_execute(fwd.plan);
    std::memcpy(fdl[b % n_parts].data(), freq, sizeof(Cplx) * bins);

    const std::size_t active = std::min(b + 1, n_parts);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (active * bins > 1u << 15)
#endif
    for (std::size_t k = 0; k < bins; ++k) {
      Cplx sum{0.0, 0.0};
      for (std::size_t p = 0; p < active; ++p)
        sum += h_spectra[p][k] * fdl[(b - p) % n_parts][k];
      acc[k] = sum;
    }
    std::memcpy(freq, acc.data(), sizeof(Cplx) * bins);
    fftw_execute(inv.plan);

    // Discard the first W samples (cyclic wraparound); the rest are the
    // linear convolution for times [bW, bW+W), emitted W samples late.
    const double norm = 1.0 / static_cast<double>(fft_len);
    for (std::size_t i = 0; i < w; ++i) {
      const std::size_t t = b * w + i;
      if (t >= conv_len) break;
      result.output[w + t] = time[w + i] * norm;
    }
  }
  return result;
}

}  // namespace fdnreverb
