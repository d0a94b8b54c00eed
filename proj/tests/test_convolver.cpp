#include <doctest.h>

#include <cmath>
#include <vector>

#include "fdnreverb/convolver.hpp"
#include "fdnreverb/errors.hpp"
#include "fdnreverb/fdn_model.hpp"
#include "fdnreverb/renderer.hpp"
#include "support/oracles.hpp"

using namespace fdnreverb;

namespace {

std::vector<double> noise(oracles::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("direct convolution identities") {
  const std::vector<double> x{1.0, 2.0, 3.0};
  CHECK(convolve_direct({{1.0}}, x) == x);
  CHECK(convolve_direct({{0.0, 1.0}}, x) ==
        std::vector<double>{0.0, 1.0, 2.0, 3.0});
  CHECK_THROWS_AS(convolve_direct({}, x), FdnError);
}

TEST_CASE("parallel direct convolution is bit-identical to the serial kernel") {
  oracles::Rng rng(13);
  for (std::size_t nr : {1u, 17u, 256u}) {
    for (std::size_t ni : {1u, 64u, 1000u}) {
      const auto rir = noise(rng, nr);
      const auto input = noise(rng, ni);
      CHECK(convolve_direct(rir, input) == convolve_direct_serial(rir, input));
    }
  }
}

TEST_CASE("streaming network equals convolution with its impulse response") {
  oracles::Rng rng(19);
  NetworkParams np;
  np.fdn.sample_rate_hz = 48000;
  np.fdn.alpha = 0.9985;
  np.fdn.kappas = log_spaced_delays(16, 48000);
  np.fdn.betas.assign(16, 0.0);
  for (double& b : np.fdn.betas) b = rng.uniform(0.01, 0.15);
  np.early.taps = {{0, 1.0}, {120, -0.4}, {900, 0.3}, {2200, 0.2}};

  // Truncation bound: the tail beyond L contributes at most
  // J(L)/(1-alpha) per output sample for |x| <= 1.
  const std::int64_t ir_len = 16384;
  const SampledRir ir = impulse_response(np, ir_len);
  const double trunc = analytic_tail(np.fdn, ir_len) / (1.0 - np.fdn.alpha);
  REQUIRE(trunc < 1e-7);

  const auto input = noise(rng, 48000);
  NetworkState state(np);
  const auto streamed = state.process_block(input);
  const auto reference = convolve_direct(ir.samples, input);
  double m = 0.0;
  for (std::size_t i = 0; i < streamed.size(); ++i)
    m = std::max(m, std::abs(streamed[i] - reference[i]));
  CHECK(m <= 1e-5);
}

TEST_CASE("partitioned convolution") {
  oracles::Rng rng(23);
  SUBCASE("identity response is a pure latency") {
    const auto input = noise(rng, 300);
    const auto res = convolve_partitioned({{1.0}}, input, 64);
    CHECK(res.latency_samples == 64);
    for (std::size_t i = 0; i < input.size(); ++i)
      CHECK(res.output[64 + i] == doctest::Approx(input[i]).epsilon(1e-12));
    for (int i = 0; i < 64; ++i) CHECK(res.output[i] == 0.0);
  }
  SUBCASE("impulse input recovers the impulse response") {
    const auto rir = noise(rng, 1000);
    std::vector<double> impulse(1, 1.0);
    const auto res = convolve_partitioned(rir, impulse, 128);
    double m = 0.0;
    for (std::size_t i = 0; i < rir.size(); ++i)
      m = std::max(m, std::abs(res.output[128 + i] - rir[i]));
    CHECK(m <= 1e-6);
  }
  SUBCASE("matches direct convolution after the latency shift") {
    for (int w : {64, 512}) {
      for (std::size_t nr : {37u, 1000u, 4735u}) {
        const auto rir = noise(rng, nr);
        const auto input = noise(rng, 6000);
        const auto res = convolve_partitioned(rir, input, w);
        const auto direct = convolve_direct(rir, input);
        CHECK(res.latency_samples == w);
        REQUIRE(res.output.size() ==
                direct.size() + static_cast<std::size_t>(w));
        double m = 0.0;
        for (std::size_t i = 0; i < direct.size(); ++i)
          m = std::max(m,
                       std::abs(res.output[static_cast<std::size_t>(w) + i] -
                                direct[i]));
        CHECK(m <= 1e-6);
      }
    }
  }
  SUBCASE("window validation") {
    const auto rir = noise(rng, 64);
    const auto input = noise(rng, 64);
    CHECK_THROWS_AS(convolve_partitioned(rir, input, 300), FdnError);
    CHECK_THROWS_AS(convolve_partitioned(rir, input, 1 << 23), FdnError);
  }
}

TEST_CASE("round trip through direct and partitioned agree on a synthetic rir") {
  oracles::Rng rng(29);
  // Exponentially decaying noise, the shape these convolvers exist for.
  std::vector<double> rir(4735);
  for (std::size_t i = 0; i < rir.size(); ++i)
    rir[i] = rng.uniform(-1.0, 1.0) * std::pow(0.9993, static_cast<double>(i));
  const auto input = noise(rng, 20000);
  const auto direct = convolve_direct(rir, input);
  const auto part = convolve_partitioned(rir, input, 512);
  double m = 0.0;
  for (std::size_t i = 0; i < direct.size(); ++i)
    m = std::max(m, std::abs(part.output[512 + i] - direct[i]));
  CHECK(m <= 1e-6);
  CHECK(max_abs_diff(direct, convolve_direct_serial(rir, input)) == 0.0);
}
