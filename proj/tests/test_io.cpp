#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fdnreverb/errors.hpp"
#include "fdnreverb/json_io.hpp"
#include "fdnreverb/wav_io.hpp"
#include "support/oracles.hpp"

using namespace fdnreverb;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  TempDir() {
    path = fs::temp_directory_path() /
           ("fdnreverb_io_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
  fs::path path;
};

// Minimal 16-bit PCM writer so the reader is tested against an
// independently constructed layout.
void write_pcm16(const std::string& path, int fs,
                 const std::vector<double>& samples, int channels = 1) {
  std::ofstream f(path, std::ios::binary);
  auto u16 = [&](std::uint16_t v) { f.put(static_cast<char>(v & 0xFF)); f.put(static_cast<char>(v >> 8)); };
  auto u32 = [&](std::uint32_t v) { u16(v & 0xFFFF); u16(static_cast<std::uint16_t>(v >> 16)); };
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(samples.size()) * 2;
  f.write("RIFF", 4);
  u32(36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  u32(16);
  u16(1);
  u16(static_cast<std::uint16_t>(channels));
  u32(static_cast<std::uint32_t>(fs));
  u32(static_cast<std::uint32_t>(fs * 2 * channels));
  u16(static_cast<std::uint16_t>(2 * channels));
  u16(16);
  f.write("data", 4);
  u32(data_bytes);
  for (double s : samples) {
    const int v = static_cast<int>(std::lround(s * 32767.0));
    u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
}

}  // namespace

TEST_CASE("wav round trip through float32") {
  TempDir tmp;
  oracles::Rng rng(3);
  SampledRir rir{48000, {}};
  rir.samples.resize(4096);
  for (double& s : rir.samples) s = rng.uniform(-1.5, 1.5);
  const std::string path = tmp.file("roundtrip.wav");
  write_wav_float32(path, rir);
  const SampledRir back = read_wav_mono(path);
  CHECK(back.sample_rate_hz == 48000);
  REQUIRE(back.samples.size() == rir.samples.size());
  double max_err = 0.0;
  for (std::size_t i = 0; i < rir.samples.size(); ++i)
    max_err = std::max(max_err, std::abs(back.samples[i] - rir.samples[i]));
  // float32 quantization only
  CHECK(max_err <= 1e-6);
}

TEST_CASE("wav reads 16-bit pcm") {
  TempDir tmp;
  const std::string path = tmp.file("pcm.wav");
  write_pcm16(path, 44100, {0.0, 0.5, -0.5, 1.0});
  const SampledRir rir = read_wav_mono(path);
  CHECK(rir.sample_rate_hz == 44100);
  REQUIRE(rir.samples.size() == 4);
  CHECK(rir.samples[1] == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(rir.samples[2] == doctest::Approx(-0.5).epsilon(1e-3));
}

TEST_CASE("wav error paths") {
  TempDir tmp;
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_wav_mono(tmp.file("nope.wav")), FdnError);
    try {
      read_wav_mono(tmp.file("nope.wav"));
    } catch (const FdnError& e) {
      CHECK(e.kind() == ErrorKind::io);
    }
  }
  SUBCASE("multichannel is rejected with guidance") {
    const std::string path = tmp.file("stereo.wav");
    write_pcm16(path, 48000, {0.1, 0.1, 0.2, 0.2}, 2);
    CHECK_THROWS_WITH_AS(read_wav_mono(path), doctest::Contains("pre-mix"),
                         FdnError);
  }
  SUBCASE("zero-energy rejected when required") {
    const std::string path = tmp.file("silent.wav");
    write_pcm16(path, 48000, std::vector<double>(64, 0.0));
    CHECK_NOTHROW(read_wav_mono(path));
    CHECK_THROWS_WITH_AS(read_wav_mono(path, true),
                         doctest::Contains("zero-energy"), FdnError);
  }
  SUBCASE("garbage is rejected") {
    const std::string path = tmp.file("garbage.wav");
    std::ofstream(path) << "not a wav at all";
    CHECK_THROWS_AS(read_wav_mono(path), FdnError);
  }
  SUBCASE("non-finite float samples are rejected") {
    SampledRir rir{48000, {1.0, std::nan(""), 0.0}};
    CHECK_THROWS_AS(write_wav_float32(tmp.file("nan.wav"), rir), FdnError);
  }
}

TEST_CASE("network params json round trip") {
  NetworkParams np;
  np.fdn.sample_rate_hz = 48000;
  np.fdn.alpha = 0.998431;
  np.fdn.betas = {0.01, 0.2, 0.0375};
  np.fdn.kappas = {1, 40, 2400};
  np.early.taps = {{0, 1.0}, {117, -0.25}};
  const Json j = to_json(np);
  CHECK(j["schema_version"] == 1);
  CHECK(j["loops"].size() == 3);
  const NetworkParams back = network_params_from_json(j);
  CHECK(back.fdn.sample_rate_hz == np.fdn.sample_rate_hz);
  CHECK(back.fdn.alpha == np.fdn.alpha);
  CHECK(back.fdn.betas == np.fdn.betas);
  CHECK(back.fdn.kappas == np.fdn.kappas);
  REQUIRE(back.early.taps.size() == 2);
  CHECK(back.early.taps[1].gain == -0.25);
}

TEST_CASE("metrics json uses the contract field names") {
  AcousticMetrics m{-0.00388, 0.9918, 263.96, 4735.0};
  const Json j = to_json(m, 48000);
  CHECK(j.contains("clarity_log10"));
  CHECK(j.contains("definition"));
  CHECK(j.contains("center_time_samples"));
  CHECK(j.contains("t30_samples"));
  CHECK(j.contains("sample_rate_hz"));
  auto [back, fs] = metrics_from_json(j);
  CHECK(fs == 48000);
  CHECK(back.clarity == m.clarity);
  CHECK(back.t30_samples == m.t30_samples);
}

TEST_CASE("early reflections json round trip") {
  EarlyReflections early{{{0, 1.0}, {31, 0.5}, {250, -0.125}}};
  const Json j = to_json(early, 44100);
  auto [back, fs] = early_from_json(j);
  CHECK(fs == 44100);
  REQUIRE(back.taps.size() == 3);
  CHECK(back.taps[2].delay_samples == 250);
  CHECK(back.taps[2].gain == -0.125);
}

TEST_CASE("malformed json raises config errors") {
  TempDir tmp;
  const std::string path = tmp.file("bad.json");
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(load_json_file(path), FdnError);
  CHECK_THROWS_AS(load_json_file(tmp.file("missing.json")), FdnError);

  Json j;
  j["schema_version"] = 1;
  j["alpha"] = 0.9;  // missing everything else
  CHECK_THROWS_WITH_AS(network_params_from_json(j),
                       doctest::Contains("sample_rate_hz"), FdnError);
  j["schema_version"] = 99;
  CHECK_THROWS_AS(network_params_from_json(j), FdnError);
}
