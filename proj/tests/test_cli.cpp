// End-to-end tests driving the installed CLI binary through the full
// analyze -> fit -> synth -> render -> bench pipeline, including error
// paths and byte-level determinism of the emitted files.
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fdnreverb/analysis.hpp"
#include "fdnreverb/json_io.hpp"
#include "fdnreverb/wav_io.hpp"
#include "support/oracles.hpp"

using namespace fdnreverb;
namespace fs = std::filesystem;

namespace {

struct CliFixture {
  fs::path dir;

  CliFixture() {
    dir = fs::temp_directory_path() /
          ("fdnreverb_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~CliFixture() { fs::remove_all(dir); }

  std::string path(const std::string& name) const {
    return (dir / name).string();
  }

  int run(const std::string& args, std::string* output = nullptr) const {
    const std::string out_file = path("cmd_output.txt");
    const std::string cmd = std::string(FDNREVERB_CLI_PATH) + " " + args +
                            " >" + out_file + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output != nullptr) {
      std::ifstream f(out_file);
      std::stringstream ss;
      ss << f.rdbuf();
      *output = ss.str();
    }
    return WEXITSTATUS(status);
  }
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Classroom-like synthetic RIR: a dominant direct path, sparse early
// taps, and a quiet exponentially decaying noise tail.
SampledRir synthetic_rir(std::uint64_t seed) {
  oracles::Rng rng(seed);
  SampledRir rir{48000, std::vector<double>(48000, 0.0)};
  for (std::size_t i = 100; i < rir.samples.size(); ++i)
    rir.samples[i] = 0.006 * rng.normal() *
                     std::pow(0.99982, static_cast<double>(i));
  rir.samples[0] = 1.0;
  int delay = 0;
  for (int i = 0; i < 42; ++i) {
    delay += static_cast<int>(rng.uniform_int(13, 55));
    const double sign = rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    rir.samples[static_cast<std::size_t>(delay)] =
        sign * rng.uniform(0.08, 0.4);
  }
  return rir;
}

}  // namespace

TEST_CASE("cli pipeline") {
  CliFixture cli;
  const std::string rir_path = cli.path("room.wav");
  write_wav_float32(rir_path, synthetic_rir(1234));

  SUBCASE("analyze emits metrics, taps and tail") {
    std::string out;
    const int rc = cli.run("analyze " + rir_path + " --out-metrics " +
                               cli.path("metrics.json") + " --out-early " +
                               cli.path("early.json") + " --out-tail " +
                               cli.path("tail.wav"),
                           &out);
    CHECK(rc == 0);
    const Json metrics = load_json_file(cli.path("metrics.json"));
    CHECK(metrics["sample_rate_hz"] == 48000);
    CHECK(metrics["definition"].get<double>() > 0.9);
    auto [early, fs] = early_from_json(load_json_file(cli.path("early.json")));
    CHECK(fs == 48000);
    CHECK(early.taps.size() == 43);
    const SampledRir tail = read_wav_mono(cli.path("tail.wav"));
    CHECK(tail.samples.size() == 48000);
    // The extracted taps are zeroed in the tail.
    for (const Tap& t : early.taps)
      CHECK(tail.samples[static_cast<std::size_t>(t.delay_samples)] == 0.0);
    CHECK(out.find("measured metrics") != std::string::npos);
  }

  SUBCASE("full pipeline closes on the target metrics") {
    REQUIRE(cli.run("analyze " + rir_path + " --out-metrics " +
                    cli.path("metrics.json") + " --out-early " +
                    cli.path("early.json") + " --out-tail " +
                    cli.path("tail.wav")) == 0);
    REQUIRE(cli.run("fit --metrics " + cli.path("metrics.json") + " --early " +
                    cli.path("early.json") + " --seed 7 --out-params " +
                    cli.path("params.json") + " --out-report " +
                    cli.path("report.json") + " --trace " +
                    cli.path("trace.csv")) == 0);
    REQUIRE(cli.run("synth " + cli.path("params.json") +
                    " --length 48000 --out " + cli.path("synth.wav")) == 0);
    REQUIRE(cli.run("analyze " + cli.path("synth.wav") + " --out-metrics " +
                    cli.path("synth_metrics.json") + " --out-early " +
                    cli.path("synth_early.json") + " --out-tail " +
                    cli.path("synth_tail.wav")) == 0);

    auto [target, fs1] =
        metrics_from_json(load_json_file(cli.path("metrics.json")));
    auto [achieved, fs2] =
        metrics_from_json(load_json_file(cli.path("synth_metrics.json")));
    CHECK(fs1 == fs2);
    CHECK(std::abs(achieved.clarity - target.clarity) <= 1e-3);
    CHECK(std::abs(achieved.definition - target.definition) <= 1e-3);
    CHECK(std::abs(achieved.center_time_samples - target.center_time_samples) /
              target.center_time_samples <=
          2e-3);
    CHECK(std::abs(achieved.t30_samples - target.t30_samples) /
              target.t30_samples <=
          0.11);

    // The synthesized response preserves the extracted early taps.
    auto [target_early, efs1] =
        early_from_json(load_json_file(cli.path("early.json")));
    const SampledRir synth = read_wav_mono(cli.path("synth.wav"));
    for (const Tap& t : target_early.taps)
      CHECK(std::abs(synth.samples[static_cast<std::size_t>(t.delay_samples)] -
                     t.gain) <= 0.02);

    // Trace exists and its loss column is monotone non-increasing.
    std::ifstream trace(cli.path("trace.csv"));
    std::string header;
    std::getline(trace, header);
    CHECK(header == "iteration,loss,l1,l2,l3,l4");
    double prev = std::numeric_limits<double>::infinity();
    std::string line;
    int rows = 0;
    while (std::getline(trace, line)) {
      const auto comma = line.find(',');
      const double loss = std::stod(line.substr(comma + 1));
      CHECK(loss <= prev);
      prev = loss;
      ++rows;
    }
    CHECK(rows >= 2);
  }

  SUBCASE("render applies the reverb with matching rates") {
    REQUIRE(cli.run("fit --rir " + rir_path + " --seed 3 --restarts 2 " +
                    " --out-params " + cli.path("params.json") +
                    " --out-report " + cli.path("report.json")) == 0);
    // A short dry click train.
    SampledRir dry{48000, std::vector<double>(4800, 0.0)};
    dry.samples[0] = 1.0;
    dry.samples[2400] = 0.5;
    write_wav_float32(cli.path("dry.wav"), dry);
    REQUIRE(cli.run("render " + cli.path("params.json") + " " +
                    cli.path("dry.wav") + " --out " + cli.path("wet.wav")) ==
            0);
    const SampledRir wet = read_wav_mono(cli.path("wet.wav"));
    CHECK(wet.samples.size() == dry.samples.size());

    // Silence in, silence out.
    SampledRir silence{48000, std::vector<double>(512, 0.0)};
    write_wav_float32(cli.path("silence.wav"), silence);
    REQUIRE(cli.run("render " + cli.path("params.json") + " " +
                    cli.path("silence.wav") + " --out " +
                    cli.path("silent_out.wav")) == 0);
    const SampledRir out = read_wav_mono(cli.path("silent_out.wav"));
    for (double s : out.samples) CHECK(s == 0.0);

    // Rate mismatch is a configuration error.
    SampledRir wrong{44100, std::vector<double>(64, 0.1)};
    write_wav_float32(cli.path("wrong_rate.wav"), wrong);
    std::string err;
    CHECK(cli.run("render " + cli.path("params.json") + " " +
                      cli.path("wrong_rate.wav") + " --out " +
                      cli.path("x.wav"),
                  &err) == 2);
    CHECK(err.find("error[config]") != std::string::npos);
  }

  SUBCASE("bench writes the model and measured costs") {
    REQUIRE(cli.run("fit --rir " + rir_path + " --seed 3 --restarts 1 " +
                    "--max-iterations 50 --out-params " +
                    cli.path("params.json") + " --out-report " +
                    cli.path("report.json")) == 0);
    std::string out;
    REQUIRE(cli.run("bench " + cli.path("params.json") +
                        " --n 4735 --w 512 --samples 12000 --out " +
                        cli.path("bench.csv"),
                    &out) == 0);
    const std::string csv = slurp(cli.path("bench.csv"));
    CHECK(csv.find("method,N,W,flops_per_sample,wall_ns_per_sample,"
                   "latency_samples") == 0);
    CHECK(csv.find("fdn,4735,0,149,") != std::string::npos);
    CHECK(csv.find("direct_conv,4735,0,9470,") != std::string::npos);
    CHECK(csv.find("direct_conv_serial,4735,0,9470,") != std::string::npos);
    CHECK(csv.find("partitioned_fft,4735,512,342.") != std::string::npos);
    CHECK(out.find("53x") != std::string::npos);  // reported figures echoed
  }

  SUBCASE("error paths exit nonzero with parsable diagnostics") {
    std::string err;
    // Zero-energy input.
    SampledRir silent{48000, std::vector<double>(128, 0.0)};
    write_wav_float32(cli.path("silent.wav"), silent);
    CHECK(cli.run("analyze " + cli.path("silent.wav"), &err) == 2);
    CHECK(err.find("error[degenerate-input]") != std::string::npos);
    CHECK(err.find("zero-energy") != std::string::npos);

    // Missing file.
    CHECK(cli.run("analyze " + cli.path("missing.wav"), &err) == 3);
    CHECK(err.find("error[io]") != std::string::npos);

    // Unknown flag.
    CHECK(cli.run("analyze --frobnicate x.wav", &err) == 2);
    CHECK(err.find("error[usage]") != std::string::npos);

    // Unreachable t30 (below the largest loop delay).
    Json metrics;
    metrics["schema_version"] = 1;
    metrics["clarity_log10"] = -0.01;
    metrics["definition"] = 0.99;
    metrics["center_time_samples"] = 300.0;
    metrics["t30_samples"] = 1000.0;
    metrics["sample_rate_hz"] = 48000;
    save_json_file(cli.path("bad_metrics.json"), metrics);
    EarlyReflections early{{{0, 1.0}}};
    save_json_file(cli.path("one_tap.json"), to_json(early, 48000));
    CHECK(cli.run("fit --metrics " + cli.path("bad_metrics.json") +
                      " --early " + cli.path("one_tap.json"),
                  &err) == 2);
    CHECK(err.find("error[config]") != std::string::npos);
  }

  SUBCASE("fit outputs are byte-identical across runs with one seed") {
    for (const char* tag : {"a", "b"}) {
      REQUIRE(cli.run(std::string("fit --rir ") + rir_path +
                      " --seed 11 --restarts 3 --out-params " +
                      cli.path(std::string("params_") + tag + ".json") +
                      " --out-report " +
                      cli.path(std::string("report_") + tag + ".json") +
                      " --trace " +
                      cli.path(std::string("trace_") + tag + ".csv")) == 0);
    }
    CHECK(slurp(cli.path("params_a.json")) == slurp(cli.path("params_b.json")));
    CHECK(slurp(cli.path("report_a.json")) == slurp(cli.path("report_b.json")));
    CHECK(slurp(cli.path("trace_a.csv")) == slurp(cli.path("trace_b.csv")));
  }
}
