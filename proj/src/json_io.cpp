#include "fdnreverb/json_io.hpp"

#include <fstream>

#include "fdnreverb/errors.hpp"

namespace fdnreverb {

namespace {

constexpr int kSchemaVersion = 1;

void check_schema(const Json& j, const char* what) {
  if (!j.is_object())
    throw_error(ErrorKind::config, std::string(what) + ": not a JSON object");
  if (j.contains("schema_version") && j["schema_version"].get<int>() !=
                                          kSchemaVersion)
    throw_error(ErrorKind::config,
                std::string(what) + ": unsupported schema_version");
}

template <class T>
T require(const Json& j, const char* key, const char* what) {
  if (!j.contains(key))
    throw_error(ErrorKind::config,
                std::string(what) + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw_error(ErrorKind::config,
                std::string(what) + ": field '" + key + "' has wrong type");
  }
}

Json taps_to_json(const EarlyReflections& early) {
  Json arr = Json::array();
  for (const Tap& t : early.taps) {
    Json tap;
    tap["delay_samples"] = t.delay_samples;
    tap["gain"] = t.gain;
    arr.push_back(std::move(tap));
  }
  return arr;
}

EarlyReflections taps_from_json(const Json& arr, const char* what) {
  if (!arr.is_array())
    throw_error(ErrorKind::config,
                std::string(what) + ": 'early' must be an array");
  EarlyReflections early;
  for (const Json& tap : arr) {
    early.taps.push_back({require<int>(tap, "delay_samples", what),
                          require<double>(tap, "gain", what)});
  }
  validate(early);
  return early;
}

}  // namespace

Json to_json(const NetworkParams& params) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["sample_rate_hz"] = params.fdn.sample_rate_hz;
  j["alpha"] = params.fdn.alpha;
  Json loops = Json::array();
  for (std::size_t i = 0; i < params.fdn.betas.size(); ++i) {
    Json loop;
    loop["beta"] = params.fdn.betas[i];
    loop["kappa_samples"] = params.fdn.kappas[i];
    loops.push_back(std::move(loop));
  }
  j["loops"] = std::move(loops);
  j["early"] = taps_to_json(params.early);
  return j;
}

NetworkParams network_params_from_json(const Json& j) {
  const char* what = "params";
  check_schema(j, what);
  NetworkParams p;
  p.fdn.sample_rate_hz = require<int>(j, "sample_rate_hz", what);
  p.fdn.alpha = require<double>(j, "alpha", what);
  if (!j.contains("loops") || !j["loops"].is_array())
    throw_error(ErrorKind::config, "params: missing 'loops' array");
  for (const Json& loop : j["loops"]) {
    p.fdn.betas.push_back(require<double>(loop, "beta", what));
    p.fdn.kappas.push_back(require<int>(loop, "kappa_samples", what));
  }
  if (j.contains("early")) p.early = taps_from_json(j["early"], what);
  validate(p.fdn);
  return p;
}

Json to_json(const AcousticMetrics& m, int sample_rate_hz) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["clarity_log10"] = m.clarity;
  j["definition"] = m.definition;
  j["center_time_samples"] = m.center_time_samples;
  j["t30_samples"] = m.t30_samples;
  j["sample_rate_hz"] = sample_rate_hz;
  return j;
}

std::pair<AcousticMetrics, int> metrics_from_json(const Json& j) {
  const char* what = "metrics";
  check_schema(j, what);
  AcousticMetrics m;
  m.clarity = require<double>(j, "clarity_log10", what);
  m.definition = require<double>(j, "definition", what);
  m.center_time_samples = require<double>(j, "center_time_samples", what);
  m.t30_samples = require<double>(j, "t30_samples", what);
  return {m, require<int>(j, "sample_rate_hz", what)};
}

Json to_json(const EarlyReflections& early, int sample_rate_hz) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["sample_rate_hz"] = sample_rate_hz;
  j["early"] = taps_to_json(early);
  return j;
}

std::pair<EarlyReflections, int> early_from_json(const Json& j) {
  const char* what = "early";
  check_schema(j, what);
  const int fs = require<int>(j, "sample_rate_hz", what);
  if (!j.contains("early"))
    throw_error(ErrorKind::config, "early: missing 'early' array");
  return {taps_from_json(j["early"], what), fs};
}

Json to_json(const FitReport& report, int sample_rate_hz) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["final_loss"] = report.final_loss;
  j["residuals"] = {report.residuals.l1, report.residuals.l2,
                    report.residuals.l3, report.residuals.l4};
  j["iterations_used"] = report.iterations_used;
  j["converged"] = report.converged;
  j["best_restart"] = report.best_restart;
  Json m = to_json(report.achieved_metrics, sample_rate_hz);
  m.erase("schema_version");
  j["achieved_metrics"] = std::move(m);
  return j;
}

Json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw_error(ErrorKind::io, "cannot open " + path);
  try {
    Json j;
    f >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorKind::config, path + ": " + e.what());
  }
}

void save_json_file(const std::string& path, const Json& j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw_error(ErrorKind::io, "cannot open " + path + " for writing");
  f << j.dump(2) << '\n';
  if (!f) throw_error(ErrorKind::io, "write failure on " + path);
}

}  // namespace fdnreverb
