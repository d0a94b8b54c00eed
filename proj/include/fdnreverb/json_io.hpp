// JSON serialization of network parameters, metrics and fit reports.
// All documents carry "schema_version": 1 and fixed field names.
#pragma once

#include <string>

#include <json.hpp>

#include "fdnreverb/optimizer.hpp"
#include "fdnreverb/types.hpp"

namespace fdnreverb {

using Json = nlohmann::ordered_json;

Json to_json(const NetworkParams& params);
NetworkParams network_params_from_json(const Json& j);

Json to_json(const AcousticMetrics& m, int sample_rate_hz);
/// Returns the metrics plus the sample rate they were measured at.
std::pair<AcousticMetrics, int> metrics_from_json(const Json& j);

Json to_json(const EarlyReflections& early, int sample_rate_hz);
std::pair<EarlyReflections, int> early_from_json(const Json& j);

Json to_json(const FitReport& report, int sample_rate_hz);

/// File helpers; open failures raise io errors, malformed content raises
/// config errors naming the file.
Json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const Json& j);

}  // namespace fdnreverb
