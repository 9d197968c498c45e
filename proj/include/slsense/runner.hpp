#pragma once

#include <string>

#include <json.hpp>

#include "slsense/config.hpp"

namespace slsense {

extern const char* const kVersion;

// Executes one pipeline command: generate, preprocess, train, evaluate,
// dropout, pairs, permute, importance, federate, or simulate. Artifacts
// land under cfg.out_dir next to the resolved config and a run manifest.
// Returns a summary document (also written to <out_dir>/<command>.json
// for result-bearing commands). Errors surface as ConfigError/DataError/
// RuntimeError.
nlohmann::json run_command(const std::string& command, const RunConfig& cfg);

}  // namespace slsense
