#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace holodyn::cli {

using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

struct RunOverrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

// Executes one configured command and writes its outputs plus manifest.json
// into the output directory. Returns the manifest. Throws holodyn::error.
json run_config(json config, const RunOverrides& ov = {});

// Merged human-readable summary across run manifests.
std::string report(const std::vector<std::string>& manifest_paths);

// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 base point
// rejected.
int exit_code_for(const std::exception& e);

}  // namespace holodyn::cli
