#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aerialvp/backends.hpp"
#include "aerialvp/eval.hpp"
#include "aerialvp/tool_repository.hpp"

namespace aerialvp {

/// Declarative run/registry configuration (JSON):
///
///   {
///     "servers": [{"transport": "stdio"|"http", "address": "..."}],
///     "tools":   [{"name", "description", "transport", "address", "input_schema"?}],
///     "engine":  {"selector": {"kind": "first"|"scripted"|"http", ...}, "block_char_cap": 0},
///     "vlm":     {"kind": "echo-coordinates"|"scripted"|"http", ...},
///     "run":     {"beta", "concurrency", "seed", "semantic", "spatial_position",
///                 "spatial_relationship", "model"}
///   }
///
/// "{config_dir}" inside an address expands to the directory holding the file.
struct AppConfig {
  nlohmann::json raw = nlohmann::json::object();
  std::filesystem::path base_dir;

  /// Throws InputError when the file is missing or not a JSON object.
  static AppConfig load(const std::filesystem::path& path);
  static AppConfig from_json(nlohmann::json raw, std::filesystem::path base_dir = ".");
};

struct EndpointStatus {
  Endpoint endpoint;
  bool reachable = false;
  std::string error;
  std::size_t tools = 0;
};

struct LoadedRegistry {
  ToolRegistry registry;
  std::vector<EndpointStatus> endpoints;

  bool all_reachable() const;
};

/// Registers the declared tools and every prefixed tool the declared servers
/// list. Unreachable servers are recorded, not thrown. With `probe_static`,
/// endpoints of statically declared tools are checked with tools/list too.
LoadedRegistry build_registry(const AppConfig& config, McpClient& client, bool probe_static = false);

/// Null when the config asks for first-candidate selection.
std::unique_ptr<ChatBackend> make_selector(const AppConfig& config);
/// Throws InputError when no "vlm" section exists.
std::unique_ptr<ChatBackend> make_vlm(const AppConfig& config);
EngineOptions engine_options(const AppConfig& config);
/// Run settings from the "run" section, defaults elsewhere.
RunConfig run_config(const AppConfig& config);

}  // namespace aerialvp
