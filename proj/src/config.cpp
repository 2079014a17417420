#include "aerialvp/config.hpp"

#include <fstream>
#include <set>

#include "aerialvp/assets.hpp"
#include "aerialvp/error.hpp"

namespace aerialvp {

using nlohmann::json;

AppConfig AppConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json raw = json::parse(in, nullptr, false);
  if (raw.is_discarded() || !raw.is_object()) throw InputError("config " + path.string() + " is not a JSON object");
  auto dir = std::filesystem::absolute(path).parent_path();
  return from_json(std::move(raw), dir);
}

AppConfig AppConfig::from_json(json raw, std::filesystem::path base_dir) {
  if (!raw.is_object()) throw InputError("config must be a JSON object");
  return AppConfig{std::move(raw), std::move(base_dir)};
}

bool LoadedRegistry::all_reachable() const {
  for (const auto& e : endpoints) {
    if (!e.reachable) return false;
  }
  return true;
}

namespace {

Endpoint endpoint_from(const json& entry, const AppConfig& config) {
  Endpoint ep;
  ep.kind = parse_endpoint_kind(entry.value("transport", std::string("http")));
  ep.address = fill_template(entry.at("address").get<std::string>(),
                             {{"config_dir", config.base_dir.string()}});
  if (ep.address.empty()) throw InputError("endpoint address is empty");
  return ep;
}

}  // namespace

LoadedRegistry build_registry(const AppConfig& config, McpClient& client, bool probe_static) {
  LoadedRegistry loaded;
  std::set<std::string> probed;
  try {
    for (const auto& entry : config.raw.value("tools", json::array())) {
      const auto name = entry.at("name").get<std::string>();
      const auto category = category_of_tool_name(name);
      if (!category) throw RegistryError("tool name \"" + name + "\" carries no known category prefix");
      ToolDescriptor d;
      d.name = name;
      d.category = *category;
      d.description = entry.value("description", std::string());
      d.input_schema = entry.contains("input_schema") ? entry["input_schema"] : default_input_schema(*category);
      d.endpoint = endpoint_from(entry, config);
      loaded.registry.add(d);
      if (probe_static && probed.insert(d.endpoint.key()).second) {
        EndpointStatus status{d.endpoint, false, {}, 0};
        try {
          status.tools = client.list_remote_tools(d.endpoint).size();
          status.reachable = true;
        } catch (const Error& err) {
          status.error = err.what();
        }
        loaded.endpoints.push_back(std::move(status));
      }
    }
    for (const auto& entry : config.raw.value("servers", json::array())) {
      EndpointStatus status{endpoint_from(entry, config), false, {}, 0};
      if (!probed.insert(status.endpoint.key()).second) continue;
      try {
        auto tools = client.list_remote_tools(status.endpoint);
        status.tools = tools.size();
        status.reachable = true;
        for (auto& t : tools) loaded.registry.add(std::move(t));
      } catch (const EndpointUnreachableError& err) {
        status.error = err.what();
      } catch (const ProtocolError& err) {
        status.error = err.what();
      }
      loaded.endpoints.push_back(std::move(status));
    }
  } catch (const json::exception& err) {
    throw InputError(std::string("malformed registry config: ") + err.what());
  }
  return loaded;
}

std::unique_ptr<ChatBackend> make_selector(const AppConfig& config) {
  const json engine = config.raw.value("engine", json::object());
  const json spec = engine.value("selector", json{{"kind", "first"}});
  if (spec.value("kind", std::string()) == "first") return nullptr;
  try {
    return make_backend(spec, "selector");
  } catch (const json::exception& err) {
    throw InputError(std::string("malformed selector config: ") + err.what());
  }
}

std::unique_ptr<ChatBackend> make_vlm(const AppConfig& config) {
  if (!config.raw.contains("vlm")) throw InputError("config has no \"vlm\" section");
  try {
    return make_backend(config.raw["vlm"], "vlm");
  } catch (const json::exception& err) {
    throw InputError(std::string("malformed vlm config: ") + err.what());
  }
}

EngineOptions engine_options(const AppConfig& config) {
  EngineOptions options;
  const json engine = config.raw.value("engine", json::object());
  try {
    options.fusion.block_char_cap = engine.value("block_char_cap", std::size_t{0});
  } catch (const json::exception& err) {
    throw InputError(std::string("malformed engine config: ") + err.what());
  }
  return options;
}

RunConfig run_config(const AppConfig& config) {
  RunConfig rc;
  const json run = config.raw.value("run", json::object());
  try {
    rc.beta = run.value("beta", kDefaultIouThreshold);
    rc.concurrency = run.value("concurrency", std::size_t{1});
    rc.seed = run.value("seed", std::uint64_t{0});
    rc.switches.semantic = run.value("semantic", true);
    rc.switches.spatial_position = run.value("spatial_position", true);
    rc.switches.spatial_relationship = run.value("spatial_relationship", true);
    rc.model = run.value("model", std::string());
  } catch (const json::exception& err) {
    throw InputError(std::string("malformed run config: ") + err.what());
  }
  validate(rc);
  return rc;
}

}  // namespace aerialvp
