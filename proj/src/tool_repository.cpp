#include "aerialvp/tool_repository.hpp"

#include <algorithm>
#include <thread>

#include "aerialvp/assets.hpp"
#include "aerialvp/error.hpp"
#include "aerialvp/jsonrpc.hpp"
#include "text_util.hpp"

namespace aerialvp {

using nlohmann::json;

std::string_view to_string(ToolCategory category) noexcept {
  switch (category) {
    case ToolCategory::TaskTypeAnalysis: return "task_type_analysis";
    case ToolCategory::TaskFocusedObjectsAnalysis: return "task_focused_objects_analysis";
    case ToolCategory::EnhancementTaskPlanning: return "enhancement_task_planning";
    case ToolCategory::SemanticDescription: return "semantic_description";
    case ToolCategory::SpatialPositionDescription: return "spatial_position_description";
    case ToolCategory::SpatialRelationshipDescription: return "spatial_relationship_description";
  }
  return "";
}

std::optional<ToolCategory> parse_tool_category(std::string_view prefix) {
  for (auto c : kAllToolCategories) {
    if (to_string(c) == prefix) return c;
  }
  return std::nullopt;
}

ToolCategory category_for(EnhancementKind kind) noexcept {
  switch (kind) {
    case EnhancementKind::SemanticDescription: return ToolCategory::SemanticDescription;
    case EnhancementKind::SpatialPositionDescription: return ToolCategory::SpatialPositionDescription;
    case EnhancementKind::SpatialRelationshipDescription:
      return ToolCategory::SpatialRelationshipDescription;
  }
  return ToolCategory::SemanticDescription;
}

namespace {

bool has_prefix(std::string_view name, std::string_view prefix) {
  if (!detail::starts_with(name, prefix)) return false;
  return name.size() == prefix.size() || name[prefix.size()] == '_';
}

}  // namespace

std::optional<ToolCategory> category_of_tool_name(std::string_view name) {
  std::optional<ToolCategory> found;
  for (auto c : kAllToolCategories) {
    if (has_prefix(name, to_string(c))) {
      if (found) return std::nullopt;
      found = c;
    }
  }
  return found;
}

ToolDescriptor make_descriptor(std::string name, std::string description, json input_schema,
                               Endpoint endpoint) {
  const auto category = category_of_tool_name(name);
  if (!category) throw RegistryError("tool name \"" + name + "\" carries no known category prefix");
  return ToolDescriptor{std::move(name), *category, std::move(description), std::move(input_schema),
                        std::move(endpoint)};
}

namespace {

json string_prop() { return {{"type", "string"}}; }
json array_prop() { return {{"type", "array"}}; }

}  // namespace

json default_input_schema(ToolCategory category) {
  switch (category) {
    case ToolCategory::TaskTypeAnalysis:
    case ToolCategory::TaskFocusedObjectsAnalysis:
      return {{"type", "object"}, {"properties", {{"prompt", string_prop()}}}, {"required", {"prompt"}}};
    case ToolCategory::EnhancementTaskPlanning:
      return {{"type", "object"},
              {"properties", {{"task_type", string_prop()}, {"objects", array_prop()}}},
              {"required", {"task_type", "objects"}}};
    case ToolCategory::SpatialPositionDescription:
      return {{"type", "object"},
              {"properties", {{"image", string_prop()}, {"classes", array_prop()}, {"prompt", string_prop()}}},
              {"required", {"image", "classes"}}};
    case ToolCategory::SemanticDescription:
    case ToolCategory::SpatialRelationshipDescription:
      return {{"type", "object"},
              {"properties",
               {{"image", string_prop()},
                {"objects", array_prop()},
                {"detections", array_prop()},
                {"prompt", string_prop()}}},
              {"required", {"image"}}};
  }
  return json::object();
}

void validate_arguments(const json& schema, const json& arguments) {
  if (!arguments.is_object()) throw ArgumentError("tool arguments must be a JSON object");
  const json properties = schema.is_object() ? schema.value("properties", json::object()) : json::object();
  const bool open = schema.is_object() && schema.value("additionalProperties", false) == true;
  for (const auto& [key, value] : arguments.items()) {
    if (!properties.contains(key)) {
      if (open) continue;
      throw ArgumentError("unknown argument \"" + key + "\"");
    }
    const auto& prop = properties[key];
    if (!prop.is_object() || !prop.contains("type") || !prop["type"].is_string()) continue;
    const auto type = prop["type"].get<std::string>();
    const bool ok = (type == "string" && value.is_string()) ||
                    (type == "number" && value.is_number()) ||
                    (type == "integer" && value.is_number_integer()) ||
                    (type == "boolean" && value.is_boolean()) ||
                    (type == "array" && value.is_array()) ||
                    (type == "object" && value.is_object()) || type == "null" || type.empty();
    if (!ok) throw ArgumentError("argument \"" + key + "\" must be of type " + type);
  }
  if (schema.is_object() && schema.contains("required") && schema["required"].is_array()) {
    for (const auto& req : schema["required"]) {
      if (req.is_string() && !arguments.contains(req.get<std::string>())) {
        throw ArgumentError("missing required argument \"" + req.get<std::string>() + "\"");
      }
    }
  }
}

// ---------------------------------------------------------------------------

ToolRegistry::ToolRegistry(const ToolRegistry& other) {
  std::shared_lock lock(other.mutex_);
  tools_ = other.tools_;
}

ToolRegistry& ToolRegistry::operator=(const ToolRegistry& other) {
  if (this == &other) return *this;
  std::vector<ToolDescriptor> copy;
  {
    std::shared_lock lock(other.mutex_);
    copy = other.tools_;
  }
  std::unique_lock lock(mutex_);
  tools_ = std::move(copy);
  return *this;
}

void ToolRegistry::add(ToolDescriptor descriptor) {
  const auto category = category_of_tool_name(descriptor.name);
  if (!category) {
    throw RegistryError("tool name \"" + descriptor.name + "\" carries no known category prefix");
  }
  if (*category != descriptor.category) {
    throw RegistryError("tool \"" + descriptor.name + "\" declared as " +
                        std::string(to_string(descriptor.category)) + " but named as " +
                        std::string(to_string(*category)));
  }
  std::unique_lock lock(mutex_);
  for (const auto& t : tools_) {
    if (t.name == descriptor.name) throw ConflictError("tool \"" + descriptor.name + "\" already registered");
  }
  tools_.push_back(std::move(descriptor));
}

bool ToolRegistry::remove(std::string_view name) {
  std::unique_lock lock(mutex_);
  auto it = std::find_if(tools_.begin(), tools_.end(), [&](const auto& t) { return t.name == name; });
  if (it == tools_.end()) return false;
  tools_.erase(it);
  return true;
}

std::vector<ToolDescriptor> ToolRegistry::screen_candidates(ToolCategory category) const {
  const auto prefix = to_string(category);
  std::shared_lock lock(mutex_);
  std::vector<ToolDescriptor> out;
  for (const auto& t : tools_) {
    if (has_prefix(t.name, prefix)) out.push_back(t);
  }
  return out;
}

std::vector<ToolDescriptor> ToolRegistry::list() const {
  std::shared_lock lock(mutex_);
  return tools_;
}

std::optional<ToolDescriptor> ToolRegistry::find(std::string_view name) const {
  std::shared_lock lock(mutex_);
  for (const auto& t : tools_) {
    if (t.name == name) return t;
  }
  return std::nullopt;
}

std::size_t ToolRegistry::size() const {
  std::shared_lock lock(mutex_);
  return tools_.size();
}

// ---------------------------------------------------------------------------

struct McpClient::Connection {
  Endpoint endpoint;
  std::shared_ptr<Transport> transport;
  std::mutex init_mutex;
  bool initialized = false;
};

McpClient::McpClient() : McpClient(Options{}) {}
McpClient::McpClient(Options options) : options_(std::move(options)) {}
McpClient::~McpClient() = default;

void McpClient::attach(const Endpoint& endpoint, std::shared_ptr<Transport> transport) {
  std::lock_guard lock(connections_mutex_);
  attached_[endpoint.key()] = std::move(transport);
  connections_.erase(endpoint.key());
}

void McpClient::set_observer(MessageObserver observer) {
  std::lock_guard lock(observer_mutex_);
  observer_ = std::move(observer);
}

void McpClient::observe(bool outgoing, const std::string& raw) {
  std::lock_guard lock(observer_mutex_);
  if (observer_) observer_(outgoing, raw);
}

std::shared_ptr<McpClient::Connection> McpClient::connection(const Endpoint& endpoint) {
  std::lock_guard lock(connections_mutex_);
  const auto key = endpoint.key();
  if (auto it = connections_.find(key); it != connections_.end()) return it->second;
  auto conn = std::make_shared<Connection>();
  conn->endpoint = endpoint;
  if (auto it = attached_.find(key); it != attached_.end()) {
    conn->transport = it->second;
  } else if (endpoint.kind == Endpoint::Kind::Http) {
    conn->transport = std::make_shared<HttpTransport>(endpoint.address, options_.http_timeouts);
  } else {
    conn->transport = StreamTransport::spawn(endpoint.address);
  }
  connections_[key] = conn;
  return conn;
}

void McpClient::drop(const Endpoint& endpoint, const std::shared_ptr<Connection>& conn) {
  std::lock_guard lock(connections_mutex_);
  auto it = connections_.find(endpoint.key());
  if (it != connections_.end() && it->second == conn) connections_.erase(it);
}

void McpClient::handshake(Connection& conn) {
  std::lock_guard lock(conn.init_mutex);
  if (conn.initialized || !options_.handshake) return;
  const json params = {{"protocolVersion", "2025-06-18"},
                       {"capabilities", json::object()},
                       {"clientInfo", {{"name", "aerialvp"}, {"version", "0.1.0"}}}};
  const auto id = next_id_.fetch_add(1);
  const auto out = jsonrpc::make_request(id, "initialize", params).dump();
  observe(true, out);
  ++messages_sent_;
  const auto raw = conn.transport->exchange(out);
  observe(false, raw);
  // Servers without an initialize method still serve tools; only transport
  // failures abort here.
  const auto note = jsonrpc::make_notification("notifications/initialized").dump();
  observe(true, note);
  ++messages_sent_;
  conn.transport->notify(note);
  conn.initialized = true;
}

json McpClient::request_once(Connection& conn, const std::string& method,
                             const json& params) {
  handshake(conn);
  const auto id = next_id_.fetch_add(1);
  const auto out = jsonrpc::make_request(id, method, params).dump();
  observe(true, out);
  ++messages_sent_;
  const auto raw = conn.transport->exchange(out);
  observe(false, raw);
  json reply = json::parse(raw, nullptr, false);
  if (reply.is_discarded()) throw ProtocolError("response is not JSON", raw);
  if (auto problem = jsonrpc::validate_response(reply, json(id)); !problem.empty()) {
    throw ProtocolError("invalid JSON-RPC response: " + problem, raw);
  }
  return reply;
}

json McpClient::request(const Endpoint& endpoint, const std::string& method,
                        json params) {
  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt) std::this_thread::sleep_for(options_.backoff);
    std::shared_ptr<Connection> conn;
    try {
      conn = connection(endpoint);
      return request_once(*conn, method, params);
    } catch (const EndpointUnreachableError& err) {
      last_error = err.what();
      if (conn) drop(endpoint, conn);
    }
  }
  throw EndpointUnreachableError("endpoint " + endpoint.key() + " unreachable: " + last_error);
}

std::vector<ToolDescriptor> McpClient::list_remote_tools(const Endpoint& endpoint) {
  const json reply = request(endpoint, "tools/list", nullptr);
  const auto raw = reply.dump();
  if (reply.contains("error")) {
    throw ProtocolError("tools/list failed: " + reply["error"].value("message", std::string()), raw);
  }
  const auto& result = reply["result"];
  if (!result.is_object() || !result.contains("tools") || !result["tools"].is_array()) {
    throw ProtocolError("tools/list result lacks a tools array", raw);
  }
  std::vector<ToolDescriptor> out;
  for (const auto& entry : result["tools"]) {
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string()) {
      throw ProtocolError("tools/list entry lacks a name", raw);
    }
    const auto name = entry["name"].get<std::string>();
    const auto category = category_of_tool_name(name);
    if (!category) continue;  // not one of ours; MCP servers may host unrelated tools
    ToolDescriptor d;
    d.name = name;
    d.category = *category;
    d.description = entry.value("description", std::string());
    d.input_schema = entry.value("inputSchema", json::object());
    d.endpoint = endpoint;
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

std::vector<Detection> parse_detections(const json& items) {
  std::vector<Detection> out;
  if (!items.is_array()) return out;
  for (const auto& item : items) {
    if (!item.is_object() || !item.contains("box")) continue;
    const auto& box = item["box"];
    if (!box.is_array() || box.size() != 4) continue;
    bool numeric = std::all_of(box.begin(), box.end(), [](const json& v) { return v.is_number(); });
    if (!numeric) continue;
    Detection d;
    d.label = item.value("label", std::string());
    try {
      d.box = make_box(box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                       box[3].get<double>());
    } catch (const GeometryError&) {
      continue;
    }
    d.confidence = item.value("confidence", 0.0);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace

ToolResult McpClient::call_tool(const ToolDescriptor& tool, const json& arguments) {
  validate_arguments(tool.input_schema, arguments);
  const auto start = std::chrono::steady_clock::now();
  ToolResult result;
  const auto finish = [&] {
    result.latency = std::chrono::steady_clock::now() - start;
    return result;
  };
  json reply;
  try {
    reply = request(tool.endpoint, "tools/call", json{{"name", tool.name}, {"arguments", arguments}});
  } catch (const EndpointUnreachableError& err) {
    result.error = err.what();
    return finish();
  } catch (const ProtocolError& err) {
    result.error = std::string(err.what()) + ": " + err.raw();
    return finish();
  }
  if (reply.contains("error")) {
    const auto& e = reply["error"];
    result.error = "remote error " + std::to_string(e.value("code", 0)) + ": " +
                   e.value("message", std::string());
    return finish();
  }
  const auto& body = reply["result"];
  if (!body.is_object()) {
    result.error = "tools/call result is not an object";
    return finish();
  }
  std::string text;
  if (body.contains("content") && body["content"].is_array()) {
    for (const auto& block : body["content"]) {
      if (block.is_object() && block.value("type", "") == "text" && block.contains("text") &&
          block["text"].is_string()) {
        if (!text.empty()) text += "\n";
        text += block["text"].get<std::string>();
      }
    }
  }
  if (body.value("isError", false)) {
    result.error = text.empty() ? std::string("tool reported an error") : text;
    return finish();
  }
  result.text = std::move(text);
  if (body.contains("structuredContent") && body["structuredContent"].is_object()) {
    result.detections = parse_detections(body["structuredContent"].value("detections", json::array()));
  }
  result.ok = !detail::trim(result.text).empty() || !result.detections.empty();
  if (!result.ok) result.error = "tool returned no content";
  return finish();
}

// ---------------------------------------------------------------------------

ToolSelection select_tool(ToolCategory category, const ObjectSet& objects,
                          const std::vector<ToolDescriptor>& candidates, ChatBackend* selector) {
  if (candidates.empty()) {
    throw NoToolAvailableError("no tool available for " + std::string(to_string(category)));
  }
  if (candidates.size() == 1) return ToolSelection{candidates.front(), false, 0, {}};

  ToolSelection fallback{candidates.front(), true, 0, {}};
  if (!selector) {
    fallback.detail = "no selector configured; first candidate used";
    return fallback;
  }
  std::string listing;
  for (const auto& c : candidates) {
    listing += "- " + c.name + ": " + c.description + "\n";
  }
  ChatRequest request;
  request.user = fill_template(prompt_asset("tool_selection"),
                               {{"category", std::string(to_string(category))},
                                {"objects", objects.joined()},
                                {"candidates", listing}});
  std::string answer;
  fallback.backend_calls = 1;
  try {
    answer = selector->complete(request);
  } catch (const Error& err) {
    fallback.detail = std::string("selector failed: ") + err.what();
    return fallback;
  }
  // Earliest whole-token mention wins.
  std::optional<std::size_t> best;
  std::size_t best_pos = std::string::npos;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& name = candidates[i].name;
    std::size_t pos = 0;
    while ((pos = answer.find(name, pos)) != std::string::npos) {
      const std::size_t end = pos + name.size();
      const bool left = pos == 0 || !detail::is_word_char(answer[pos - 1]);
      const bool right = end >= answer.size() || !detail::is_word_char(answer[end]);
      if (left && right) break;
      ++pos;
    }
    if (pos != std::string::npos && pos < best_pos) {
      best_pos = pos;
      best = i;
    }
  }
  if (!best) {
    fallback.detail = "selector named no candidate; first candidate used";
    return fallback;
  }
  return ToolSelection{candidates[*best], false, 1, {}};
}

}  // namespace aerialvp
