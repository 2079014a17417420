#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aerialvp/backends.hpp"
#include "aerialvp/geometry.hpp"
#include "aerialvp/prompt.hpp"
#include "aerialvp/transport.hpp"

namespace aerialvp {

enum class ToolCategory {
  TaskTypeAnalysis,
  TaskFocusedObjectsAnalysis,
  EnhancementTaskPlanning,
  SemanticDescription,
  SpatialPositionDescription,
  SpatialRelationshipDescription,
};

inline constexpr ToolCategory kAllToolCategories[] = {
    ToolCategory::TaskTypeAnalysis,           ToolCategory::TaskFocusedObjectsAnalysis,
    ToolCategory::EnhancementTaskPlanning,    ToolCategory::SemanticDescription,
    ToolCategory::SpatialPositionDescription, ToolCategory::SpatialRelationshipDescription};

std::string_view to_string(ToolCategory category) noexcept;
std::optional<ToolCategory> parse_tool_category(std::string_view prefix);
ToolCategory category_for(EnhancementKind kind) noexcept;

/// Category whose prefix the tool name carries ("semantic_description_dam" ->
/// SemanticDescription). The prefix must be the whole name or be followed by '_'.
std::optional<ToolCategory> category_of_tool_name(std::string_view name);

struct ToolDescriptor {
  std::string name;
  ToolCategory category = ToolCategory::SemanticDescription;
  std::string description;
  /// JSON-schema object: {"type":"object","properties":{...},"required":[...]}.
  nlohmann::json input_schema = nlohmann::json::object();
  Endpoint endpoint;
};

/// Builds a descriptor, deriving the category from the name prefix.
/// Throws RegistryError when the name carries no known prefix.
ToolDescriptor make_descriptor(std::string name, std::string description,
                               nlohmann::json input_schema, Endpoint endpoint);

/// Parameters the engine knows how to fill for a category; used when a tool
/// declares no schema of its own.
nlohmann::json default_input_schema(ToolCategory category);

/// Rejects unknown keys, missing required keys and basic JSON type mismatches.
void validate_arguments(const nlohmann::json& schema, const nlohmann::json& arguments);

struct Detection {
  std::string label;
  BoundingBox box;
  double confidence = 0.0;
};

struct ToolResult {
  bool ok = false;
  std::string text;
  std::vector<Detection> detections;
  std::chrono::duration<double, std::milli> latency{0};
  std::string error;
};

/// Tool registry M. Concurrent reads are safe; writes are serialized.
class ToolRegistry {
 public:
  ToolRegistry() = default;
  ToolRegistry(const ToolRegistry& other);
  ToolRegistry& operator=(const ToolRegistry& other);

  /// Throws RegistryError on an unknown prefix or mismatched category and
  /// ConflictError on a duplicate name.
  void add(ToolDescriptor descriptor);
  bool remove(std::string_view name);

  /// Registered tools whose name carries the category prefix, in registration order.
  std::vector<ToolDescriptor> screen_candidates(ToolCategory category) const;
  std::vector<ToolDescriptor> list() const;
  std::optional<ToolDescriptor> find(std::string_view name) const;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::vector<ToolDescriptor> tools_;
};

/// MCP client over HTTP or newline-delimited stdio.
class McpClient {
 public:
  struct Options {
    /// Extra attempts after a transport failure.
    int retries = 1;
    std::chrono::milliseconds backoff{50};
    HttpTimeouts http_timeouts{};
    /// Send initialize + notifications/initialized before the first request.
    bool handshake = true;
  };

  McpClient();
  explicit McpClient(Options options);
  ~McpClient();
  McpClient(const McpClient&) = delete;
  McpClient& operator=(const McpClient&) = delete;

  /// tools/list; throws EndpointUnreachableError or ProtocolError.
  std::vector<ToolDescriptor> list_remote_tools(const Endpoint& endpoint);

  /// tools/call. Argument schema violations throw ArgumentError before any
  /// I/O; every other failure is reported as ok=false.
  ToolResult call_tool(const ToolDescriptor& tool, const nlohmann::json& arguments);

  /// Routes `endpoint` through a caller-supplied transport (in-process servers).
  void attach(const Endpoint& endpoint, std::shared_ptr<Transport> transport);

  void set_observer(MessageObserver observer);
  /// Requests and notifications written so far.
  std::uint64_t messages_sent() const noexcept { return messages_sent_.load(); }

 private:
  struct Connection;
  std::shared_ptr<Connection> connection(const Endpoint& endpoint);
  void drop(const Endpoint& endpoint, const std::shared_ptr<Connection>& conn);
  nlohmann::json request(const Endpoint& endpoint, const std::string& method,
                         nlohmann::json params);
  nlohmann::json request_once(Connection& conn, const std::string& method,
                              const nlohmann::json& params);
  void handshake(Connection& conn);
  void observe(bool outgoing, const std::string& raw);

  Options options_;
  std::atomic<std::int64_t> next_id_{1};
  std::atomic<std::uint64_t> messages_sent_{0};
  std::mutex connections_mutex_;
  std::map<std::string, std::shared_ptr<Connection>> connections_;
  std::map<std::string, std::shared_ptr<Transport>> attached_;
  std::mutex observer_mutex_;
  MessageObserver observer_;
};

struct ToolSelection {
  ToolDescriptor tool;
  /// True when the fallback rule picked the tool.
  bool degraded = false;
  std::size_t backend_calls = 0;
  std::string detail;
};

/// Picks one candidate. A single candidate is returned without consulting the
/// selector; otherwise the selector ranks candidates against the object set and
/// its first named candidate wins. Falls back to the first candidate when the
/// selector is absent, fails, or names none. Throws NoToolAvailableError on an
/// empty candidate list.
ToolSelection select_tool(ToolCategory category, const ObjectSet& objects,
                          const std::vector<ToolDescriptor>& candidates, ChatBackend* selector);

}  // namespace aerialvp
