#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "aerialvp/backends.hpp"

namespace httplib {
class Server;
}

namespace aerialvp {

/// One scripted tool. The handler maps validated arguments to an MCP
/// tools/call result object ({"content": [...], "structuredContent": ..., "isError": ...}).
struct StubTool {
  std::string name;
  std::string description;
  nlohmann::json input_schema;
  std::function<nlohmann::json(const nlohmann::json& arguments)> handler;
};

/// MCP result helpers for handlers.
nlohmann::json text_result(const std::string& text);
nlohmann::json error_result(const std::string& message);

/// Creates a backend for "llm" manifest tools; receives the tool's "backend" object.
using BackendFactory = std::function<std::shared_ptr<ChatBackend>(const nlohmann::json& spec)>;

/// Scripted MCP server answering initialize, tools/list and tools/call.
/// Dispatch is stateless apart from counters, so one instance may serve
/// several transports and threads at once.
class StubToolServer {
 public:
  explicit StubToolServer(std::vector<StubTool> tools);

  /// Builds tools from a manifest:
  ///   {"tools": [{"name", "kind", "description"?, ...}],
  ///    "images": {"<id>": {"objects": [{"label", "box", "confidence"}],
  ///                        "semantic": "...", "relationship": "..."}}}
  /// Kinds: detector, describer, relator, keywords, scripted, failing, llm.
  /// Throws InputError on a malformed manifest.
  static StubToolServer from_manifest(const nlohmann::json& manifest, BackendFactory factory = {});

  /// Reply for one decoded message; nullopt for notifications.
  std::optional<nlohmann::json> handle(const nlohmann::json& message) const;
  /// Same on raw text, with parse errors mapped to JSON-RPC -32700.
  std::optional<std::string> handle_text(std::string_view raw) const;

  /// Newline-delimited JSON loop until EOF on `in_fd`, or until `stop_fd`
  /// becomes readable when given.
  void serve_stream(int in_fd, int out_fd, int stop_fd = -1) const;

  const std::vector<StubTool>& tools() const noexcept { return tools_; }
  std::uint64_t calls_served() const noexcept { return calls_->load(); }

 private:
  std::vector<StubTool> tools_;
  std::shared_ptr<std::atomic<std::uint64_t>> calls_;
};

/// Hosts a StubToolServer over HTTP (POST /mcp) on a background thread.
class HttpStubHost {
 public:
  /// Binds immediately; port 0 picks a free port. Throws Error when the
  /// port cannot be bound.
  HttpStubHost(std::shared_ptr<const StubToolServer> server, const std::string& host, int port = 0);
  ~HttpStubHost();
  HttpStubHost(const HttpStubHost&) = delete;
  HttpStubHost& operator=(const HttpStubHost&) = delete;

  int port() const noexcept { return port_; }
  /// "http://<host>:<port>/mcp"
  std::string url() const;
  void stop();

 private:
  std::shared_ptr<const StubToolServer> server_;
  std::unique_ptr<httplib::Server> http_;
  std::string host_;
  int port_ = 0;
  std::thread thread_;
};

/// Runs a StubToolServer on a background thread behind a pipe pair, for
/// in-process tests of the stdio transport.
class PipeStubHost {
 public:
  explicit PipeStubHost(std::shared_ptr<const StubToolServer> server);
  ~PipeStubHost();
  PipeStubHost(const PipeStubHost&) = delete;
  PipeStubHost& operator=(const PipeStubHost&) = delete;

  /// Client side of the pipes. May be taken once.
  std::unique_ptr<class StreamTransport> take_transport();

 private:
  std::shared_ptr<const StubToolServer> server_;
  int client_read_ = -1;
  int client_write_ = -1;
  int server_read_ = -1;
  int server_write_ = -1;
  int stop_read_ = -1;
  int stop_write_ = -1;
  std::thread thread_;
};

}  // namespace aerialvp
