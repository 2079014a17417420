#include "aerialvp/stub_server.hpp"

#include <algorithm>
#include <filesystem>
#include <cerrno>
#include <fcntl.h>
#include <poll.h>
#include <unistd.h>

#include <httplib.h>

#include "aerialvp/assets.hpp"
#include "aerialvp/error.hpp"
#include "aerialvp/jsonrpc.hpp"
#include "aerialvp/tool_repository.hpp"
#include "aerialvp/transport.hpp"
#include "text_util.hpp"

namespace aerialvp {

using nlohmann::json;

json text_result(const std::string& text) {
  return {{"content", json::array({{{"type", "text"}, {"text", text}}})}, {"isError", false}};
}

json error_result(const std::string& message) {
  return {{"content", json::array({{{"type", "text"}, {"text", message}}})}, {"isError", true}};
}

StubToolServer::StubToolServer(std::vector<StubTool> tools)
    : tools_(std::move(tools)), calls_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
  for (std::size_t i = 0; i < tools_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (tools_[i].name == tools_[j].name) throw InputError("duplicate stub tool " + tools_[i].name);
    }
  }
}

std::optional<json> StubToolServer::handle(const json& message) const {
  const json id = message.is_object() && message.contains("id") ? message["id"] : json();
  if (auto problem = jsonrpc::validate_request(message); !problem.empty()) {
    return jsonrpc::make_error(id, jsonrpc::kInvalidRequest, problem);
  }
  const auto method = message["method"].get<std::string>();
  const bool notification = !message.contains("id");
  if (notification) return std::nullopt;
  const json params = message.value("params", json::object());

  if (method == "initialize") {
    return jsonrpc::make_result(
        id, {{"protocolVersion", params.value("protocolVersion", std::string("2025-06-18"))},
             {"capabilities", {{"tools", json::object()}}},
             {"serverInfo", {{"name", "aerialvp-stub"}, {"version", "0.1.0"}}}});
  }
  if (method == "ping") return jsonrpc::make_result(id, json::object());
  if (method == "tools/list") {
    json list = json::array();
    for (const auto& t : tools_) {
      list.push_back({{"name", t.name}, {"description", t.description}, {"inputSchema", t.input_schema}});
    }
    return jsonrpc::make_result(id, {{"tools", std::move(list)}});
  }
  if (method == "tools/call") {
    if (!params.is_object() || !params.contains("name") || !params["name"].is_string()) {
      return jsonrpc::make_error(id, jsonrpc::kInvalidParams, "tools/call needs a tool name");
    }
    const auto name = params["name"].get<std::string>();
    const json args = params.value("arguments", json::object());
    for (const auto& t : tools_) {
      if (t.name != name) continue;
      try {
        validate_arguments(t.input_schema, args);
      } catch (const ArgumentError& err) {
        return jsonrpc::make_error(id, jsonrpc::kInvalidParams, err.what());
      }
      calls_->fetch_add(1);
      try {
        return jsonrpc::make_result(id, t.handler(args));
      } catch (const std::exception& err) {
        return jsonrpc::make_result(id, error_result(err.what()));
      }
    }
    return jsonrpc::make_error(id, jsonrpc::kInvalidParams, "Unknown tool: " + name);
  }
  return jsonrpc::make_error(id, jsonrpc::kMethodNotFound, "Method not found: " + method);
}

std::optional<std::string> StubToolServer::handle_text(std::string_view raw) const {
  json message = json::parse(raw, nullptr, false);
  if (message.is_discarded()) {
    return jsonrpc::make_error(json(), jsonrpc::kParseError, "Parse error").dump();
  }
  auto reply = handle(message);
  if (!reply) return std::nullopt;
  return reply->dump();
}

void StubToolServer::serve_stream(int in_fd, int out_fd, int stop_fd) const {
  std::string buffer;
  std::string line;
  while (true) {
    if (stop_fd >= 0 && buffer.find('\n') == std::string::npos) {
      pollfd fds[2] = {{in_fd, POLLIN, 0}, {stop_fd, POLLIN, 0}};
      const int rc = ::poll(fds, 2, -1);
      if (rc < 0 && errno == EINTR) continue;
      if (rc < 0 || (fds[1].revents & (POLLIN | POLLHUP))) return;
    }
    if (!read_line_fd(in_fd, buffer, line)) return;
    if (detail::trim(line).empty()) continue;
    if (auto reply = handle_text(line)) {
      if (!write_all_fd(out_fd, *reply + "\n")) return;
    }
  }
}

// ---------------------------------------------------------------------------
// Manifest-driven tools

namespace {

std::string joined_strings(const json& arr) {
  std::string out;
  if (!arr.is_array()) return out;
  for (const auto& v : arr) {
    if (!v.is_string()) continue;
    if (!out.empty()) out += ", ";
    out += v.get<std::string>();
  }
  return out;
}

/// Text that script tables match against: the prompt argument when present.
std::string script_subject(const json& args) {
  if (args.contains("prompt") && args["prompt"].is_string()) return args["prompt"].get<std::string>();
  return args.dump();
}

const json* image_entry(const json& images, const json& args) {
  const auto ref = args.value("image", std::string());
  if (!images.is_object()) return nullptr;
  if (images.contains(ref)) return &images[ref];
  // Callers often pass a path; manifests key images by file name.
  const auto name = std::filesystem::path(ref).filename().string();
  if (!name.empty() && images.contains(name)) return &images[name];
  return nullptr;
}

void check_image_manifest(const json& images) {
  if (!images.is_object()) throw InputError("manifest \"images\" must be an object");
  for (const auto& [id, entry] : images.items()) {
    if (!entry.is_object()) throw InputError("manifest image " + id + " must be an object");
    for (const auto& obj : entry.value("objects", json::array())) {
      const auto& box = obj.contains("box") ? obj["box"] : json();
      if (!obj.contains("label") || !obj["label"].is_string() || !box.is_array() || box.size() != 4) {
        throw InputError("manifest image " + id + " has an object without label/box");
      }
      for (const auto& v : box) {
        if (!v.is_number()) throw InputError("manifest image " + id + " has a non-numeric box");
      }
      make_box(box[0].get<double>(), box[1].get<double>(), box[2].get<double>(), box[3].get<double>());
    }
  }
}

StubTool make_manifest_tool(const json& spec, const std::shared_ptr<const json>& images,
                            const BackendFactory& factory) {
  if (!spec.is_object() || !spec.contains("name") || !spec["name"].is_string()) {
    throw InputError("manifest tool needs a name");
  }
  StubTool tool;
  tool.name = spec["name"].get<std::string>();
  const auto category = category_of_tool_name(tool.name);
  if (!category) throw InputError("manifest tool \"" + tool.name + "\" carries no known category prefix");
  const auto kind = spec.value("kind", std::string());
  tool.description = spec.value("description", kind + " stub for " + std::string(to_string(*category)));
  tool.input_schema = spec.contains("input_schema") ? spec["input_schema"] : default_input_schema(*category);

  if (kind == "detector") {
    tool.handler = [images](const json& args) {
      const json* entry = image_entry(*images, args);
      if (!entry) return error_result("unknown image " + args.value("image", std::string()));
      std::vector<std::string> wanted;
      for (const auto& c : args.value("classes", json::array())) {
        if (c.is_string()) wanted.push_back(detail::lower(c.get<std::string>()));
      }
      json detections = json::array();
      for (const auto& obj : entry->value("objects", json::array())) {
        const auto label = detail::lower(obj["label"].get<std::string>());
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), label) == wanted.end()) continue;
        detections.push_back({{"label", obj["label"]},
                              {"box", obj["box"]},
                              {"confidence", obj.value("confidence", 1.0)}});
      }
      json result = text_result(detections.empty()
                                    ? std::string("No target objects detected.")
                                    : "Detected " + std::to_string(detections.size()) + " object(s).");
      result["structuredContent"] = {{"detections", std::move(detections)}};
      return result;
    };
  } else if (kind == "describer" || kind == "relator") {
    const std::string field = kind == "describer" ? "semantic" : "relationship";
    tool.handler = [images, field](const json& args) {
      const json* entry = image_entry(*images, args);
      if (!entry || !entry->contains(field) || !(*entry)[field].is_string()) {
        return error_result("no " + field + " text for image " + args.value("image", std::string()));
      }
      return text_result((*entry)[field].get<std::string>());
    };
  } else if (kind == "keywords") {
    if (!spec.contains("vocabulary") || !spec["vocabulary"].is_array()) {
      throw InputError("keywords tool \"" + tool.name + "\" needs a vocabulary array");
    }
    std::vector<std::string> vocabulary;
    for (const auto& w : spec["vocabulary"]) vocabulary.push_back(detail::lower(w.get<std::string>()));
    tool.handler = [vocabulary](const json& args) {
      const auto text = detail::lower(script_subject(args));
      std::vector<std::pair<std::size_t, std::string>> hits;
      for (const auto& word : vocabulary) {
        std::size_t best = std::string::npos;
        for (const auto& form : {word, word + "s", word + "es"}) {
          std::size_t pos = 0;
          while ((pos = text.find(form, pos)) != std::string::npos) {
            const std::size_t end = pos + form.size();
            if ((pos == 0 || !detail::is_word_char(text[pos - 1])) &&
                (end >= text.size() || !detail::is_word_char(text[end]))) {
              best = std::min(best, pos);
              break;
            }
            ++pos;
          }
        }
        if (best != std::string::npos) hits.emplace_back(best, word);
      }
      std::stable_sort(hits.begin(), hits.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      json list = json::array();
      for (const auto& [_, word] : hits) list.push_back(word);
      return text_result(list.dump());
    };
  } else if (kind == "scripted") {
    auto backend = std::make_shared<ScriptedBackend>(ScriptedBackend::parse_script(spec.value("script", json())));
    tool.handler = [backend](const json& args) { return text_result(backend->answer(script_subject(args))); };
  } else if (kind == "failing") {
    const auto message = spec.value("message", std::string("scripted failure"));
    tool.handler = [message](const json&) { return error_result(message); };
  } else if (kind == "llm") {
    if (!factory) throw InputError("llm tool \"" + tool.name + "\" needs a backend factory");
    std::shared_ptr<ChatBackend> backend = factory(spec.value("backend", json::object()));
    const std::string tmpl(prompt_asset(spec.value("prompt_asset", std::string(to_string(*category)))));
    tool.handler = [backend, tmpl](const json& args) {
      ChatRequest request;
      request.user = fill_template(tmpl, {{"prompt", args.value("prompt", std::string())},
                                          {"task_type", args.value("task_type", std::string())},
                                          {"objects", joined_strings(args.value("objects", args.value("classes", json::array())))}});
      if (args.contains("image") && args["image"].is_string()) {
        request.image = ImageAttachment{args["image"].get<std::string>(), {}, {}};
      }
      try {
        return text_result(backend->complete(request));
      } catch (const Error& err) {
        return error_result(err.what());
      }
    };
  } else {
    throw InputError("manifest tool \"" + tool.name + "\" has unknown kind \"" + kind + "\"");
  }
  return tool;
}

}  // namespace

StubToolServer StubToolServer::from_manifest(const json& manifest, BackendFactory factory) {
  if (!manifest.is_object() || !manifest.contains("tools") || !manifest["tools"].is_array()) {
    throw InputError("manifest needs a \"tools\" array");
  }
  auto images = std::make_shared<const json>(manifest.value("images", json::object()));
  check_image_manifest(*images);
  std::vector<StubTool> tools;
  try {
    for (const auto& spec : manifest["tools"]) tools.push_back(make_manifest_tool(spec, images, factory));
  } catch (const json::exception& err) {
    throw InputError(std::string("malformed manifest: ") + err.what());
  }
  return StubToolServer(std::move(tools));
}

// ---------------------------------------------------------------------------

HttpStubHost::HttpStubHost(std::shared_ptr<const StubToolServer> server, const std::string& host, int port)
    : server_(std::move(server)), http_(std::make_unique<httplib::Server>()), host_(host) {
  auto srv = server_;
  http_->Post("/mcp", [srv](const httplib::Request& req, httplib::Response& res) {
    if (auto reply = srv->handle_text(req.body)) {
      res.set_content(*reply, "application/json");
    } else {
      res.status = 202;
    }
  });
  // httplib's default adds SO_REUSEPORT, which lets a second server share a
  // busy port silently.
  http_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (port == 0) {
    port_ = http_->bind_to_any_port(host);
  } else {
    port_ = http_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
}

HttpStubHost::~HttpStubHost() { stop(); }

std::string HttpStubHost::url() const {
  return "http://" + host_ + ":" + std::to_string(port_) + "/mcp";
}

void HttpStubHost::stop() {
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
}

PipeStubHost::PipeStubHost(std::shared_ptr<const StubToolServer> server) : server_(std::move(server)) {
  int to_server[2];
  int to_client[2];
  int stop[2];
  if (::pipe2(to_server, O_CLOEXEC) || ::pipe2(to_client, O_CLOEXEC) || ::pipe2(stop, O_CLOEXEC)) {
    throw Error("pipe creation failed");
  }
  server_read_ = to_server[0];
  client_write_ = to_server[1];
  client_read_ = to_client[0];
  server_write_ = to_client[1];
  stop_read_ = stop[0];
  stop_write_ = stop[1];
  thread_ = std::thread([this] { server_->serve_stream(server_read_, server_write_, stop_read_); });
}

PipeStubHost::~PipeStubHost() {
  write_all_fd(stop_write_, "x");
  if (thread_.joinable()) thread_.join();
  for (int fd : {server_read_, server_write_, stop_read_, stop_write_, client_read_, client_write_}) {
    if (fd >= 0) ::close(fd);
  }
}

std::unique_ptr<StreamTransport> PipeStubHost::take_transport() {
  if (client_read_ < 0) throw Error("transport already taken");
  auto t = std::make_unique<StreamTransport>(client_read_, client_write_);
  client_read_ = client_write_ = -1;
  return t;
}

}  // namespace aerialvp
