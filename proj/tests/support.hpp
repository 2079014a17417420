// Shared fixtures and independent oracles for the test binaries.
#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <nlohmann/json.hpp>

#include "aerialvp/eval.hpp"
#include "aerialvp/stub_server.hpp"
#include "aerialvp/tool_repository.hpp"
#include "aerialvp/transport.hpp"

namespace testsupport {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// IoU by counting unit cells; integer corners only.

inline double cell_iou(std::array<int, 4> a, std::array<int, 4> b) {
  const int lo_x = std::min(a[0], b[0]), hi_x = std::max(a[2], b[2]);
  const int lo_y = std::min(a[1], b[1]), hi_y = std::max(a[3], b[3]);
  long inter = 0, uni = 0;
  for (int x = lo_x; x < hi_x; ++x) {
    for (int y = lo_y; y < hi_y; ++y) {
      const bool in_a = a[0] <= x && x < a[2] && a[1] <= y && y < a[3];
      const bool in_b = b[0] <= x && x < b[2] && b[1] <= y && y < b[3];
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline std::array<int, 4> random_int_box(std::mt19937& rng, int limit) {
  std::uniform_int_distribution<int> d(0, limit);
  int xa = d(rng), xb = d(rng), ya = d(rng), yb = d(rng);
  return {std::min(xa, xb), std::min(ya, yb), std::max(xa, xb), std::max(ya, yb)};
}

// ---------------------------------------------------------------------------
// JSON-RPC 2.0 message checker, written against the protocol text rather than
// the library's own validator.

class RpcChecker {
 public:
  aerialvp::MessageObserver observer() {
    return [this](bool outgoing, const std::string& raw) { check(outgoing, raw); };
  }

  void check(bool outgoing, const std::string& raw) {
    std::lock_guard lock(mutex_);
    ++messages_;
    const json msg = json::parse(raw, nullptr, false);
    if (msg.is_discarded() || !msg.is_object()) return fail("not a JSON object: " + raw);
    if (msg.value("jsonrpc", "") != "2.0") return fail("jsonrpc != 2.0: " + raw);
    if (outgoing) {
      if (!msg.contains("method") || !msg["method"].is_string()) return fail("request without method: " + raw);
      if (msg.contains("params") && !msg["params"].is_object() && !msg["params"].is_array()) {
        return fail("params neither object nor array: " + raw);
      }
      if (msg.contains("id")) {
        if (!msg["id"].is_number_integer() && !msg["id"].is_string()) return fail("bad request id: " + raw);
        pending_.push_back(msg["id"]);
      }
      return;
    }
    if (msg.contains("result") == msg.contains("error")) return fail("needs exactly one of result/error: " + raw);
    if (msg.contains("error")) {
      const auto& e = msg["error"];
      if (!e.is_object() || !e.contains("code") || !e["code"].is_number_integer() || !e.contains("message") ||
          !e["message"].is_string()) {
        return fail("malformed error object: " + raw);
      }
    }
    if (!msg.contains("id")) return fail("response without id: " + raw);
    if (pending_.empty() || pending_.front() != msg["id"]) return fail("id not echoed: " + raw);
    pending_.erase(pending_.begin());
  }

  std::vector<std::string> violations() const {
    std::lock_guard lock(mutex_);
    return violations_;
  }
  std::size_t messages() const {
    std::lock_guard lock(mutex_);
    return messages_;
  }

 private:
  void fail(std::string why) { violations_.push_back(std::move(why)); }

  mutable std::mutex mutex_;
  std::vector<json> pending_;
  std::vector<std::string> violations_;
  std::size_t messages_ = 0;
};

// ---------------------------------------------------------------------------
// Stub tool manifests.

inline json analysis_tools() {
  return json::array({
      {{"name", "task_type_analysis_rules"},
       {"kind", "scripted"},
       {"script", json::array({{{"regex", "\\b(locate|find|where is)\\b"}, {"response", "Visual Grounding"}},
                               {{"regex", "true or false"}, {"response", "Visual Reasoning"}},
                               {{"default", "Visual Question Answering"}}})}},
      {{"name", "task_focused_objects_analysis_keywords"},
       {"kind", "keywords"},
       {"vocabulary", {"car", "van", "truck", "bus", "ship", "bridge", "building", "tree", "road", "person"}}},
      {{"name", "enhancement_task_planning_rules"},
       {"kind", "scripted"},
       {"script", json::array({{{"contains", "Visual Grounding"},
                                {"response", "spatial position description, semantic description, "
                                             "spatial relationship description"}},
                               {{"default", "semantic description, spatial relationship description"}}})}},
  });
}

inline json full_manifest(json images) {
  json tools = analysis_tools();
  tools.push_back({{"name", "spatial_position_description_detector"}, {"kind", "detector"}});
  tools.push_back({{"name", "semantic_description_captions"}, {"kind", "describer"}});
  tools.push_back({{"name", "spatial_relationship_description_relations"}, {"kind", "relator"}});
  return {{"tools", tools}, {"images", std::move(images)}};
}

inline fs::path fixtures_dir() { return fs::path(AERIALVP_TEST_FIXTURES); }

inline json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  return json::parse(in);
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

/// Planted-box grounding set: every image holds one target of the asked
/// label plus distractors of other labels.
struct GroundingSet {
  json manifest;
  std::vector<aerialvp::Sample> samples;
  std::string jsonl;
};

inline GroundingSet make_grounding_set(int n, unsigned seed = 42) {
  static const std::vector<std::string> labels = {"car", "van", "truck", "bus", "ship"};
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> coord(8, 400);
  std::uniform_int_distribution<int> extent(12, 90);
  GroundingSet set;
  json images = json::object();
  for (int i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "syn_%03d", i);
    const std::string image = std::string(id) + ".png";
    const auto& target = labels[i % labels.size()];
    json objects = json::array();
    std::array<int, 4> gold{};
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& label = labels[(i + k) % labels.size()];
      const int x = coord(rng), y = coord(rng);
      const std::array<int, 4> box{x, y, x + extent(rng), y + extent(rng)};
      if (k == 0) gold = box;
      objects.push_back({{"label", label}, {"box", box}, {"confidence", 0.9}});
    }
    images[image] = {{"objects", objects},
                     {"semantic", "A " + target + " seen from above in a parking area."},
                     {"relationship", "The " + target + " is near the other vehicles."}};
    const json line = {{"id", id},
                       {"task", "vg"},
                       {"image", image},
                       {"width", 512},
                       {"height", 512},
                       {"instruction", "Locate the " + target + " in this aerial image."},
                       {"gold", gold}};
    set.jsonl += line.dump() + "\n";
  }
  set.manifest = full_manifest(images);
  std::istringstream in(set.jsonl);
  set.samples = aerialvp::parse_dataset(in, "synthetic");
  return set;
}

// ---------------------------------------------------------------------------
// In-process stub server reached over HTTP or pipes.

struct StubRig {
  std::shared_ptr<const aerialvp::StubToolServer> server;
  std::unique_ptr<aerialvp::HttpStubHost> http;
  std::unique_ptr<aerialvp::PipeStubHost> pipe;
  aerialvp::Endpoint endpoint;
  aerialvp::McpClient client;
  aerialvp::ToolRegistry registry;

  StubRig(const json& manifest, aerialvp::Endpoint::Kind kind,
          aerialvp::McpClient::Options options = {}, aerialvp::MessageObserver observer = {})
      : server(std::make_shared<const aerialvp::StubToolServer>(aerialvp::StubToolServer::from_manifest(manifest))),
        client(options) {
    if (observer) client.set_observer(std::move(observer));
    if (kind == aerialvp::Endpoint::Kind::Http) {
      http = std::make_unique<aerialvp::HttpStubHost>(server, "127.0.0.1", 0);
      endpoint = {aerialvp::Endpoint::Kind::Http, http->url()};
    } else {
      pipe = std::make_unique<aerialvp::PipeStubHost>(server);
      endpoint = {aerialvp::Endpoint::Kind::Stdio, "in-process"};
      client.attach(endpoint, std::shared_ptr<aerialvp::Transport>(pipe->take_transport()));
    }
    for (auto& t : client.list_remote_tools(endpoint)) registry.add(std::move(t));
  }
};

// ---------------------------------------------------------------------------
// Child processes.

struct ProcessResult {
  int exit_code = -1;
  std::string output;
};

/// Runs `command` through the shell, capturing stdout and stderr together.
inline ProcessResult run_command(const std::string& command) {
  ProcessResult r;
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return r;
}

inline std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "aerialvp-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

}  // namespace testsupport
