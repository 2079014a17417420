#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace aerialvp {

struct ImageAttachment {
  /// Local path or URL. Local files are inlined as data URLs by the HTTP backend.
  std::string reference;
  /// Raw bytes when the caller already holds them; takes precedence over reference.
  std::string inline_bytes;
  std::string media_type;
};

struct ChatRequest {
  std::optional<std::string> system;
  std::string user;
  std::optional<ImageAttachment> image;
  double temperature = 0.0;
  int max_tokens = 1024;
  /// Overrides the backend's configured model when non-empty.
  std::string model;
  std::optional<std::uint64_t> seed;

  /// System and user text joined the way scripts see them.
  std::string matchable_text() const;
};

/// Throws InputError on empty user text or negative temperature.
void validate(const ChatRequest& request);

/// Chat-completion access shared by the engine, the tool selector and the VLM.
/// Implementations must be safe to call concurrently.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  /// Model identifier used in reports.
  virtual std::string name() const = 0;
};

struct HttpBackendConfig {
  /// e.g. "https://api.openai.com/v1"; "/chat/completions" is appended.
  std::string api_base;
  std::string api_key;
  std::string model;
  int retries = 1;
  std::chrono::milliseconds backoff{200};
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds read_timeout{120000};

  /// Reads AERIALVP_<ROLE>_API_BASE / _API_KEY / _MODEL, falling back to the
  /// role-less AERIALVP_API_BASE / AERIALVP_API_KEY / AERIALVP_MODEL.
  static HttpBackendConfig from_env(std::string_view role);
};

/// OpenAI-compatible chat-completions client.
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpBackendConfig config);
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return config_.model; }

  /// Request body as sent on the wire.
  nlohmann::json build_payload(const ChatRequest& request) const;
  /// First choice's message text; throws BackendError on a malformed body.
  static std::string extract_text(const std::string& body);

 private:
  HttpBackendConfig config_;
  std::string origin_;
  std::string path_;
};

struct ScriptEntry {
  enum class Matcher { Substring, Regex, Default };
  Matcher matcher = Matcher::Default;
  std::string pattern;
  std::string response;
};

/// Deterministic backend answering from an ordered table; first match wins.
class ScriptedBackend final : public ChatBackend {
 public:
  /// Throws InputError when no Default entry exists or a regex is invalid.
  explicit ScriptedBackend(std::vector<ScriptEntry> entries, std::string model_name = "scripted");

  /// Accepts [{"contains": s, "response": r} | {"regex": s, "response": r} |
  /// {"default": r}, ...].
  static std::vector<ScriptEntry> parse_script(const nlohmann::json& script);

  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return model_name_; }

  /// Script lookup on raw text.
  const std::string& answer(std::string_view text) const;

 private:
  std::vector<ScriptEntry> entries_;
  std::vector<std::optional<std::regex>> compiled_;
  std::string model_name_;
};

/// Stub VLM: answers with the first "<label><k>: [x1,y1,x2,y2]" coordinate
/// list found in the prompt, or with a fixed fallback when none is present.
class EchoCoordinatesBackend final : public ChatBackend {
 public:
  static constexpr std::string_view kDefaultFallback =
      "I have no information about where the target is.";

  explicit EchoCoordinatesBackend(std::string fallback = std::string(kDefaultFallback));
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "echo-coordinates"; }

 private:
  std::string fallback_;
};

/// Builds a backend from {"kind": "http"|"scripted"|"echo-coordinates", ...}.
/// Http backends read their endpoint from the environment under `role`.
std::unique_ptr<ChatBackend> make_backend(const nlohmann::json& spec, std::string_view role);

}  // namespace aerialvp
