#include "aerialvp/backends.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "aerialvp/error.hpp"
#include "aerialvp/transport.hpp"
#include "text_util.hpp"

namespace aerialvp {

using nlohmann::json;

std::string ChatRequest::matchable_text() const {
  if (system && !system->empty()) return *system + "\n" + user;
  return user;
}

void validate(const ChatRequest& request) {
  if (detail::trim(request.user).empty()) throw InputError("chat request has empty user text");
  if (!(request.temperature >= 0.0)) throw InputError("temperature must be non-negative");
}

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

std::string media_type_for(const std::string& path) {
  const auto ext = detail::lower(std::filesystem::path(path).extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  return "application/octet-stream";
}

std::string image_url(const ImageAttachment& image) {
  if (!image.inline_bytes.empty()) {
    const auto type = image.media_type.empty() ? std::string("image/png") : image.media_type;
    return "data:" + type + ";base64," + httplib::detail::base64_encode(image.inline_bytes);
  }
  const auto& ref = image.reference;
  if (detail::starts_with(ref, "http://") || detail::starts_with(ref, "https://") ||
      detail::starts_with(ref, "data:")) {
    return ref;
  }
  std::ifstream in(ref, std::ios::binary);
  if (!in) throw BackendError("cannot read image attachment " + ref);
  std::ostringstream bytes;
  bytes << in.rdbuf();
  const auto type = image.media_type.empty() ? media_type_for(ref) : image.media_type;
  return "data:" + type + ";base64," + httplib::detail::base64_encode(bytes.str());
}

}  // namespace

HttpBackendConfig HttpBackendConfig::from_env(std::string_view role) {
  std::string upper = detail::lower(role);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  const auto scoped = [&](const char* key) { return "AERIALVP_" + upper + "_" + key; };
  HttpBackendConfig cfg;
  cfg.api_base = env_or(scoped("API_BASE").c_str(), env_or("AERIALVP_API_BASE", ""));
  cfg.api_key = env_or(scoped("API_KEY").c_str(), env_or("AERIALVP_API_KEY", ""));
  cfg.model = env_or(scoped("MODEL").c_str(), env_or("AERIALVP_MODEL", ""));
  return cfg;
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (config_.api_base.empty()) throw InputError("HTTP backend needs an API base URL");
  if (config_.model.empty()) throw InputError("HTTP backend needs a model identifier");
  auto base = config_.api_base;
  while (!base.empty() && base.back() == '/') base.pop_back();
  std::tie(origin_, path_) = split_url(base + "/chat/completions");
}

json HttpChatBackend::build_payload(const ChatRequest& request) const {
  json messages = json::array();
  if (request.system && !request.system->empty()) {
    messages.push_back({{"role", "system"}, {"content", *request.system}});
  }
  if (request.image) {
    messages.push_back(
        {{"role", "user"},
         {"content", json::array({{{"type", "text"}, {"text", request.user}},
                                  {{"type", "image_url"},
                                   {"image_url", {{"url", image_url(*request.image)}}}}})}});
  } else {
    messages.push_back({{"role", "user"}, {"content", request.user}});
  }
  json payload = {{"model", request.model.empty() ? config_.model : request.model},
                  {"messages", std::move(messages)},
                  {"temperature", request.temperature},
                  {"max_tokens", request.max_tokens}};
  if (request.seed) payload["seed"] = *request.seed;
  return payload;
}

std::string HttpChatBackend::extract_text(const std::string& body) {
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded()) throw BackendError("chat response is not JSON");
  const auto* choices = parsed.contains("choices") ? &parsed["choices"] : nullptr;
  if (!choices || !choices->is_array() || choices->empty()) {
    throw BackendError("chat response has no choices");
  }
  const auto& message = (*choices)[0].value("message", json::object());
  const auto& content = message.contains("content") ? message["content"] : json();
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {
    std::string out;
    for (const auto& part : content) {
      if (part.is_object() && part.value("type", "") == "text") out += part.value("text", "");
    }
    return out;
  }
  throw BackendError("chat response has no message content");
}

std::string HttpChatBackend::complete(const ChatRequest& request) {
  validate(request);
  const auto body = build_payload(request).dump();
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  int last_status = 0;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt) std::this_thread::sleep_for(config_.backoff);
    httplib::Client client(origin_);
    client.set_connection_timeout(config_.connect_timeout);
    client.set_read_timeout(config_.read_timeout);
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "request to " + origin_ + path_ + " failed: " + httplib::to_string(res.error());
      last_status = 0;
      continue;
    }
    if (res->status >= 200 && res->status < 300) return extract_text(res->body);
    last_status = res->status;
    last_error = "chat backend returned HTTP " + std::to_string(res->status);
  }
  throw BackendError(last_error, last_status);
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> entries, std::string model_name)
    : entries_(std::move(entries)), model_name_(std::move(model_name)) {
  bool has_default = false;
  for (const auto& e : entries_) {
    if (e.matcher == ScriptEntry::Matcher::Default) has_default = true;
    if (e.matcher == ScriptEntry::Matcher::Regex) {
      try {
        compiled_.emplace_back(std::regex(e.pattern, std::regex::ECMAScript | std::regex::icase));
      } catch (const std::regex_error& err) {
        throw InputError("invalid script regex \"" + e.pattern + "\": " + err.what());
      }
    } else {
      compiled_.emplace_back(std::nullopt);
    }
  }
  if (!has_default) throw InputError("script table needs a catch-all default entry");
}

std::vector<ScriptEntry> ScriptedBackend::parse_script(const json& script) {
  if (!script.is_array()) throw InputError("script must be a JSON array");
  std::vector<ScriptEntry> entries;
  for (const auto& item : script) {
    if (!item.is_object()) throw InputError("script entry must be an object");
    ScriptEntry e;
    if (item.contains("default")) {
      e.matcher = ScriptEntry::Matcher::Default;
      e.response = item["default"].get<std::string>();
    } else if (item.contains("contains")) {
      e.matcher = ScriptEntry::Matcher::Substring;
      e.pattern = item["contains"].get<std::string>();
      e.response = item.at("response").get<std::string>();
    } else if (item.contains("regex")) {
      e.matcher = ScriptEntry::Matcher::Regex;
      e.pattern = item["regex"].get<std::string>();
      e.response = item.at("response").get<std::string>();
    } else {
      throw InputError("script entry needs one of contains/regex/default");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

const std::string& ScriptedBackend::answer(std::string_view text) const {
  const std::string haystack = detail::lower(text);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    switch (e.matcher) {
      case ScriptEntry::Matcher::Default:
        return e.response;
      case ScriptEntry::Matcher::Substring:
        if (haystack.find(detail::lower(e.pattern)) != std::string::npos) return e.response;
        break;
      case ScriptEntry::Matcher::Regex:
        if (std::regex_search(text.begin(), text.end(), *compiled_[i])) return e.response;
        break;
    }
  }
  // Unreachable: the constructor guarantees a default entry.
  throw Error("script table exhausted");
}

std::string ScriptedBackend::complete(const ChatRequest& request) {
  validate(request);
  return answer(request.matchable_text());
}

EchoCoordinatesBackend::EchoCoordinatesBackend(std::string fallback)
    : fallback_(std::move(fallback)) {}

std::string EchoCoordinatesBackend::complete(const ChatRequest& request) {
  validate(request);
  static const std::regex line_re(
      R"((^|\n)[A-Za-z][\w\- ]*?\d+:\s*(\[\s*-?[\d.]+\s*,\s*-?[\d.]+\s*,\s*-?[\d.]+\s*,\s*-?[\d.]+\s*\]))");
  std::smatch m;
  if (std::regex_search(request.user, m, line_re)) return m[2].str();
  return fallback_;
}

std::unique_ptr<ChatBackend> make_backend(const json& spec, std::string_view role) {
  const auto kind = spec.value("kind", std::string("http"));
  if (kind == "scripted") {
    return std::make_unique<ScriptedBackend>(ScriptedBackend::parse_script(spec.at("script")),
                                             spec.value("model", std::string("scripted")));
  }
  if (kind == "echo-coordinates") {
    return std::make_unique<EchoCoordinatesBackend>(
        spec.value("fallback", std::string(EchoCoordinatesBackend::kDefaultFallback)));
  }
  if (kind == "http") {
    auto cfg = HttpBackendConfig::from_env(spec.value("role", std::string(role)));
    if (spec.contains("api_base")) cfg.api_base = spec["api_base"].get<std::string>();
    if (spec.contains("model")) cfg.model = spec["model"].get<std::string>();
    if (spec.contains("retries")) cfg.retries = spec["retries"].get<int>();
    return std::make_unique<HttpChatBackend>(std::move(cfg));
  }
  throw InputError("unknown backend kind \"" + kind + "\"");
}

}  // namespace aerialvp
