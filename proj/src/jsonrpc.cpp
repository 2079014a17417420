#include "aerialvp/jsonrpc.hpp"

namespace aerialvp::jsonrpc {

json make_request(std::int64_t id, const std::string& method, json params) {
  json msg = {{"jsonrpc", "2.0"}, {"id", id}, {"method", method}};
  if (!params.is_null()) msg["params"] = std::move(params);
  return msg;
}

json make_notification(const std::string& method, json params) {
  json msg = {{"jsonrpc", "2.0"}, {"method", method}};
  if (!params.is_null()) msg["params"] = std::move(params);
  return msg;
}

json make_result(const json& id, json result) {
  return {{"jsonrpc", "2.0"}, {"id", id}, {"result", std::move(result)}};
}

json make_error(const json& id, int code, const std::string& message) {
  return {{"jsonrpc", "2.0"}, {"id", id}, {"error", {{"code", code}, {"message", message}}}};
}

namespace {

bool valid_id(const json& id, bool allow_null) {
  return id.is_string() || id.is_number_integer() || (allow_null && id.is_null());
}

}  // namespace

std::string validate_request(const json& message) {
  if (!message.is_object()) return "message is not an object";
  if (!message.contains("jsonrpc") || message["jsonrpc"] != "2.0") return "jsonrpc must be \"2.0\"";
  if (!message.contains("method") || !message["method"].is_string()) return "method must be a string";
  if (message.contains("id") && !valid_id(message["id"], false)) return "id must be a string or integer";
  if (message.contains("params") && !message["params"].is_object() && !message["params"].is_array()) {
    return "params must be structured";
  }
  for (const auto& [key, _] : message.items()) {
    if (key != "jsonrpc" && key != "id" && key != "method" && key != "params") {
      return "unexpected member \"" + key + "\"";
    }
  }
  return {};
}

std::string validate_response(const json& message, const std::optional<json>& expected_id) {
  if (!message.is_object()) return "message is not an object";
  if (!message.contains("jsonrpc") || message["jsonrpc"] != "2.0") return "jsonrpc must be \"2.0\"";
  if (!message.contains("id") || !valid_id(message["id"], true)) return "missing or invalid id";
  const bool has_result = message.contains("result");
  const bool has_error = message.contains("error");
  if (has_result == has_error) return "exactly one of result/error required";
  if (has_error) {
    const auto& err = message["error"];
    if (!err.is_object() || !err.contains("code") || !err["code"].is_number_integer() ||
        !err.contains("message") || !err["message"].is_string()) {
      return "malformed error object";
    }
  }
  for (const auto& [key, _] : message.items()) {
    if (key != "jsonrpc" && key != "id" && key != "result" && key != "error") {
      return "unexpected member \"" + key + "\"";
    }
  }
  if (expected_id && message["id"] != *expected_id) return "id not echoed";
  return {};
}

}  // namespace aerialvp::jsonrpc
