#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

// Minimal JSON-RPC 2.0 helpers for the MCP tools subset.
namespace aerialvp::jsonrpc {

using json = nlohmann::json;

inline constexpr int kParseError = -32700;
inline constexpr int kInvalidRequest = -32600;
inline constexpr int kMethodNotFound = -32601;
inline constexpr int kInvalidParams = -32602;
inline constexpr int kInternalError = -32603;

// A null params value is omitted from the message.
json make_request(std::int64_t id, const std::string& method, json params = nullptr);
json make_notification(const std::string& method, json params = nullptr);
json make_result(const json& id, json result);
json make_error(const json& id, int code, const std::string& message);

/// Empty string when `message` is a well-formed request or notification,
/// otherwise a short description of the first violation.
std::string validate_request(const json& message);

/// Empty string when `message` is a well-formed response. With `expected_id`,
/// also checks that the id is echoed.
std::string validate_response(const json& message,
                              const std::optional<json>& expected_id = std::nullopt);

}  // namespace aerialvp::jsonrpc
