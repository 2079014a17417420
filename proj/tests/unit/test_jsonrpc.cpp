#include <doctest.h>

#include "aerialvp/jsonrpc.hpp"

using namespace aerialvp;
using nlohmann::json;

TEST_CASE("message builders") {
  CHECK(jsonrpc::make_request(3, "tools/list").dump() == R"({"id":3,"jsonrpc":"2.0","method":"tools/list"})");
  CHECK(jsonrpc::make_request(4, "tools/call", {{"name", "x"}, {"arguments", json::object()}}).dump() ==
        R"({"id":4,"jsonrpc":"2.0","method":"tools/call","params":{"arguments":{},"name":"x"}})");
  CHECK_FALSE(jsonrpc::make_notification("notifications/initialized").contains("id"));
  CHECK(jsonrpc::make_error(7, jsonrpc::kInvalidParams, "bad")["error"]["code"] == -32602);
  CHECK(jsonrpc::make_result(json("a"), json::object())["id"] == "a");
}

TEST_CASE("request validation") {
  CHECK(jsonrpc::validate_request(jsonrpc::make_request(1, "ping")).empty());
  CHECK(jsonrpc::validate_request(jsonrpc::make_notification("x")).empty());
  CHECK_FALSE(jsonrpc::validate_request(json{{"jsonrpc", "1.0"}, {"id", 1}, {"method", "ping"}}).empty());
  CHECK_FALSE(jsonrpc::validate_request(json{{"jsonrpc", "2.0"}, {"id", 1}}).empty());
  CHECK_FALSE(jsonrpc::validate_request(json{{"jsonrpc", "2.0"}, {"id", 1.5}, {"method", "x"}}).empty());
  CHECK_FALSE(jsonrpc::validate_request(json{{"jsonrpc", "2.0"}, {"id", 1}, {"method", "x"}, {"params", 3}}).empty());
  CHECK_FALSE(jsonrpc::validate_request(json::array()).empty());
}

TEST_CASE("response validation") {
  CHECK(jsonrpc::validate_response(jsonrpc::make_result(1, json::object()), json(1)).empty());
  CHECK_FALSE(jsonrpc::validate_response(jsonrpc::make_result(1, json::object()), json(2)).empty());
  CHECK(jsonrpc::validate_response(jsonrpc::make_error(nullptr, -32700, "parse error")).empty());
  json both = jsonrpc::make_result(1, json::object());
  both["error"] = {{"code", 1}, {"message", "m"}};
  CHECK_FALSE(jsonrpc::validate_response(both).empty());
  CHECK_FALSE(jsonrpc::validate_response(json{{"jsonrpc", "2.0"}, {"id", 1}}).empty());
  CHECK_FALSE(
      jsonrpc::validate_response(json{{"jsonrpc", "2.0"}, {"id", 1}, {"error", {{"code", "x"}, {"message", "m"}}}})
          .empty());
}
