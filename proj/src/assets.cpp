#include "aerialvp/assets.hpp"

#include <utility>

#include "aerialvp/error.hpp"

namespace aerialvp {

namespace {

#include "prompt_assets.inc"

}  // namespace

std::string_view prompt_asset(std::string_view name) {
  for (const auto& [key, text] : kPromptAssets) {
    if (key == name) return text;
  }
  throw InputError("unknown prompt asset \"" + std::string(name) + "\"");
}

std::vector<std::string> prompt_asset_names() {
  std::vector<std::string> names;
  for (const auto& [key, _] : kPromptAssets) names.emplace_back(key);
  return names;
}

std::string fill_template(std::string_view text, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const auto close = text.find('}', i + 1);
      if (close != std::string_view::npos) {
        const auto key = std::string(text.substr(i + 1, close - i - 1));
        if (auto it = values.find(key); it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += text[i++];
  }
  return out;
}

}  // namespace aerialvp
