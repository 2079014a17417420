#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace aerialvp {

/// Versioned prompt text compiled in from assets/prompts/<name>.txt.
/// Throws InputError for an unknown name.
std::string_view prompt_asset(std::string_view name);
std::vector<std::string> prompt_asset_names();

/// Replaces every "{key}" with its value; unknown placeholders stay as they are.
std::string fill_template(std::string_view text, const std::map<std::string, std::string>& values);

}  // namespace aerialvp
