#pragma once

#include <filesystem>
#include <optional>
#include <utility>

namespace aerialvp::cli {

/// Pixel size from a PNG or JPEG header; nullopt for other formats.
std::optional<std::pair<int, int>> read_image_size(const std::filesystem::path& path);

}  // namespace aerialvp::cli
