#include "image_info.hpp"

#include <array>
#include <cstdint>
#include <fstream>
#include <vector>

namespace aerialvp::cli {

namespace {

std::uint32_t be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

std::uint16_t be16(const unsigned char* p) { return static_cast<std::uint16_t>((p[0] << 8) | p[1]); }

}  // namespace

std::optional<std::pair<int, int>> read_image_size(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::vector<unsigned char> head(64 * 1024);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));

  static constexpr std::array<unsigned char, 8> kPng = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (head.size() >= 24 && std::equal(kPng.begin(), kPng.end(), head.begin())) {
    return std::pair{static_cast<int>(be32(&head[16])), static_cast<int>(be32(&head[20]))};
  }
  if (head.size() >= 4 && head[0] == 0xFF && head[1] == 0xD8) {
    std::size_t i = 2;
    while (i + 9 < head.size()) {
      if (head[i] != 0xFF) return std::nullopt;
      const unsigned char marker = head[i + 1];
      if (marker == 0xFF) {
        ++i;
        continue;
      }
      const std::uint16_t length = be16(&head[i + 2]);
      // SOF0..SOF15 minus DHT(C4), JPG(C8), DAC(CC).
      if (marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 && marker != 0xCC) {
        return std::pair{static_cast<int>(be16(&head[i + 7])), static_cast<int>(be16(&head[i + 5]))};
      }
      i += 2 + length;
    }
  }
  return std::nullopt;
}

}  // namespace aerialvp::cli
