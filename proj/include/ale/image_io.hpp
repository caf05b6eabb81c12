#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ale/types.hpp"

namespace ale {

// 8-bit PNG input/output. Color inputs are reduced to grayscale with the
// integer luma weights 299/587/114; masks treat any nonzero sample as
// foreground. Writing is deterministic: fixed zlib settings, no timestamps.

Image load_image_png(const std::string& path);
MaskImage load_mask_png(const std::string& path);

void save_image_png(const std::string& path, const Image& img);
void save_mask_png(const std::string& path, const MaskImage& mask);

std::vector<std::uint8_t> encode_image_png(const Image& img);
std::vector<std::uint8_t> encode_mask_png(const MaskImage& mask);
Image decode_image_png(const std::vector<std::uint8_t>& bytes);
MaskImage decode_mask_png(const std::vector<std::uint8_t>& bytes);

}  // namespace ale
