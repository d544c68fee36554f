#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ocsynth/image.hpp"

namespace ocs::io {

// PNG (8/16-bit) and JPEG decode; result is RGB or RGBA (alpha preserved).
Image read_image(const std::filesystem::path& path);
// Single-channel PNG; any nonzero sample is set.
Mask read_mask(const std::filesystem::path& path);
DepthImage read_depth(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const Image& img);
void write_mask_png(const std::filesystem::path& path, const Mask& mask);
void write_depth_png(const std::filesystem::path& path, const DepthImage& depth);

std::vector<std::uint8_t> encode_png(const Image& img);
std::vector<std::uint8_t> encode_mask_png(const Mask& mask);
Image decode_image(std::span<const std::uint8_t> bytes);
Mask decode_mask(std::span<const std::uint8_t> bytes);

// Reads width/height without keeping pixels.
std::pair<int, int> image_size(const std::filesystem::path& path);

}  // namespace ocs::io
