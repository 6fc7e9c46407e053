#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "exwarp/grid.hpp"
#include "exwarp/scenegen.hpp"

namespace exwarp {

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

/// Writes an episode in the dataset directory layout:
///   manifest.json, frames/q%06d.png, gbuf/%06d.{mvd,mvb,stencil.png,normal.bin,wpos.bin}
/// The manifest records a CRC-32 for every file it references.
void save_dataset(const std::filesystem::path& dir, const Episode& episode);
Episode load_dataset(const std::filesystem::path& dir);

// Raster codecs used by the dataset writer; exposed for tools that dump intermediates.
std::vector<std::uint8_t> encode_png(const Frame& frame);
std::vector<std::uint8_t> encode_png(const Grid<std::uint8_t>& gray);
Frame decode_png_rgb(std::span<const std::uint8_t> bytes);
Grid<std::uint8_t> decode_png_gray(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_vec2_raster(const Grid<Vec2f>& raster);
Grid<Vec2f> decode_vec2_raster(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_vec3_raster(const Grid<Vec3f>& raster, const char magic[4]);
Grid<Vec3f> decode_vec3_raster(std::span<const std::uint8_t> bytes, const char magic[4]);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace exwarp
