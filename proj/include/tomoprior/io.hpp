#pragma once

#include <filesystem>
#include <string>

#include "tomoprior/geometry.hpp"

namespace tomoprior {

// Binary containers, all fields little-endian:
//   TPI1 | u32 rows | u32 cols | f32 pixel_size | f32 values (row-major)
//   TPS1 | u32 num_detectors | f32 detector_spacing | u32 num_views |
//          f32 angle_start | f32 angular_range | f32 values (row-major by view)
// Values are stored as f32, so a round trip rounds to single precision.

void write_image(const ImageGrid& image, const std::filesystem::path& path);
ImageGrid read_image(const std::filesystem::path& path);

void write_sinogram(const Sinogram& sino, const std::filesystem::path& path);
Sinogram read_sinogram(const std::filesystem::path& path);

/// Headerless little-endian f32 square image (side inferred from the size).
ImageGrid read_raw_image(const std::filesystem::path& path, double pixel_size = 1.0);

/// 16-bit grayscale PNG mapping [low, high] to [0, 65535]. When high <= low
/// the window spans the image's own min and max.
void write_png(const ImageGrid& image, const std::filesystem::path& path,
               double low = 0.0, double high = 0.0);

/// Writes `bytes` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace tomoprior
