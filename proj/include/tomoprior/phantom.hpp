#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tomoprior/geometry.hpp"

namespace tomoprior {

/// Ellipse in normalized coordinates ([-1, 1] across the grid, y up).
struct Ellipse {
  double value;
  double axis_x;
  double axis_y;
  double center_x;
  double center_y;
  double angle;  // radians, counter-clockwise
};

struct PhantomOptions {
  /// Attenuation of unit-valued tissue per unit length. Zero selects
  /// 4 / (side * pixel_size), which keeps the longest line integrals near 3.
  double attenuation = 0.0;
  /// Sub-pixel samples per axis used to average each pixel.
  std::size_t supersample = 2;
};

/// Rasterizes additive ellipses; negative sums clamp to 0.
ImageGrid rasterize_ellipses(const std::vector<Ellipse>& ellipses, std::size_t side,
                             double pixel_size = 1.0, const PhantomOptions& options = {});

/// Modified (higher-contrast) Shepp-Logan head phantom.
ImageGrid shepp_logan(std::size_t side, double pixel_size = 1.0,
                      const PhantomOptions& options = {});

/// Random Shepp-Logan-style phantom: a body ellipse holding 4 to 9 smaller
/// ellipses of varying contrast, all inside the inscribed circle.
ImageGrid random_phantom(std::size_t side, std::uint64_t seed, double pixel_size = 1.0,
                         const PhantomOptions& options = {});

std::vector<ImageGrid> random_phantoms(std::size_t count, std::size_t side,
                                       std::uint64_t seed, double pixel_size = 1.0);

/// Counter-clockwise rotation by quarter_turns * 90 degrees.
ImageGrid rotate90(const ImageGrid& image, int quarter_turns);

}  // namespace tomoprior
