#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tomoprior/geometry.hpp"
#include "tomoprior/subsets.hpp"

namespace tomoprior {

/// Matrix-free parallel-beam system matrix.
///
/// Joseph's method: a ray is sampled once per pixel row when it is closer to
/// vertical (once per column otherwise), the image is interpolated linearly
/// between the two neighbouring pixel centers of that row (zero outside the
/// grid) and each sample is scaled by the arc length between rows. back()
/// applies the exact transpose of that operator, so <A x, y> == <x, A^T y>
/// up to rounding.
///
/// Pixel (r, c) is centered at x = (c - (N-1)/2) * h, y = ((N-1)/2 - r) * h.
/// The ray for angle theta and detector offset t is
/// t * (cos theta, sin theta) + s * (-sin theta, cos theta).
class ParallelProjector {
 public:
  ParallelProjector(ParallelGeometry geometry, std::size_t side,
                    double pixel_size = 1.0);

  const ParallelGeometry& geometry() const { return geometry_; }
  std::size_t side() const { return side_; }
  double pixel_size() const { return pixel_size_; }
  std::size_t num_pixels() const { return side_ * side_; }
  std::size_t num_rays() const { return geometry_.num_rays(); }

  /// sino = A image (every view).
  void forward(std::span<const double> image, std::span<double> sino) const;
  /// Rows of `sino` belonging to `views` are overwritten; others untouched.
  void forward(std::span<const double> image, std::span<const std::size_t> views,
               std::span<double> sino) const;

  /// image = A^T sino (every view).
  void back(std::span<const double> sino, std::span<double> image) const;
  /// image = A_w^T sino_w, reading only the rows of `views`.
  void back(std::span<const double> sino, std::span<const std::size_t> views,
            std::span<double> image) const;

  /// Visits every (pixel index, weight) pair of one ray in a fixed order.
  /// Pixels can repeat; the weights of a repeated pixel add.
  template <typename Visit>
  void trace(std::size_t view, std::size_t detector, Visit&& visit) const;

 private:
  void check_sizes(std::size_t image_size, std::size_t sino_size) const;

  ParallelGeometry geometry_;
  std::size_t side_;
  double pixel_size_;
  std::vector<double> cos_;
  std::vector<double> sin_;
  std::vector<std::size_t> all_views_;
};

Sinogram forward_project(const ImageGrid& image, const ParallelGeometry& geometry);
ImageGrid back_project(const Sinogram& sino, std::size_t side,
                       double pixel_size = 1.0);

/// Diagonal SART scalings. row_weights holds 1/|row sum| for every ray (the
/// row of a ray is the same in every subset). col_weights holds, per subset,
/// 1/|column sum| over that subset's rows only. Sums below 1e-9 pixel
/// lengths map to weight 0.
struct NormalizationWeights {
  std::size_t num_pixels = 0;
  std::vector<double> row_weights;
  std::vector<double> col_weights;  // num_subsets * num_pixels

  std::size_t num_subsets() const {
    return num_pixels == 0 ? 0 : col_weights.size() / num_pixels;
  }
  std::span<const double> col(std::size_t subset) const {
    return std::span<const double>(col_weights)
        .subspan(subset * num_pixels, num_pixels);
  }
};

/// Element-wise 1/|s|, with 0 where |s| <= floor.
std::vector<double> reciprocal_weights(std::span<const double> sums, double floor = 0.0);

NormalizationWeights normalization_weights(const ParallelProjector& projector,
                                           const SubsetPartition& partition);
NormalizationWeights normalization_weights(const ParallelGeometry& geometry,
                                           std::size_t side, double pixel_size,
                                           const SubsetPartition& partition);

// ---------------------------------------------------------------------------

template <typename Visit>
void ParallelProjector::trace(std::size_t view, std::size_t detector,
                              Visit&& visit) const {
  const auto n = static_cast<long>(side_);
  const double half = 0.5 * static_cast<double>(side_ - 1);
  const double t = (static_cast<double>(detector) -
                    0.5 * static_cast<double>(geometry_.num_detectors - 1)) *
                   geometry_.detector_spacing;
  const double c = cos_[view];
  const double s = sin_[view];

  // The ray runs along (-s, c). Step one pixel along the axis it is closest
  // to; the cross-axis position (in pixels) is affine in the step index.
  const bool by_row = std::abs(c) >= std::abs(s);
  double weight, origin, slope;
  if (by_row) {
    weight = pixel_size_ / std::abs(c);
    origin = half + t / (c * pixel_size_) - half * s / c;
    slope = s / c;
  } else {
    weight = pixel_size_ / std::abs(s);
    origin = half - t / (s * pixel_size_) - half * c / s;
    slope = c / s;
  }

  const double limit = static_cast<double>(n);
  for (long k = 0; k < n; ++k) {
    const double cross = origin + slope * static_cast<double>(k);
    if (cross <= -1.0 || cross >= limit) continue;
    const double fl = std::floor(cross);
    const double frac = cross - fl;
    const long j = static_cast<long>(fl);
    const long base = by_row ? k * n : k;
    const long stride = by_row ? 1 : n;
    if (j >= 0) visit(static_cast<std::size_t>(base + j * stride), weight * (1.0 - frac));
    if (j + 1 < n) visit(static_cast<std::size_t>(base + (j + 1) * stride), weight * frac);
  }
}

}  // namespace tomoprior
