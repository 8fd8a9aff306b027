#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace tomoprior {

/// Parallel-beam acquisition. View i sits at
/// angle_start + i * angular_range / num_views, so a half-turn scan never
/// repeats its first view. Detectors are centered on the rotation axis.
struct ParallelGeometry {
  std::size_t num_views = 1;
  double angle_start = 0.0;
  double angular_range = std::numbers::pi;
  std::size_t num_detectors = 1;
  double detector_spacing = 1.0;

  double view_angle(std::size_t view) const;
  std::size_t num_rays() const { return num_views * num_detectors; }

  /// Throws InvalidInput unless the invariants hold.
  void validate() const;

  /// Geometry covering the full image circle of a side x side grid:
  /// ceil(1.5 * side) detectors spaced one pixel apart.
  static ParallelGeometry for_image(std::size_t side, double pixel_size,
                                    std::size_t num_views,
                                    double angular_range = std::numbers::pi,
                                    double angle_start = 0.0);

  friend bool operator==(const ParallelGeometry&,
                         const ParallelGeometry&) = default;
};

std::size_t default_detector_count(std::size_t side);

/// Square attenuation image, row-major, row 0 at the top.
class ImageGrid {
 public:
  ImageGrid() = default;
  explicit ImageGrid(std::size_t side, double pixel_size = 1.0);
  ImageGrid(std::size_t side, double pixel_size, std::vector<double> values);

  std::size_t side() const { return side_; }
  double pixel_size() const { return pixel_size_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& storage() { return values_; }

  double& operator()(std::size_t row, std::size_t col) {
    return values_[row * side_ + col];
  }
  double operator()(std::size_t row, std::size_t col) const {
    return values_[row * side_ + col];
  }

  bool all_finite() const;
  double max_value() const;

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

 private:
  std::size_t side_ = 0;
  double pixel_size_ = 1.0;
  std::vector<double> values_;
};

/// Line integrals, row-major by view.
class Sinogram {
 public:
  Sinogram() = default;
  explicit Sinogram(ParallelGeometry geometry);
  Sinogram(ParallelGeometry geometry, std::vector<double> values);

  const ParallelGeometry& geometry() const { return geometry_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> view(std::size_t v) const {
    return std::span<const double>(values_).subspan(
        v * geometry_.num_detectors, geometry_.num_detectors);
  }

  double& operator()(std::size_t view, std::size_t det) {
    return values_[view * geometry_.num_detectors + det];
  }
  double operator()(std::size_t view, std::size_t det) const {
    return values_[view * geometry_.num_detectors + det];
  }

  bool all_finite() const;

  friend bool operator==(const Sinogram&, const Sinogram&) = default;

 private:
  ParallelGeometry geometry_;
  std::vector<double> values_;
};

}  // namespace tomoprior
