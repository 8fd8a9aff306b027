#include "tomoprior/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tomoprior/error.hpp"

namespace tomoprior {

double ParallelGeometry::view_angle(std::size_t view) const {
  return angle_start +
         static_cast<double>(view) * angular_range / static_cast<double>(num_views);
}

void ParallelGeometry::validate() const {
  if (num_views == 0) throw InvalidInput("geometry: num_views must be >= 1");
  if (num_detectors == 0)
    throw InvalidInput("geometry: num_detectors must be >= 1");
  if (!std::isfinite(angle_start))
    throw InvalidInput("geometry: angle_start is not finite");
  if (!(angular_range > 0.0) || angular_range > std::numbers::pi * (1.0 + 1e-12))
    throw InvalidInput("geometry: angular_range must lie in (0, pi], got " +
                       std::to_string(angular_range));
  if (!(detector_spacing > 0.0) || !std::isfinite(detector_spacing))
    throw InvalidInput("geometry: detector_spacing must be positive");
}

std::size_t default_detector_count(std::size_t side) { return (3 * side + 1) / 2; }

ParallelGeometry ParallelGeometry::for_image(std::size_t side, double pixel_size,
                                             std::size_t num_views,
                                             double angular_range,
                                             double angle_start) {
  ParallelGeometry g;
  g.num_views = num_views;
  g.angle_start = angle_start;
  g.angular_range = angular_range;
  g.num_detectors = default_detector_count(side);
  g.detector_spacing = pixel_size;
  return g;
}

ImageGrid::ImageGrid(std::size_t side, double pixel_size)
    : side_(side), pixel_size_(pixel_size), values_(side * side, 0.0) {
  if (side == 0) throw InvalidInput("image: side must be >= 1");
  if (!(pixel_size > 0.0) || !std::isfinite(pixel_size))
    throw InvalidInput("image: pixel_size must be positive and finite");
}

ImageGrid::ImageGrid(std::size_t side, double pixel_size,
                     std::vector<double> values)
    : ImageGrid(side, pixel_size) {
  if (values.size() != side * side)
    throw InvalidInput("image: expected " + std::to_string(side * side) +
                       " values, got " + std::to_string(values.size()));
  values_ = std::move(values);
}

bool ImageGrid::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

double ImageGrid::max_value() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

Sinogram::Sinogram(ParallelGeometry geometry)
    : geometry_(geometry), values_(geometry.num_rays(), 0.0) {
  geometry_.validate();
}

Sinogram::Sinogram(ParallelGeometry geometry, std::vector<double> values)
    : Sinogram(geometry) {
  if (values.size() != geometry_.num_rays())
    throw InvalidInput("sinogram: expected " +
                       std::to_string(geometry_.num_rays()) + " values, got " +
                       std::to_string(values.size()));
  values_ = std::move(values);
}

bool Sinogram::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace tomoprior
