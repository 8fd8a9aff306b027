#include "tomoprior/projector.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "tomoprior/error.hpp"

namespace tomoprior {

ParallelProjector::ParallelProjector(ParallelGeometry geometry, std::size_t side,
                                     double pixel_size)
    : geometry_(geometry), side_(side), pixel_size_(pixel_size) {
  geometry_.validate();
  if (side == 0) throw InvalidInput("projector: image side must be >= 1");
  if (!(pixel_size > 0.0) || !std::isfinite(pixel_size))
    throw InvalidInput("projector: pixel_size must be positive and finite");

  cos_.resize(geometry_.num_views);
  sin_.resize(geometry_.num_views);
  for (std::size_t v = 0; v < geometry_.num_views; ++v) {
    const double theta = geometry_.view_angle(v);
    cos_[v] = std::cos(theta);
    sin_[v] = std::sin(theta);
  }
  all_views_.resize(geometry_.num_views);
  std::iota(all_views_.begin(), all_views_.end(), std::size_t{0});
}

void ParallelProjector::check_sizes(std::size_t image_size,
                                    std::size_t sino_size) const {
  if (image_size != num_pixels())
    throw InvalidInput("projector: image has " + std::to_string(image_size) +
                       " values, expected " + std::to_string(num_pixels()));
  if (sino_size != num_rays())
    throw InvalidInput("projector: sinogram has " + std::to_string(sino_size) +
                       " values, expected " + std::to_string(num_rays()));
}

void ParallelProjector::forward(std::span<const double> image,
                                std::span<double> sino) const {
  forward(image, all_views_, sino);
}

void ParallelProjector::forward(std::span<const double> image,
                                std::span<const std::size_t> views,
                                std::span<double> sino) const {
  check_sizes(image.size(), sino.size());
  const std::size_t nd = geometry_.num_detectors;
  for (std::size_t view : views) {
    for (std::size_t d = 0; d < nd; ++d) {
      double acc = 0.0;
      trace(view, d, [&](std::size_t pixel, double w) { acc += w * image[pixel]; });
      sino[view * nd + d] = acc;
    }
  }
}

void ParallelProjector::back(std::span<const double> sino,
                             std::span<double> image) const {
  back(sino, all_views_, image);
}

void ParallelProjector::back(std::span<const double> sino,
                             std::span<const std::size_t> views,
                             std::span<double> image) const {
  check_sizes(image.size(), sino.size());
  std::fill(image.begin(), image.end(), 0.0);
  const std::size_t nd = geometry_.num_detectors;
  for (std::size_t view : views) {
    for (std::size_t d = 0; d < nd; ++d) {
      const double value = sino[view * nd + d];
      if (value == 0.0) continue;
      trace(view, d, [&](std::size_t pixel, double w) { image[pixel] += w * value; });
    }
  }
}

Sinogram forward_project(const ImageGrid& image, const ParallelGeometry& geometry) {
  if (!image.all_finite())
    throw InvalidInput("forward_project: image contains non-finite values");
  ParallelProjector projector(geometry, image.side(), image.pixel_size());
  Sinogram sino(geometry);
  projector.forward(image.values(), sino.values());
  return sino;
}

ImageGrid back_project(const Sinogram& sino, std::size_t side, double pixel_size) {
  if (!sino.all_finite())
    throw InvalidInput("back_project: sinogram contains non-finite values");
  ParallelProjector projector(sino.geometry(), side, pixel_size);
  ImageGrid image(side, pixel_size);
  projector.back(sino.values(), image.values());
  return image;
}

std::vector<double> reciprocal_weights(std::span<const double> sums, double floor) {
  std::vector<double> out(sums.size(), 0.0);
  for (std::size_t i = 0; i < sums.size(); ++i) {
    const double s = std::abs(sums[i]);
    out[i] = s > floor ? 1.0 / s : 0.0;
  }
  return out;
}

NormalizationWeights normalization_weights(const ParallelProjector& projector,
                                           const SubsetPartition& partition) {
  if (partition.num_views != projector.geometry().num_views)
    throw InvalidInput("normalization_weights: partition covers " +
                       std::to_string(partition.num_views) +
                       " views, geometry has " +
                       std::to_string(projector.geometry().num_views));

  // Intersection weights are nonnegative, so |A| sums are A applied to ones.
  NormalizationWeights out;
  out.num_pixels = projector.num_pixels();
  // Anything smaller is round-off from a ray grazing the grid edge.
  const double floor = 1e-9 * projector.pixel_size();

  const std::vector<double> ones_image(projector.num_pixels(), 1.0);
  std::vector<double> row_sums(projector.num_rays(), 0.0);
  projector.forward(ones_image, row_sums);
  out.row_weights = reciprocal_weights(row_sums, floor);

  const std::vector<double> ones_sino(projector.num_rays(), 1.0);
  std::vector<double> col_sums(projector.num_pixels(), 0.0);
  out.col_weights.reserve(partition.num_subsets() * projector.num_pixels());
  for (const auto& views : partition.subsets) {
    projector.back(ones_sino, views, col_sums);
    const auto w = reciprocal_weights(col_sums, floor);
    out.col_weights.insert(out.col_weights.end(), w.begin(), w.end());
  }
  return out;
}

NormalizationWeights normalization_weights(const ParallelGeometry& geometry,
                                           std::size_t side, double pixel_size,
                                           const SubsetPartition& partition) {
  return normalization_weights(ParallelProjector(geometry, side, pixel_size),
                               partition);
}

}  // namespace tomoprior
