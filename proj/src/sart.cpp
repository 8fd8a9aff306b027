#include "tomoprior/sart.hpp"

#include <algorithm>
#include <cmath>

#include "tomoprior/error.hpp"
#include "tomoprior/metrics.hpp"
#include "tomoprior/weights_io.hpp"

namespace tomoprior {

std::string to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::clamp: return "clamp";
    case PriorKind::tv_superiorize: return "tv-superiorize";
    case PriorKind::generator: return "generator";
  }
  return "clamp";
}

PriorKind parse_prior(const std::string& name) {
  if (name == "clamp") return PriorKind::clamp;
  if (name == "tv-superiorize" || name == "tv") return PriorKind::tv_superiorize;
  if (name == "generator") return PriorKind::generator;
  throw InvalidInput("unknown prior '" + name + "'");
}

void ReconConfig::validate(std::size_t num_views) const {
  if (iterations < 1) throw InvalidInput("recon: iterations must be >= 1");
  if (num_subsets < 1 || num_subsets > num_views)
    throw InvalidInput("recon: subsets must lie in [1, " + std::to_string(num_views) +
                       "], got " + std::to_string(num_subsets));
  if (!(relaxation > 0.0 && relaxation <= 2.0))
    throw InvalidInput("recon: relaxation must lie in (0, 2]");
  if (prior_cadence < 1) throw InvalidInput("recon: prior cadence must be >= 1");
  if (prior == PriorKind::generator && !generator && weights_path.empty())
    throw InvalidInput("recon: the generator prior needs a weight file");
}

ImageGrid project_feasible(ImageGrid x) {
  project_feasible_inplace(x);
  return x;
}

void project_feasible_inplace(ImageGrid& x) {
  for (double& v : x.values()) v = std::max(v, 0.0);
}

void TvPrior::apply(ImageGrid& x) {
  project_feasible_inplace(x);
  tv_.apply(x);
}

GeneratorPrior::GeneratorPrior(std::shared_ptr<const GeneratorWeights> weights)
    : weights_(std::move(weights)) {
  if (!weights_) throw InvalidInput("generator prior: no weights");
}

void GeneratorPrior::apply(ImageGrid& x) {
  x = generator_forward(x, *weights_);
  project_feasible_inplace(x);
}

std::unique_ptr<ReconPrior> make_prior(const ReconConfig& config) {
  switch (config.prior) {
    case PriorKind::clamp: return std::make_unique<ClampPrior>();
    case PriorKind::tv_superiorize: return std::make_unique<TvPrior>(config.tv);
    case PriorKind::generator: {
      auto weights = config.generator;
      if (!weights)
        weights = std::make_shared<const GeneratorWeights>(load_weights(config.weights_path));
      return std::make_unique<GeneratorPrior>(std::move(weights));
    }
  }
  return std::make_unique<ClampPrior>();
}

namespace {

/// x += relaxation * D_w A_w^T M_w (b_w - A_w x), using caller scratch.
void block_update_into(ImageGrid& x, const Sinogram& sino,
                       const ParallelProjector& projector,
                       const SubsetPartition& partition, std::size_t subset,
                       const NormalizationWeights& weights, double relaxation,
                       std::vector<double>& sino_buf, std::vector<double>& image_buf) {
  if (subset >= partition.num_subsets())
    throw InvalidInput("sart: subset index out of range");
  if (weights.num_subsets() != partition.num_subsets() ||
      weights.num_pixels != projector.num_pixels())
    throw InvalidInput("sart: normalization weights do not match the partition");
  if (!(sino.geometry() == projector.geometry()))
    throw InvalidInput("sart: sinogram geometry does not match the projector");
  if (x.side() != projector.side())
    throw InvalidInput("sart: image side does not match the projector");

  const auto& views = partition.subsets[subset];
  sino_buf.assign(projector.num_rays(), 0.0);
  image_buf.assign(projector.num_pixels(), 0.0);
  projector.forward(x.values(), views, sino_buf);

  const std::size_t nd = projector.geometry().num_detectors;
  const auto b = sino.values();
  for (std::size_t view : views) {
    for (std::size_t d = 0; d < nd; ++d) {
      const std::size_t j = view * nd + d;
      sino_buf[j] = weights.row_weights[j] * (b[j] - sino_buf[j]);
    }
  }
  projector.back(sino_buf, views, image_buf);

  const auto col = weights.col(subset);
  auto xv = x.values();
  for (std::size_t k = 0; k < xv.size(); ++k) xv[k] += relaxation * col[k] * image_buf[k];
}

}  // namespace

ImageGrid sart_block_update(const ImageGrid& x, const Sinogram& sino,
                            const ParallelProjector& projector,
                            const SubsetPartition& partition, std::size_t subset,
                            const NormalizationWeights& weights, double relaxation) {
  ImageGrid out = x;
  std::vector<double> sino_buf, image_buf;
  block_update_into(out, sino, projector, partition, subset, weights, relaxation,
                    sino_buf, image_buf);
  return out;
}

SartSolver::SartSolver(const ParallelGeometry& geometry, std::size_t side,
                       double pixel_size, std::size_t num_subsets)
    : projector_(geometry, side, pixel_size),
      partition_(partition_subsets(geometry.num_views, num_subsets)),
      weights_(normalization_weights(projector_, partition_)) {}

void SartSolver::block_update(ImageGrid& x, const Sinogram& sino, std::size_t subset,
                              double relaxation) const {
  block_update_into(x, sino, projector_, partition_, subset, weights_, relaxation,
                    sino_scratch_, image_scratch_);
}

void SartSolver::full_iteration(ImageGrid& x, const Sinogram& sino, double relaxation,
                                ReconPrior* prior) const {
  for (std::size_t w = 0; w < partition_.num_subsets(); ++w)
    block_update(x, sino, w, relaxation);
  if (prior)
    prior->apply(x);
  else
    project_feasible_inplace(x);
}

double SartSolver::relative_residual(const ImageGrid& x, const Sinogram& sino) const {
  sino_scratch_.assign(projector_.num_rays(), 0.0);
  projector_.forward(x.values(), sino_scratch_);
  const auto b = sino.values();
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const double r = sino_scratch_[j] - b[j];
    num += r * r;
    den += b[j] * b[j];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

ImageGrid sart_full_iteration(const ImageGrid& x, const Sinogram& sino,
                              const SartSolver& solver, double relaxation,
                              ReconPrior& prior) {
  ImageGrid out = x;
  solver.full_iteration(out, sino, relaxation, &prior);
  return out;
}

ReconResult reconstruct(const Sinogram& sino, std::size_t side, double pixel_size,
                        const ReconConfig& config, const ImageGrid* ground_truth) {
  config.validate(sino.geometry().num_views);
  if (!sino.all_finite())
    throw InvalidInput("reconstruct: sinogram contains non-finite values");
  if (ground_truth && ground_truth->side() != side)
    throw InvalidInput("reconstruct: ground truth side does not match the grid");

  std::unique_ptr<ReconPrior> prior;
  if (config.prior == PriorKind::generator) {
    std::shared_ptr<const GeneratorWeights> w = config.generator;
    if (!w) w = std::make_shared<const GeneratorWeights>(load_weights(config.weights_path));
    if (w->input_side != side)
      throw InvalidInput("reconstruct: weights expect " + std::to_string(w->input_side) +
                         "x" + std::to_string(w->input_side) + " images, sinogram grid is " +
                         std::to_string(side) + "x" + std::to_string(side));
    prior = std::make_unique<GeneratorPrior>(std::move(w));
  } else {
    prior = make_prior(config);
  }

  SartSolver solver(sino.geometry(), side, pixel_size, config.num_subsets);
  ClampPrior clamp;

  ReconResult result{ImageGrid(side, pixel_size), {}, {}};
  for (std::size_t it = 0; it < config.iterations; ++it) {
    const bool use_prior = (it + 1) % config.prior_cadence == 0;
    solver.full_iteration(result.image, sino, config.relaxation,
                          use_prior ? prior.get() : &clamp);
    result.residuals.push_back(solver.relative_residual(result.image, sino));
    if (ground_truth) result.psnr.push_back(psnr(result.image, *ground_truth));
  }
  return result;
}

}  // namespace tomoprior
