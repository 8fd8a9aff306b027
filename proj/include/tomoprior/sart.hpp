#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tomoprior/generator.hpp"
#include "tomoprior/geometry.hpp"
#include "tomoprior/projector.hpp"
#include "tomoprior/subsets.hpp"
#include "tomoprior/tv.hpp"

namespace tomoprior {

enum class PriorKind { clamp, tv_superiorize, generator };

std::string to_string(PriorKind kind);
PriorKind parse_prior(const std::string& name);

struct ReconConfig {
  std::size_t iterations = 20;
  std::size_t num_subsets = 50;
  double relaxation = 1.0;
  PriorKind prior = PriorKind::clamp;
  /// The prior runs after iterations k, 2k, ...; other iterations only clamp.
  std::size_t prior_cadence = 1;
  TvParams tv;
  std::filesystem::path weights_path;
  /// Preloaded generator; takes precedence over weights_path.
  std::shared_ptr<const GeneratorWeights> generator;

  /// Throws InvalidInput unless the invariants hold for `num_views`.
  void validate(std::size_t num_views) const;
};

/// Element-wise max(x, 0).
ImageGrid project_feasible(ImageGrid x);
void project_feasible_inplace(ImageGrid& x);

/// Per-iteration prior applied after the SART sweep.
class ReconPrior {
 public:
  virtual ~ReconPrior() = default;
  virtual void apply(ImageGrid& x) = 0;
};

class ClampPrior final : public ReconPrior {
 public:
  void apply(ImageGrid& x) override { project_feasible_inplace(x); }
};

class TvPrior final : public ReconPrior {
 public:
  explicit TvPrior(TvParams params) : tv_(params) {}
  void apply(ImageGrid& x) override;
  const TvSuperiorizer& superiorizer() const { return tv_; }

 private:
  TvSuperiorizer tv_;
};

/// max(G(x), 0): the generator stands in for the feasibility projection and
/// the clamp keeps the iterate nonnegative.
class GeneratorPrior final : public ReconPrior {
 public:
  explicit GeneratorPrior(std::shared_ptr<const GeneratorWeights> weights);
  void apply(ImageGrid& x) override;

 private:
  std::shared_ptr<const GeneratorWeights> weights_;
};

std::unique_ptr<ReconPrior> make_prior(const ReconConfig& config);

/// x - relaxation * D_w A_w^T M_w (A_w x - b_w) for subset `subset`.
ImageGrid sart_block_update(const ImageGrid& x, const Sinogram& sino,
                            const ParallelProjector& projector,
                            const SubsetPartition& partition, std::size_t subset,
                            const NormalizationWeights& weights, double relaxation = 1.0);

/// Caches the projector, partition and normalization weights of one
/// (geometry, grid, subset count) and runs SART sweeps against them.
class SartSolver {
 public:
  SartSolver(const ParallelGeometry& geometry, std::size_t side, double pixel_size,
             std::size_t num_subsets);

  const ParallelProjector& projector() const { return projector_; }
  const SubsetPartition& partition() const { return partition_; }
  const NormalizationWeights& weights() const { return weights_; }

  void block_update(ImageGrid& x, const Sinogram& sino, std::size_t subset,
                    double relaxation) const;

  /// Sequential block updates over every subset, then `prior`
  /// (or the clamp when `prior` is null).
  void full_iteration(ImageGrid& x, const Sinogram& sino, double relaxation,
                      ReconPrior* prior) const;

  /// |A x - b| / |b| (absolute when b = 0).
  double relative_residual(const ImageGrid& x, const Sinogram& sino) const;

 private:
  ParallelProjector projector_;
  SubsetPartition partition_;
  NormalizationWeights weights_;
  mutable std::vector<double> sino_scratch_;
  mutable std::vector<double> image_scratch_;
};

ImageGrid sart_full_iteration(const ImageGrid& x, const Sinogram& sino,
                              const SartSolver& solver, double relaxation,
                              ReconPrior& prior);

struct ReconResult {
  ImageGrid image;
  std::vector<double> residuals;  // after each iteration
  std::vector<double> psnr;       // empty without ground truth
};

/// Runs config.iterations full iterations from the zero image.
ReconResult reconstruct(const Sinogram& sino, std::size_t side, double pixel_size,
                        const ReconConfig& config,
                        const ImageGrid* ground_truth = nullptr);

}  // namespace tomoprior
