#pragma once

#include <cstddef>
#include <vector>

#include "tomoprior/geometry.hpp"

namespace tomoprior {

inline constexpr double kTvSmoothing = 1e-8;

/// Isotropic total variation with forward differences and replicated
/// boundary: sum over pixels of sqrt(dr^2 + dc^2 + eps^2).
double tv_value(const ImageGrid& x, double eps = kTvSmoothing);

/// Gradient of tv_value with respect to every pixel.
std::vector<double> tv_gradient(const ImageGrid& x, double eps = kTvSmoothing);

struct TvParams {
  std::size_t step_count = 10;
  /// beta0 = beta0_fraction * max(x) at the first application.
  double beta0_fraction = 0.2;
  double shrink = 0.995;
  /// Attempts per step before it is skipped.
  std::size_t max_retries = 64;
};

/// Shared between calls: step t of the whole run uses beta0 * shrink^t.
struct TvSchedule {
  double beta0 = 0.0;
  double shrink = 0.995;
  std::size_t counter = 0;

  double next_beta();
};

struct TvStepRecord {
  double tv_before = 0.0;
  double tv_after = 0.0;
  double beta = 0.0;  // 0 when the step was skipped
};

/// Performs `step_count` normalized TV descent perturbations
/// x <- max(x - beta * g / |g|, 0). A trial that raises TV is discarded and
/// retried with the next (smaller) beta. Returns x unchanged at |g| = 0.
ImageGrid tv_superiorize_step(ImageGrid x, std::size_t step_count,
                              TvSchedule& schedule, std::size_t max_retries = 64,
                              std::vector<TvStepRecord>* log = nullptr);

/// Stateful wrapper used as the SART-TV prior.
class TvSuperiorizer {
 public:
  explicit TvSuperiorizer(TvParams params = {});

  void apply(ImageGrid& x);

  const TvSchedule& schedule() const { return schedule_; }
  const std::vector<TvStepRecord>& log() const { return log_; }

 private:
  TvParams params_;
  TvSchedule schedule_;
  bool started_ = false;
  std::vector<TvStepRecord> log_;
};

}  // namespace tomoprior
