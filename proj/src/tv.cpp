#include "tomoprior/tv.hpp"

#include <algorithm>
#include <cmath>

#include "tomoprior/error.hpp"

namespace tomoprior {

double tv_value(const ImageGrid& x, double eps) {
  const std::size_t n = x.side();
  const double e2 = eps * eps;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = x(i, j);
      const double dr = i + 1 < n ? x(i + 1, j) - v : 0.0;
      const double dc = j + 1 < n ? x(i, j + 1) - v : 0.0;
      total += std::sqrt(dr * dr + dc * dc + e2);
    }
  }
  return total;
}

std::vector<double> tv_gradient(const ImageGrid& x, double eps) {
  const std::size_t n = x.side();
  const double e2 = eps * eps;
  std::vector<double> g(x.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = x(i, j);
      const double dr = i + 1 < n ? x(i + 1, j) - v : 0.0;
      const double dc = j + 1 < n ? x(i, j + 1) - v : 0.0;
      const double mag = std::sqrt(dr * dr + dc * dc + e2);
      g[i * n + j] -= (dr + dc) / mag;
      if (i + 1 < n) g[(i + 1) * n + j] += dr / mag;
      if (j + 1 < n) g[i * n + j + 1] += dc / mag;
    }
  }
  return g;
}

double TvSchedule::next_beta() {
  const double beta = beta0 * std::pow(shrink, static_cast<double>(counter));
  ++counter;
  return beta;
}

ImageGrid tv_superiorize_step(ImageGrid x, std::size_t step_count,
                              TvSchedule& schedule, std::size_t max_retries,
                              std::vector<TvStepRecord>* log) {
  if (!(schedule.shrink > 0.0 && schedule.shrink < 1.0))
    throw InvalidInput("tv_superiorize_step: shrink must lie in (0, 1)");
  if (!(schedule.beta0 >= 0.0) || !std::isfinite(schedule.beta0))
    throw InvalidInput("tv_superiorize_step: beta0 must be finite and >= 0");

  ImageGrid trial = x;
  double current = tv_value(x);
  for (std::size_t step = 0; step < step_count; ++step) {
    std::vector<double> g = tv_gradient(x);
    double norm = 0.0;
    for (double gi : g) norm += gi * gi;
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    for (double& gi : g) gi /= norm;

    TvStepRecord record{current, current, 0.0};
    for (std::size_t attempt = 0; attempt < max_retries; ++attempt) {
      const double beta = schedule.next_beta();
      auto src = x.values();
      auto dst = trial.values();
      for (std::size_t k = 0; k < dst.size(); ++k)
        dst[k] = std::max(src[k] - beta * g[k], 0.0);
      const double candidate = tv_value(trial);
      if (candidate <= current) {
        std::swap(x, trial);
        record.tv_after = candidate;
        record.beta = beta;
        current = candidate;
        break;
      }
    }
    if (log) log->push_back(record);
  }
  return x;
}

TvSuperiorizer::TvSuperiorizer(TvParams params) : params_(params) {
  if (!(params.shrink > 0.0 && params.shrink < 1.0))
    throw InvalidInput("tv prior: shrink must lie in (0, 1)");
  if (!(params.beta0_fraction > 0.0))
    throw InvalidInput("tv prior: beta0 fraction must be positive");
  schedule_.shrink = params.shrink;
}

void TvSuperiorizer::apply(ImageGrid& x) {
  if (!started_) {
    const double peak = x.max_value();
    if (peak <= 0.0) return;  // nothing to regularize yet
    schedule_.beta0 = params_.beta0_fraction * peak;
    started_ = true;
  }
  x = tv_superiorize_step(std::move(x), params_.step_count, schedule_,
                          params_.max_retries, &log_);
}

}  // namespace tomoprior
