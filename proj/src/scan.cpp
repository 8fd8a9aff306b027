#include "tomoprior/scan.hpp"

#include <cmath>
#include <iterator>
#include <random>

#include "tomoprior/error.hpp"
#include "tomoprior/phantom.hpp"
#include "tomoprior/projector.hpp"
#include "tomoprior/random.hpp"

namespace tomoprior {

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::normal_dose: return "normal-dose";
    case ScenarioKind::low_dose: return "low-dose";
    case ScenarioKind::sparse_view: return "sparse-view";
    case ScenarioKind::limited_angle: return "limited-angle";
  }
  return "normal-dose";
}

ParallelGeometry ScanScenario::geometry(std::size_t side, double pixel_size) const {
  return ParallelGeometry::for_image(side, pixel_size, num_views, angular_range);
}

void ScanScenario::validate() const {
  if (!(beam_intensity > 0.0) || !std::isfinite(beam_intensity))
    throw InvalidInput("scenario '" + name + "': beam intensity must be positive");
  if (num_views == 0) throw InvalidInput("scenario '" + name + "': needs at least one view");
  if (!(angular_range > 0.0) || angular_range > std::numbers::pi * (1.0 + 1e-12))
    throw InvalidInput("scenario '" + name + "': angular range must lie in (0, pi]");
}

ScanScale parse_scale(const std::string& name) {
  if (name == "paper") return ScanScale::paper;
  if (name == "desk") return ScanScale::desk;
  throw InvalidInput("unknown scan scale '" + name + "' (expected paper or desk)");
}

namespace {

std::size_t views_per_degree(ScanScale scale) { return scale == ScanScale::paper ? 5 : 1; }

}  // namespace

ScanScenario normal_dose(ScanScale scale) {
  return {"normal-dose", ScenarioKind::normal_dose, kNormalDoseIntensity,
          180 * views_per_degree(scale), std::numbers::pi};
}

ScanScenario scenario_preset(const std::string& name, ScanScale scale) {
  const ScanScenario normal = normal_dose(scale);
  if (name == "normal-dose") return normal;

  auto suffix = [&name](const std::string& prefix) -> std::string {
    return name.rfind(prefix, 0) == 0 ? name.substr(prefix.size()) : std::string{};
  };

  if (auto level = suffix("low-dose-"); !level.empty()) {
    if (level == "1e6" || level == "1e5" || level == "1e4") {
      ScanScenario s = normal;
      s.name = name;
      s.kind = ScenarioKind::low_dose;
      s.beam_intensity = std::stod(level);
      return s;
    }
  }
  if (auto views = suffix("sparse-"); !views.empty()) {
    if (views == "100" || views == "60" || views == "50") {
      ScanScenario s = normal;
      s.name = name;
      s.kind = ScenarioKind::sparse_view;
      s.num_views = std::stoul(views);
      return s;
    }
  }
  if (auto degrees = suffix("limited-"); !degrees.empty()) {
    if (degrees == "160" || degrees == "140" || degrees == "120") {
      const std::size_t deg = std::stoul(degrees);
      ScanScenario s = normal;
      s.name = name;
      s.kind = ScenarioKind::limited_angle;
      s.num_views = deg * views_per_degree(scale);
      s.angular_range = static_cast<double>(deg) * std::numbers::pi / 180.0;
      return s;
    }
  }
  throw InvalidInput("unknown scenario '" + name + "'");
}

std::vector<ScanScenario> training_scenarios(ScanScale scale) {
  std::vector<ScanScenario> out;
  for (const char* n : {"normal-dose", "low-dose-1e5", "low-dose-1e4", "sparse-100",
                        "sparse-50", "limited-140"})
    out.push_back(scenario_preset(n, scale));
  return out;
}

std::vector<ScanScenario> test_scenarios(ScanScale scale) {
  std::vector<ScanScenario> out;
  for (const char* n : {"limited-160", "limited-140", "limited-120", "low-dose-1e6",
                        "low-dose-1e5", "low-dose-1e4", "sparse-100", "sparse-60",
                        "sparse-50"})
    out.push_back(scenario_preset(n, scale));
  return out;
}

std::int64_t poisson_count(double mean, std::uint64_t seed, std::uint64_t index) {
  if (!(mean > 0.0)) return 0;
  CounterRng rng(seed, index);
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

Sinogram apply_poisson_noise(const Sinogram& sino, double beam_intensity,
                             std::uint64_t seed) {
  if (!(beam_intensity > 0.0) || !std::isfinite(beam_intensity))
    throw InvalidInput("apply_poisson_noise: beam intensity must be positive");
  const auto in = sino.values();
  for (double p : in)
    if (!(p >= 0.0) || !std::isfinite(p))
      throw InvalidInput("apply_poisson_noise: line integrals must be finite and >= 0");

  Sinogram out(sino.geometry());
  auto dst = out.values();
  const double log_i0 = std::log(beam_intensity);
  for (std::size_t k = 0; k < in.size(); ++k) {
    const std::int64_t c = poisson_count(beam_intensity * std::exp(-in[k]), seed, k);
    dst[k] = log_i0 - std::log(static_cast<double>(std::max<std::int64_t>(c, 1)));
  }
  return out;
}

ScanPair simulate_scenario(const ImageGrid& phantom, const ScanScenario& scenario,
                           std::uint64_t seed, const ScanScenario& reference) {
  scenario.validate();
  reference.validate();
  const std::size_t side = phantom.side();
  const double h = phantom.pixel_size();

  const Sinogram clean_lines = forward_project(phantom, reference.geometry(side, h));
  const Sinogram degraded_lines = forward_project(phantom, scenario.geometry(side, h));
  return {apply_poisson_noise(clean_lines, reference.beam_intensity, derive_seed(seed, 0)),
          apply_poisson_noise(degraded_lines, scenario.beam_intensity,
                              derive_seed(seed, fnv1a(scenario.name.c_str())))};
}

std::vector<int> rotation_set(std::size_t augment_rotations) {
  switch (augment_rotations) {
    case 1: return {0};
    case 2: return {0, 2};
    case 4: return {0, 1, 2, 3};
    default:
      throw InvalidInput("augment_rotations must be 1, 2 or 4, got " +
                         std::to_string(augment_rotations));
  }
}

std::vector<PairedSample> paired_samples(const ImageGrid& phantom, std::size_t phantom_index,
                                         const std::vector<ScanScenario>& scenarios,
                                         std::size_t augment_rotations, std::uint64_t seed,
                                         const DatasetOptions& options) {
  const auto rotations = rotation_set(augment_rotations);
  for (const auto& s : scenarios) s.validate();
  if (phantom.side() == 0 || phantom.size() != phantom.side() * phantom.side())
    throw InvalidInput("paired_samples: phantom " + std::to_string(phantom_index) +
                       " is not square");

  const std::uint64_t sample_seed = derive_seed(seed, phantom_index);
  std::vector<PairedSample> out;
  out.reserve(rotations.size() * scenarios.size());
  for (int turns : rotations) {
    const ImageGrid truth = rotate90(phantom, turns);
    const std::size_t side = truth.side();
    const double h = truth.pixel_size();
    ImageGrid clean_recon;
    for (std::size_t k = 0; k < scenarios.size(); ++k) {
      auto scan = simulate_scenario(truth, scenarios[k], sample_seed, options.reference);
      // The clean side is the same for every scenario of this rotation.
      if (k == 0) clean_recon = reconstruct(scan.clean, side, h, options.recon).image;
      ImageGrid degraded_recon = reconstruct(scan.degraded, side, h, options.recon).image;
      out.push_back({truth, std::move(scan.clean), std::move(scan.degraded), clean_recon,
                     std::move(degraded_recon), scenarios[k], sample_seed, phantom_index,
                     turns});
    }
  }
  return out;
}

std::vector<PairedSample> build_paired_dataset(const std::vector<ImageGrid>& phantoms,
                                               const std::vector<ScanScenario>& scenarios,
                                               std::size_t augment_rotations,
                                               std::uint64_t seed,
                                               const DatasetOptions& options) {
  rotation_set(augment_rotations);
  std::vector<PairedSample> out;
  for (std::size_t p = 0; p < phantoms.size(); ++p) {
    auto part = paired_samples(phantoms[p], p, scenarios, augment_rotations, seed, options);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace tomoprior
