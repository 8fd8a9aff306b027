#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tomoprior/geometry.hpp"
#include "tomoprior/sart.hpp"

namespace tomoprior {

enum class ScenarioKind { normal_dose, low_dose, sparse_view, limited_angle };

std::string to_string(ScenarioKind kind);

struct ScanScenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::normal_dose;
  double beam_intensity = 1e6;  // expected counts per unattenuated ray
  std::size_t num_views = 900;
  double angular_range = std::numbers::pi;

  ParallelGeometry geometry(std::size_t side, double pixel_size) const;
  void validate() const;
};

/// View density of the presets: `paper` samples 5 views per degree (900
/// over 180 degrees), `desk` samples 1.
enum class ScanScale { paper, desk };

ScanScale parse_scale(const std::string& name);

inline constexpr double kNormalDoseIntensity = 1e6;

/// Named presets: normal-dose, low-dose-1e6, low-dose-1e5, low-dose-1e4,
/// sparse-100, sparse-60, sparse-50, limited-160, limited-140, limited-120.
/// Throws InvalidInput for unknown names.
ScanScenario scenario_preset(const std::string& name, ScanScale scale = ScanScale::paper);
ScanScenario normal_dose(ScanScale scale = ScanScale::paper);

/// The six training scenarios: normal dose, two low-dose levels, two
/// sparse-view levels and 140-degree limited angle.
std::vector<ScanScenario> training_scenarios(ScanScale scale = ScanScale::paper);
/// The nine evaluation scenarios (three per degradation class).
std::vector<ScanScenario> test_scenarios(ScanScale scale = ScanScale::paper);

/// Beer-Lambert counts with Poisson noise: for each line integral p draws
/// c ~ Poisson(I0 exp(-p)) and returns ln(I0 / max(c, 1)). Element k uses
/// the stream keyed by (seed, k).
Sinogram apply_poisson_noise(const Sinogram& sino, double beam_intensity, std::uint64_t seed);

/// Single Poisson count for element `index`; exposed for statistics tests.
std::int64_t poisson_count(double mean, std::uint64_t seed, std::uint64_t index);

struct ScanPair {
  Sinogram clean;
  Sinogram degraded;
};

/// Clean: the reference (normal-dose) geometry with noise at its intensity.
/// Degraded: the scenario geometry with noise at the scenario intensity.
/// The clean stream depends only on `seed`, the degraded one on `seed` and
/// the scenario name.
ScanPair simulate_scenario(const ImageGrid& phantom, const ScanScenario& scenario,
                           std::uint64_t seed, const ScanScenario& reference = normal_dose());

struct PairedSample {
  ImageGrid phantom;  // rotated ground truth
  Sinogram clean_sino;
  Sinogram degraded_sino;
  ImageGrid clean_recon;
  ImageGrid degraded_recon;
  ScanScenario scenario;
  std::uint64_t seed = 0;
  std::size_t phantom_index = 0;
  int rotation = 0;  // quarter turns
};

struct DatasetOptions {
  ReconConfig recon;  // 20 iterations, 50 subsets, clamp
  ScanScenario reference = normal_dose();
};

/// Samples of one phantom: every rotation, then every scenario. The noise
/// seed is derived from (seed, phantom_index) and does not depend on the
/// rotation.
std::vector<PairedSample> paired_samples(const ImageGrid& phantom, std::size_t phantom_index,
                                         const std::vector<ScanScenario>& scenarios,
                                         std::size_t augment_rotations, std::uint64_t seed,
                                         const DatasetOptions& options = {});

/// |phantoms| x augment_rotations x |scenarios| samples, ordered by phantom,
/// then rotation, then scenario. augment_rotations must be 1, 2 or 4.
std::vector<PairedSample> build_paired_dataset(const std::vector<ImageGrid>& phantoms,
                                               const std::vector<ScanScenario>& scenarios,
                                               std::size_t augment_rotations,
                                               std::uint64_t seed,
                                               const DatasetOptions& options = {});

/// Quarter turns used for a given augmentation factor.
std::vector<int> rotation_set(std::size_t augment_rotations);

}  // namespace tomoprior
