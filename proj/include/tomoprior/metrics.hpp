#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tomoprior/geometry.hpp"

namespace tomoprior {

/// Returned by psnr() when the images are identical.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

double mse(const ImageGrid& x, const ImageGrid& y);

/// 10 log10(max(y)^2 / mse(x, y)); y is the ground truth.
double psnr(const ImageGrid& x, const ImageGrid& y);

struct SsimOptions {
  /// Stabilizers. Default to (0.01 L)^2 and (0.03 L)^2.
  std::optional<double> c1;
  std::optional<double> c2;
  /// Dynamic range L. Defaults to max(y).
  std::optional<double> dynamic_range;
  /// Mean of local SSIM over sliding windows instead of whole-image statistics.
  bool windowed = false;
  std::size_t window = 8;
};

/// Structural similarity from whole-image means, variances and covariance
/// (population moments), or its sliding-window mean when opted in.
double ssim(const ImageGrid& x, const ImageGrid& y, const SsimOptions& options = {});

/// One evaluated image.
struct ImageScore {
  double psnr = 0.0;
  double ssim = 0.0;
};

/// method -> scenario -> per-image scores. Every method must score the same
/// scenarios with the same number of images.
using ScoreTable = std::map<std::string, std::map<std::string, std::vector<ImageScore>>>;

struct ReportCell {
  double psnr_avg = 0.0;
  double ssim_avg = 0.0;
  double pct_diff_psnr = 0.0;  // vs reference value of the column
  double pct_diff_ssim = 0.0;
  bool flag_psnr = false;      // |difference| > 2 %
  bool flag_ssim = false;
  bool best_psnr = false;      // within 2 % of the column best
  bool best_ssim = false;
  bool flagged() const { return flag_psnr || flag_ssim; }
};

struct MetricsReport {
  std::vector<std::string> methods;    // row order
  std::vector<std::string> scenarios;  // column order, "average" appended
  std::string baseline;                // empty: compare against column best
  std::map<std::string, std::map<std::string, ReportCell>> cells;
};

inline constexpr const char* kAverageColumn = "average";
inline constexpr double kMeaningfulPercent = 2.0;

/// 100 * (value - reference) / reference.
double percent_difference(double value, double reference);

/// Averages per (method, scenario), adds an "average" column holding the
/// mean of the scenario averages, and computes percentage differences
/// against the column best (or against `baseline` when given).
/// `scenario_order` fixes the column order; empty means sorted by name.
MetricsReport build_report(const ScoreTable& results, const std::string& baseline = {},
                           const std::vector<std::string>& scenario_order = {});

/// Rows: method,scenario,psnr_avg,ssim_avg,pct_diff_psnr,pct_diff_ssim,flagged
std::string report_csv(const MetricsReport& report);

/// Text table: one row pair per method (PSNR over SSIM), differences in
/// parentheses, '*' on entries within 2 % of the column best.
std::string render_table(const MetricsReport& report, const std::string& title);

}  // namespace tomoprior
