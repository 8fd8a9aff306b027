#include "tomoprior/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "tomoprior/error.hpp"

namespace tomoprior {

namespace {

void check_same_shape(const ImageGrid& x, const ImageGrid& y, const char* op) {
  if (x.side() != y.side())
    throw InvalidInput(std::string(op) + ": image sides differ (" +
                       std::to_string(x.side()) + " vs " + std::to_string(y.side()) + ")");
}

struct Moments {
  double mean_x = 0.0, mean_y = 0.0, var_x = 0.0, var_y = 0.0, cov = 0.0;
};

Moments window_moments(const ImageGrid& x, const ImageGrid& y, std::size_t r0,
                       std::size_t c0, std::size_t rows, std::size_t cols) {
  Moments m;
  const double count = static_cast<double>(rows * cols);
  for (std::size_t r = r0; r < r0 + rows; ++r)
    for (std::size_t c = c0; c < c0 + cols; ++c) {
      m.mean_x += x(r, c);
      m.mean_y += y(r, c);
    }
  m.mean_x /= count;
  m.mean_y /= count;
  for (std::size_t r = r0; r < r0 + rows; ++r)
    for (std::size_t c = c0; c < c0 + cols; ++c) {
      const double dx = x(r, c) - m.mean_x;
      const double dy = y(r, c) - m.mean_y;
      m.var_x += dx * dx;
      m.var_y += dy * dy;
      m.cov += dx * dy;
    }
  m.var_x /= count;
  m.var_y /= count;
  m.cov /= count;
  return m;
}

double ssim_from(const Moments& m, double c1, double c2) {
  return ((2.0 * m.mean_x * m.mean_y + c1) * (2.0 * m.cov + c2)) /
         ((m.mean_x * m.mean_x + m.mean_y * m.mean_y + c1) * (m.var_x + m.var_y + c2));
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

double mse(const ImageGrid& x, const ImageGrid& y) {
  check_same_shape(x, y, "mse");
  const auto a = x.values();
  const auto b = y.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

double psnr(const ImageGrid& x, const ImageGrid& y) {
  check_same_shape(x, y, "psnr");
  const double peak = y.max_value();
  const auto yv = y.values();
  if (std::all_of(yv.begin(), yv.end(), [](double v) { return v == 0.0; }))
    throw InvalidInput("psnr: ground truth image is all zero");
  const double err = mse(x, y);
  if (err == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(peak * peak / err);
}

double ssim(const ImageGrid& x, const ImageGrid& y, const SsimOptions& options) {
  check_same_shape(x, y, "ssim");
  const double range = options.dynamic_range.value_or(y.max_value());
  const double c1 = options.c1.value_or((0.01 * range) * (0.01 * range));
  const double c2 = options.c2.value_or((0.03 * range) * (0.03 * range));
  const std::size_t n = x.side();

  if (!options.windowed || options.window == 0 || options.window >= n)
    return ssim_from(window_moments(x, y, 0, 0, n, n), c1, c2);

  const std::size_t w = options.window;
  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t r = 0; r + w <= n; ++r)
    for (std::size_t c = 0; c + w <= n; ++c) {
      total += ssim_from(window_moments(x, y, r, c, w, w), c1, c2);
      ++windows;
    }
  return total / static_cast<double>(windows);
}

double percent_difference(double value, double reference) {
  if (reference == 0.0) return value == 0.0 ? 0.0 : (value > 0 ? 100.0 : -100.0);
  return 100.0 * (value - reference) / std::abs(reference);
}

MetricsReport build_report(const ScoreTable& results, const std::string& baseline,
                           const std::vector<std::string>& scenario_order) {
  MetricsReport report;
  report.baseline = baseline;
  if (results.empty()) return report;

  std::set<std::string> scenario_set;
  for (const auto& [method, per_scenario] : results)
    for (const auto& [scenario, scores] : per_scenario) scenario_set.insert(scenario);

  for (const auto& [method, per_scenario] : results) {
    report.methods.push_back(method);
    if (per_scenario.size() != scenario_set.size())
      throw InvalidInput("build_report: method '" + method +
                         "' does not cover every scenario");
  }
  if (scenario_order.empty()) {
    report.scenarios.assign(scenario_set.begin(), scenario_set.end());
  } else {
    if (std::set<std::string>(scenario_order.begin(), scenario_order.end()) != scenario_set ||
        scenario_order.size() != scenario_set.size())
      throw InvalidInput("build_report: scenario order does not match the results");
    report.scenarios = scenario_order;
  }
  if (!baseline.empty() && !results.contains(baseline))
    throw InvalidInput("build_report: unknown baseline method '" + baseline + "'");

  for (const auto& scenario : report.scenarios) {
    const std::size_t expected = results.begin()->second.at(scenario).size();
    for (const auto& [method, per_scenario] : results) {
      const auto& scores = per_scenario.at(scenario);
      if (scores.size() != expected || scores.empty())
        throw InvalidInput("build_report: method '" + method + "' has " +
                           std::to_string(scores.size()) + " images for scenario '" +
                           scenario + "', expected " + std::to_string(expected));
      ReportCell cell;
      for (const auto& s : scores) {
        cell.psnr_avg += s.psnr;
        cell.ssim_avg += s.ssim;
      }
      cell.psnr_avg /= static_cast<double>(scores.size());
      cell.ssim_avg /= static_cast<double>(scores.size());
      report.cells[method][scenario] = cell;
    }
  }

  for (const auto& method : report.methods) {
    ReportCell avg;
    for (const auto& scenario : report.scenarios) {
      avg.psnr_avg += report.cells[method][scenario].psnr_avg;
      avg.ssim_avg += report.cells[method][scenario].ssim_avg;
    }
    avg.psnr_avg /= static_cast<double>(report.scenarios.size());
    avg.ssim_avg /= static_cast<double>(report.scenarios.size());
    report.cells[method][kAverageColumn] = avg;
  }
  report.scenarios.push_back(kAverageColumn);

  for (const auto& scenario : report.scenarios) {
    double best_p = -std::numeric_limits<double>::infinity();
    double best_s = -std::numeric_limits<double>::infinity();
    for (const auto& method : report.methods) {
      best_p = std::max(best_p, report.cells[method][scenario].psnr_avg);
      best_s = std::max(best_s, report.cells[method][scenario].ssim_avg);
    }
    const double ref_p = baseline.empty() ? best_p : report.cells[baseline][scenario].psnr_avg;
    const double ref_s = baseline.empty() ? best_s : report.cells[baseline][scenario].ssim_avg;
    for (const auto& method : report.methods) {
      auto& cell = report.cells[method][scenario];
      cell.pct_diff_psnr = percent_difference(cell.psnr_avg, ref_p);
      cell.pct_diff_ssim = percent_difference(cell.ssim_avg, ref_s);
      cell.flag_psnr = std::abs(cell.pct_diff_psnr) > kMeaningfulPercent;
      cell.flag_ssim = std::abs(cell.pct_diff_ssim) > kMeaningfulPercent;
      cell.best_psnr = std::abs(percent_difference(cell.psnr_avg, best_p)) <= kMeaningfulPercent;
      cell.best_ssim = std::abs(percent_difference(cell.ssim_avg, best_s)) <= kMeaningfulPercent;
    }
  }
  return report;
}

std::string report_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "method,scenario,psnr_avg,ssim_avg,pct_diff_psnr,pct_diff_ssim,flagged\n";
  for (const auto& method : report.methods) {
    for (const auto& scenario : report.scenarios) {
      const auto& c = report.cells.at(method).at(scenario);
      out << method << ',' << scenario << ',' << fmt("%.6f", c.psnr_avg) << ','
          << fmt("%.6f", c.ssim_avg) << ',' << fmt("%.4f", c.pct_diff_psnr) << ','
          << fmt("%.4f", c.pct_diff_ssim) << ',' << (c.flagged() ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

std::string render_table(const MetricsReport& report, const std::string& title) {
  constexpr int kName = 18;
  constexpr int kCol = 20;
  auto pad = [](std::string s, int width) {
    if (static_cast<int>(s.size()) < width) s.append(static_cast<std::size_t>(width) - s.size(), ' ');
    return s;
  };
  auto entry = [](double v, double pct, bool best, const char* pattern) {
    std::string s = fmt(pattern, v);
    if (std::abs(pct) >= 0.05) s += " (" + fmt("%+.1f", pct) + "%)";
    if (best) s += " *";
    return s;
  };

  std::ostringstream out;
  out << title << '\n';
  out << pad("PSNR / SSIM", kName);
  for (const auto& scenario : report.scenarios) out << pad(scenario, kCol);
  out << '\n';
  for (const auto& method : report.methods) {
    const auto& row = report.cells.at(method);
    out << pad(method, kName);
    for (const auto& scenario : report.scenarios) {
      const auto& c = row.at(scenario);
      out << pad(entry(c.psnr_avg, c.pct_diff_psnr, c.best_psnr, "%.1f"), kCol);
    }
    out << '\n' << pad("", kName);
    for (const auto& scenario : report.scenarios) {
      const auto& c = row.at(scenario);
      out << pad(entry(c.ssim_avg, c.pct_diff_ssim, c.best_ssim, "%.3f"), kCol);
    }
    out << '\n';
  }
  out << "* within 2% of the column best\n";
  return out.str();
}

}  // namespace tomoprior
