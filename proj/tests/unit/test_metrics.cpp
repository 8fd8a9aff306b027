#include <cmath>

#include "doctest.h"
#include "support/dense_oracle.hpp"
#include "support/loop_oracles.hpp"
#include "tomoprior/error.hpp"
#include "tomoprior/metrics.hpp"
#include "tomoprior/phantom.hpp"

using namespace tomoprior;

namespace {

ImageGrid grid(std::size_t n, const std::vector<double>& v) { return ImageGrid(n, 1.0, v); }

std::vector<double> as_vector(const ImageGrid& g) { return {g.values().begin(), g.values().end()}; }

}  // namespace

TEST_CASE("metrics: library matches loop oracles on random pairs") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto xv = oracle::random_vector(64, 2 * seed, 0.0, 1.0);
    const auto yv = oracle::random_vector(64, 2 * seed + 1, 0.1, 1.0);
    const auto x = grid(8, xv), y = grid(8, yv);
    const double peak = y.max_value();
    CHECK(mse(x, y) == doctest::Approx(oracle::mse_loop(xv, yv, 8, 8)).epsilon(1e-12));
    CHECK(psnr(x, y) == doctest::Approx(oracle::psnr_loop(xv, yv, 8, 8)).epsilon(1e-12));
    CHECK(ssim(x, y) == doctest::Approx(oracle::ssim_loop(xv, yv, 1e-4 * peak * peak,
                                                          9e-4 * peak * peak))
                            .epsilon(1e-12));
  }
}

TEST_CASE("metrics: identical images") {
  const auto y = random_phantom(16, 5);
  CHECK(mse(y, y) == 0.0);
  CHECK(psnr(y, y) == kPsnrIdentical);
  CHECK(std::isinf(psnr(y, y)));
  CHECK(ssim(y, y) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("metrics: closed forms") {
  std::vector<double> yv(16, 1.0);
  std::vector<double> xv(16, 1.1);
  const auto x = grid(4, xv), y = grid(4, yv);
  CHECK(mse(x, y) == doctest::Approx(0.01));
  CHECK(psnr(x, y) == doctest::Approx(20.0));
  // Constants a and b: SSIM = (2ab + c1) / (a^2 + b^2 + c1).
  const double c1 = 1e-4;
  CHECK(ssim(x, y) == doctest::Approx((2 * 1.1 + c1) / (1.21 + 1.0 + c1)).epsilon(1e-12));
}

TEST_CASE("metrics: error paths") {
  ImageGrid zero(4);
  ImageGrid one(4);
  for (double& v : one.values()) v = 1.0;
  CHECK_THROWS_AS(psnr(one, zero), InvalidInput);
  CHECK_THROWS_AS(mse(ImageGrid(4), ImageGrid(5)), InvalidInput);
  CHECK_THROWS_AS(ssim(ImageGrid(4), ImageGrid(5)), InvalidInput);
}

TEST_CASE("metrics: psnr falls as noise grows") {
  const auto y = random_phantom(32, 1);
  double last = kPsnrIdentical;
  for (double sigma : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    auto x = y;
    const auto noise = oracle::random_vector(x.size(), 77, -1.0, 1.0);
    for (std::size_t i = 0; i < x.size(); ++i) x.values()[i] += sigma * noise[i];
    const double p = psnr(x, y);
    CHECK(p < last);
    last = p;
  }
}

TEST_CASE("metrics: ssim is symmetric with a fixed range") {
  const auto x = random_phantom(16, 2), y = random_phantom(16, 3);
  SsimOptions o;
  o.dynamic_range = 1.0;
  CHECK(ssim(x, y, o) == doctest::Approx(ssim(y, x, o)).epsilon(1e-14));
  o.windowed = true;
  CHECK(ssim(x, y, o) == doctest::Approx(ssim(y, x, o)).epsilon(1e-14));
  CHECK(ssim(x, x, o) == doctest::Approx(1.0));
}

TEST_CASE("metrics: windowed ssim averages the local values") {
  const auto xv = oracle::random_vector(25, 10), yv = oracle::random_vector(25, 11, 0.2, 1.0);
  SsimOptions o;
  o.windowed = true;
  o.window = 4;
  o.c1 = 0.01;
  o.c2 = 0.03;
  double expect = 0.0;
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      std::vector<double> a, b;
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
          a.push_back(xv[(r + i) * 5 + c + j]);
          b.push_back(yv[(r + i) * 5 + c + j]);
        }
      expect += oracle::ssim_loop(a, b, 0.01, 0.03) / 4.0;
    }
  CHECK(ssim(grid(5, xv), grid(5, yv), o) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("report: percentage differences and flags") {
  CHECK(percent_difference(38.0, 38.1) == doctest::Approx(-0.2625).epsilon(1e-3));
  CHECK(percent_difference(30.7, 35.7) == doctest::Approx(-14.0056).epsilon(1e-4));

  ScoreTable t;
  t["sart"]["sparse-50"] = {{30.7, 0.80}};
  t["sart-gan"]["sparse-50"] = {{35.7, 0.90}};
  t["sart-tv"]["sparse-50"] = {{35.6, 0.89}};
  const auto r = build_report(t);
  const auto& sart = r.cells.at("sart").at("sparse-50");
  CHECK(sart.pct_diff_psnr == doctest::Approx(-14.0).epsilon(1e-3));
  CHECK(sart.flag_psnr);
  CHECK_FALSE(sart.best_psnr);
  const auto& best = r.cells.at("sart-gan").at("sparse-50");
  CHECK(best.pct_diff_psnr == 0.0);
  CHECK_FALSE(best.flagged());
  CHECK(best.best_psnr);
  const auto& close = r.cells.at("sart-tv").at("sparse-50");
  CHECK_FALSE(close.flag_psnr);
  CHECK(close.best_psnr);
  CHECK(r.scenarios.back() == kAverageColumn);
}

TEST_CASE("report: small gaps are not flagged against a baseline") {
  ScoreTable t;
  t["a"]["s"] = {{38.0, 0.9}};
  t["b"]["s"] = {{38.1, 0.9}};
  const auto r = build_report(t, "b");
  CHECK(r.cells.at("a").at("s").pct_diff_psnr == doctest::Approx(-0.2625).epsilon(1e-3));
  CHECK_FALSE(r.cells.at("a").at("s").flagged());
  CHECK(r.cells.at("b").at("s").pct_diff_psnr == 0.0);
}

TEST_CASE("report: averages, column order and validation") {
  ScoreTable t;
  t["m"]["x"] = {{30.0, 0.8}, {32.0, 0.9}};
  t["m"]["y"] = {{40.0, 0.95}, {40.0, 0.97}};
  const auto r = build_report(t, {}, {"y", "x"});
  CHECK(r.scenarios == std::vector<std::string>{"y", "x", "average"});
  CHECK(r.cells.at("m").at("x").psnr_avg == doctest::Approx(31.0));
  CHECK(r.cells.at("m").at("average").psnr_avg == doctest::Approx(35.5));
  CHECK(r.cells.at("m").at("average").ssim_avg == doctest::Approx(0.905));

  ScoreTable missing = t;
  missing["n"]["x"] = {{1.0, 0.1}, {1.0, 0.1}};
  CHECK_THROWS_AS(build_report(missing), InvalidInput);
  ScoreTable uneven = t;
  uneven["n"] = {{"x", {{1.0, 0.1}}}, {"y", {{1.0, 0.1}, {1.0, 0.1}}}};
  CHECK_THROWS_AS(build_report(uneven), InvalidInput);
  CHECK_THROWS_AS(build_report(t, "nope"), InvalidInput);
  CHECK_THROWS_AS(build_report(t, {}, {"x"}), InvalidInput);
}

TEST_CASE("report: csv and table rendering") {
  ScoreTable t;
  t["sart"]["sparse-50"] = {{30.7, 0.80}};
  t["sart-gan"]["sparse-50"] = {{35.7, 0.90}};
  const auto r = build_report(t);
  const auto csv = report_csv(r);
  CHECK(csv.rfind("method,scenario,psnr_avg,ssim_avg,pct_diff_psnr,pct_diff_ssim,flagged\n", 0) == 0);
  CHECK(csv.find("sart,sparse-50,30.700000,0.800000,-14.0056,-11.1111,1") != std::string::npos);
  CHECK(csv.find("sart-gan,average,35.700000,0.900000,0.0000,0.0000,0") != std::string::npos);
  const auto table = render_table(r, "Sparse view");
  CHECK(table.rfind("Sparse view\n", 0) == 0);
  CHECK(table.find("30.7 (-14.0%)") != std::string::npos);
  CHECK(table.find("35.7 *") != std::string::npos);
}

TEST_CASE("report: duplicated method ties with zero difference") {
  ScoreTable t;
  t["sart-tv"]["limited-140"] = {{33.0, 0.95}, {35.0, 0.97}};
  t["sart-tv-copy"] = t["sart-tv"];
  t["sart"]["limited-140"] = {{30.0, 0.90}, {31.0, 0.91}};
  const auto r = build_report(t);
  for (const char* m : {"sart-tv", "sart-tv-copy"}) {
    const auto& cell = r.cells.at(m).at("limited-140");
    CHECK(cell.psnr_avg == doctest::Approx(34.0));
    CHECK(cell.pct_diff_psnr == 0.0);
    CHECK(cell.best_psnr);
    CHECK(cell.best_ssim);
  }
}

TEST_CASE("report: a single image per cell averages to itself") {
  ScoreTable t;
  t["m"]["s"] = {{31.25, 0.875}};
  const auto r = build_report(t);
  CHECK(r.cells.at("m").at("s").psnr_avg == 31.25);
  CHECK(r.cells.at("m").at("s").ssim_avg == 0.875);
  CHECK(r.cells.at("m").at("average").psnr_avg == 31.25);
}
