// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "support/dense_oracle.hpp"
#include "support/loop_oracles.hpp"
#include "tomoprior/generator.hpp"
#include "tomoprior/io.hpp"
#include "tomoprior/metrics.hpp"
#include "tomoprior/phantom.hpp"
#include "tomoprior/projector.hpp"
#include "tomoprior/random.hpp"
#include "tomoprior/sart.hpp"
#include "tomoprior/scan.hpp"
#include "tomoprior/weights_io.hpp"

using namespace tomoprior;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && secs > limit_s) {
    o.pass = false;
    o.detail += "; over the " + std::to_string(static_cast<int>(limit_s)) + " s budget";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f s", secs);
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << buf << "]"
            << std::endl;
  failures += o.pass ? 0 : 1;
}

std::string num(double v, const char* pattern = "%.3g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::vector<double> flat(const ImageGrid& x) { return {x.values().begin(), x.values().end()}; }

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

ReconConfig desk_recon(PriorKind prior = PriorKind::clamp) {
  ReconConfig c;
  c.iterations = 20;
  c.num_subsets = 10;
  c.prior = prior;
  return c;
}

Outcome dense_sart() {
  ParallelGeometry g = ParallelGeometry::for_image(16, 1.0, 8);
  const auto a = oracle::joseph_matrix(g, 16, 1.0);
  Sinogram b(g, oracle::random_vector(g.num_rays(), 3, 0.0, 4.0));
  ImageGrid x(16);
  std::vector<double> xd(256, 0.0);
  SartSolver solver(g, 16, 1.0, 2);
  const std::vector<double> bv(b.values().begin(), b.values().end());
  for (int it = 0; it < 3; ++it) {
    solver.full_iteration(x, b, 1.0, nullptr);
    xd = oracle::sart_iteration(a, bv, xd, g.num_views, g.num_detectors, 2, 1.0);
  }
  const double err = oracle::max_rel_error(flat(x), xd);
  return {err <= 1e-6, "max relative error " + num(err) + " after 3 iterations"};
}

Outcome adjoint() {
  const ParallelProjector p(ParallelGeometry::for_image(16, 1.0, 8), 16, 1.0);
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const auto x = oracle::random_vector(p.num_pixels(), 2 * k, -1.0, 1.0);
    const auto y = oracle::random_vector(p.num_rays(), 2 * k + 1, -1.0, 1.0);
    std::vector<double> ax(p.num_rays()), aty(p.num_pixels());
    p.forward(x, ax);
    p.back(y, aty);
    const double lhs = oracle::dot(ax, y);
    const double rhs = oracle::dot(x, aty);
    worst = std::max(worst, std::abs(lhs - rhs) / (std::abs(lhs) + 1e-12));
  }
  return {worst < 1e-6, "worst relative mismatch " + num(worst) + " over 100 pairs"};
}

Outcome convergence() {
  const auto phantom = random_phantom(64, 2024);
  const auto g = ParallelGeometry::for_image(64, 1.0, 180);
  const auto sino = forward_project(phantom, g);
  const auto r = reconstruct(sino, 64, 1.0, desk_recon());
  bool monotone = true;
  for (std::size_t k = 2; k < r.residuals.size(); ++k)
    monotone = monotone && r.residuals[k] <= r.residuals[k - 1];
  const double last = r.residuals.back();
  return {last < 1e-3 && monotone,
          "relative residual " + num(last) + " after 20 iterations (need < 1e-3), " +
              (monotone ? "monotone" : "not monotone") + " after iteration 2"};
}

Outcome metric_oracles() {
  double worst_psnr = 0.0, worst_mse = 0.0, worst_ssim = 0.0;
  for (std::uint64_t k = 0; k < 50; ++k) {
    const auto xv = oracle::random_vector(64, 100 + 2 * k, 0.0, 1.0);
    const auto yv = oracle::random_vector(64, 101 + 2 * k, 0.05, 1.0);
    const ImageGrid x(8, 1.0, xv), y(8, 1.0, yv);
    const double peak = y.max_value();
    worst_mse = std::max(worst_mse, std::abs(mse(x, y) - oracle::mse_loop(xv, yv, 8, 8)));
    worst_psnr = std::max(worst_psnr, std::abs(psnr(x, y) - oracle::psnr_loop(xv, yv, 8, 8)));
    const double s = oracle::ssim_loop(xv, yv, 1e-4 * peak * peak, 9e-4 * peak * peak);
    worst_ssim = std::max(worst_ssim, std::abs(ssim(x, y) - s));
  }
  const auto y = random_phantom(8, 1);
  const bool identical = std::isinf(psnr(y, y)) && psnr(y, y) > 0 && ssim(y, y) == 1.0;
  const ImageGrid a(8, 1.0, std::vector<double>(64, 0.3)), b(8, 1.0, std::vector<double>(64, 0.7));
  const double c1 = 1e-4 * 0.49;
  const double closed = (2 * 0.3 * 0.7 + c1) / (0.09 + 0.49 + c1);
  const double closed_err = std::abs(ssim(a, b) - closed);
  return {worst_psnr <= 1e-9 && worst_mse <= 1e-12 && worst_ssim <= 1e-12 && identical &&
              closed_err <= 1e-12,
          "psnr " + num(worst_psnr) + " dB, mse " + num(worst_mse) + ", ssim " +
              num(worst_ssim) + ", identical " + (identical ? "ok" : "wrong") +
              ", constant closed form " + num(closed_err)};
}

Outcome attention() {
  std::mt19937_64 rng(7);
  auto pick = [&rng](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  auto floats = [](std::size_t n, std::uint64_t seed) {
    std::vector<float> out;
    for (double v : oracle::random_vector(n, seed, -1.5, 1.5)) out.push_back(static_cast<float>(v));
    return out;
  };
  double worst_row = 0.0;
  bool passthrough = true;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const std::size_t m = pick(3, 14), n = pick(3, 14), c = pick(1, 4);
    AttentionLayer a;
    a.channels = c;
    a.reduced_channels = pick(1, c);
    a.pool = pick(1, 3);
    a.w_f = floats(a.reduced_channels * c, 1000 + 4 * k);
    a.w_g = floats(a.reduced_channels * c, 1001 + 4 * k);
    a.w_h = floats(c * c, 1002 + 4 * k);
    a.gamma = 0.0f;
    const FeatureTensor x(m, n, c, oracle::random_vector(m * n * c, 1003 + 4 * k, -3.0, 3.0));
    const auto map = attention_map(x, a);
    const std::size_t np = static_cast<std::size_t>(std::sqrt(static_cast<double>(map.size())));
    for (std::size_t i = 0; i < np; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < np; ++j) sum += map[i * np + j];
      worst_row = std::max(worst_row, std::abs(sum - 1.0));
    }
    passthrough = passthrough && self_attention_forward(x, a) == x;
  }

  const auto v = oracle::random_vector(36, 66, -1.0, 1.0);
  AttentionLayer unit;
  unit.w_f = unit.w_g = unit.w_h = {1.0f};
  unit.gamma = 1.0f;
  const auto got = self_attention_forward(FeatureTensor(6, 6, 1, v), unit);
  const auto want = oracle::attention_loop(v, 6, 6, 1, 1, {1.0}, {1.0}, {1.0}, 1.0);
  const double loop_err = oracle::max_rel_error(got.values(), want.output);
  return {worst_row <= 1e-6 && passthrough && loop_err <= 1e-6,
          "worst row-sum error " + num(worst_row) + ", gamma=0 passthrough " +
              (passthrough ? "exact" : "broken") + ", 6x6 loop oracle " + num(loop_err)};
}

Outcome poisson() {
  const double i0 = 1e5;
  const int seeds = 10000;
  double worst_z = 0.0;
  const std::vector<double> lines{0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0};
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const double mean = i0 * std::exp(-lines[k]);
    double sum = 0.0;
    for (int s = 0; s < seeds; ++s) sum += static_cast<double>(poisson_count(mean, s, k));
    const double se = std::sqrt(mean / seeds);
    worst_z = std::max(worst_z, std::abs(sum / seeds - mean) / se);
  }

  const auto phantoms = random_phantoms(20, 64, 31);
  std::vector<double> p6, p5, p4;
  for (std::size_t i = 0; i < phantoms.size(); ++i) {
    for (auto [name, out] : {std::pair{"low-dose-1e6", &p6}, std::pair{"low-dose-1e5", &p5},
                             std::pair{"low-dose-1e4", &p4}}) {
      const auto scan = simulate_scenario(phantoms[i], scenario_preset(name, ScanScale::desk),
                                          derive_seed(77, i), normal_dose(ScanScale::desk));
      out->push_back(psnr(reconstruct(scan.degraded, 64, 1.0, desk_recon()).image, phantoms[i]));
    }
  }
  const double m6 = mean_of(p6), m5 = mean_of(p5), m4 = mean_of(p4);
  return {worst_z < 3.0 && m6 > m5 && m5 > m4,
          "worst count-mean deviation " + num(worst_z, "%.2f") + " SE; mean PSNR 1e6/1e5/1e4 = " +
              num(m6, "%.2f") + " / " + num(m5, "%.2f") + " / " + num(m4, "%.2f") + " dB"};
}

Outcome sart_tv() {
  const auto phantoms = random_phantoms(10, 64, 41);
  const auto scenario = scenario_preset("sparse-50", ScanScale::desk);
  std::vector<double> plain, tv;
  std::size_t steps = 0, ascents = 0;
  for (std::size_t i = 0; i < phantoms.size(); ++i) {
    const auto scan = simulate_scenario(phantoms[i], scenario, derive_seed(88, i),
                                        normal_dose(ScanScale::desk));
    plain.push_back(psnr(reconstruct(scan.degraded, 64, 1.0, desk_recon()).image, phantoms[i]));

    // Same loop as reconstruct(), keeping the prior to read its step log.
    const auto cfg = desk_recon(PriorKind::tv_superiorize);
    SartSolver solver(scan.degraded.geometry(), 64, 1.0, cfg.num_subsets);
    TvPrior prior(cfg.tv);
    ImageGrid x(64);
    for (std::size_t it = 0; it < cfg.iterations; ++it)
      solver.full_iteration(x, scan.degraded, cfg.relaxation, &prior);
    tv.push_back(psnr(x, phantoms[i]));
    for (const auto& rec : prior.superiorizer().log()) {
      ++steps;
      if (rec.tv_after > rec.tv_before) ++ascents;
    }
  }
  const double gain = mean_of(tv) - mean_of(plain);
  return {gain >= 1.0 && ascents == 0 && steps > 0,
          "mean PSNR SART-TV " + num(mean_of(tv), "%.2f") + " vs SART " +
              num(mean_of(plain), "%.2f") + " dB (gain " + num(gain, "%.2f") + "), " +
              std::to_string(ascents) + " TV ascents in " + std::to_string(steps) + " steps"};
}

Outcome weight_format() {
  auto w = make_generator(24, GeneratorLayout{{4, 8}, {1, 2}, true}, 1.0, 9);
  for (auto& l : w.layers)
    if (auto* a = std::get_if<AttentionLayer>(&l)) a->gamma = 0.25f;
  const auto dir = fs::temp_directory_path() / "tomoprior_acceptance";
  fs::create_directories(dir);
  save_weights(w, dir / "a.tpw");
  save_weights(load_weights(dir / "a.tpw"), dir / "b.tpw");
  const bool identical = read_file(dir / "a.tpw") == read_file(dir / "b.tpw");

  const auto bytes = encode_weights(w);
  auto code_of = [](std::vector<std::uint8_t> b) {
    try {
      decode_weights(b);
    } catch (const WeightFileError& e) {
      return static_cast<int>(e.code());
    }
    return -1;
  };
  auto corrupt = bytes;
  corrupt[bytes.size() - 20] ^= 0x40;
  auto truncated = bytes;
  truncated.resize(bytes.size() - 7);
  const int c_corrupt = code_of(corrupt), c_trunc = code_of(truncated);
  const bool distinct = c_corrupt == static_cast<int>(WeightFileErrc::corrupt) &&
                        c_trunc == static_cast<int>(WeightFileErrc::truncated);

  save_weights(make_generator(24, GeneratorLayout{{4, 8}, {1, 2}, false}, 1.0, 9), dir / "n.tpw");
  const auto ablated = load_weights(dir / "n.tpw");
  const auto out = generator_forward(random_phantom(24, 1), ablated);
  const bool ablation_ok = ablated.ablation_no_attention && out.side() == 24 && out.all_finite();
  fs::remove_all(dir);
  return {identical && distinct && ablation_ok,
          std::string("round trip ") + (identical ? "byte-identical" : "differs") +
              ", corrupt/truncated errors " + (distinct ? "distinct" : "not distinct") +
              ", ablation descriptor " + (ablation_ok ? "loads and runs" : "broken")};
}

Outcome pipeline_determinism() {
  const auto root = fs::temp_directory_path() / "tomoprior_acceptance_pipeline";
  fs::remove_all(root);
  std::ostringstream sink;
  for (const char* run : {"a", "b"}) {
    const auto base = root / run;
    auto call = [&](std::vector<std::string> args) {
      args.insert(args.begin(), "tomoprior");
      if (cli::run_cli(args, sink, sink) != 0) throw std::runtime_error("cli failed: " + sink.str());
    };
    call({"simulate", "--phantoms", "3", "--seed", "12", "--scenario",
          "limited-140,low-dose-1e5,sparse-50", "--png", "--out", (base / "ds").string()});
    call({"reconstruct", "--input", (base / "ds").string(), "--method", "sart,sart-tv", "--png",
          "--out", (base / "rec").string()});
    call({"evaluate", "--input", (base / "rec").string(), "--out", (base / "eval").string()});
  }
  std::size_t compared = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext != ".csv" && ext != ".tpi" && ext != ".tps" && ext != ".png" && ext != ".txt") continue;
    const auto twin = root / "b" / fs::relative(e.path(), root / "a");
    ++compared;
    if (!fs::exists(twin) || read_file(e.path()) != read_file(twin)) ++differing;
  }
  std::size_t count_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "b")) count_b += e.is_regular_file();
  std::size_t count_a = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) count_a += e.is_regular_file();
  fs::remove_all(root);
  return {differing == 0 && compared > 0 && count_a == count_b,
          std::to_string(compared) + " CSV/image files compared, " + std::to_string(differing) +
              " differ"};
}

}  // namespace

int main() {
  criterion("dense-oracle SART equivalence (16x16, 8 views, 2 subsets, 3 iterations)", 1,
            dense_sart);
  criterion("adjoint test (100 pairs, 16x16, 8 views)", 5, adjoint);
  criterion("consistent-data convergence (64x64, 180 views, 20 iterations, 10 subsets)", 30,
            convergence);
  criterion("metric oracles (50 random 8x8 pairs)", 0, metric_oracles);
  criterion("attention properties (100 random tensors)", 0, attention);
  criterion("Poisson simulator and dose ordering (20 phantoms)", 300, poisson);
  criterion("SART-TV beats SART by >= 1 dB on 50-view data (10 phantoms)", 0, sart_tv);
  criterion("weight format round trip and error kinds", 0, weight_format);
  criterion("full pipeline determinism (simulate, reconstruct, evaluate twice)", 0,
            pipeline_determinism);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
