#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "tomoprior/error.hpp"
#include "tomoprior/generator.hpp"
#include "tomoprior/io.hpp"
#include "tomoprior/metrics.hpp"
#include "tomoprior/phantom.hpp"
#include "tomoprior/random.hpp"
#include "tomoprior/weights_io.hpp"

namespace tomoprior::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kDatasetFormat = "tomoprior.dataset";
constexpr const char* kReconFormat = "tomoprior.reconstructions";
constexpr const char* kEvalFormat = "tomoprior.evaluation";
constexpr int kManifestVersion = 1;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

bool is_count(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::string sample_id(std::size_t phantom, int rotation) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%04zu_r%d", phantom, rotation);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Runs fn(0..n-1) on a pool. The exception of the lowest failing index wins,
// so errors are as deterministic as the outputs.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(mu);
            if (i < failed_at) {
              failed_at = i;
              failure = std::current_exception();
            }
          }
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
}

json scenario_json(const ScanScenario& s) {
  return {{"name", s.name},
          {"kind", to_string(s.kind)},
          {"beam_intensity", s.beam_intensity},
          {"num_views", s.num_views},
          {"angular_range", s.angular_range}};
}

ScanScenario scenario_from_json(const json& j) {
  ScanScenario s;
  s.name = j.at("name").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  for (auto k : {ScenarioKind::normal_dose, ScenarioKind::low_dose, ScenarioKind::sparse_view,
                 ScenarioKind::limited_angle})
    if (to_string(k) == kind) s.kind = k;
  s.beam_intensity = j.at("beam_intensity").get<double>();
  s.num_views = j.at("num_views").get<std::size_t>();
  s.angular_range = j.at("angular_range").get<double>();
  return s;
}

json recon_json(const ReconConfig& r) {
  return {{"iterations", r.iterations},
          {"subsets", r.num_subsets},
          {"relaxation", r.relaxation},
          {"prior_cadence", r.prior_cadence},
          {"tv_steps", r.tv.step_count},
          {"tv_beta0", r.tv.beta0_fraction},
          {"tv_shrink", r.tv.shrink}};
}

json load_manifest(const fs::path& dir, const char* format) {
  const fs::path path = dir / "manifest.json";
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != format)
    throw DataError(path.string() + ": expected a " + format + " manifest");
  return j;
}

void write_manifest(const fs::path& dir, const json& j) {
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw DataError("cannot create output directory " + dir.string());
}

std::vector<ImageGrid> load_phantoms(const ExperimentConfig& c, json& source) {
  if (is_count(c.phantoms)) {
    const std::size_t count = std::stoul(c.phantoms);
    source = {{"source", "procedural"}, {"count", count}, {"side", c.side}};
    return random_phantoms(count, c.side, derive_seed(c.seed, fnv1a("phantoms")), c.pixel_size);
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(c.phantoms)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".tpi" || ext == ".f32" || ext == ".raw"))
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ImageGrid> out;
  json names = json::array();
  for (const auto& f : files) {
    out.push_back(f.extension() == ".tpi" ? read_image(f) : read_raw_image(f, c.pixel_size));
    if (out.back().side() != out.front().side())
      throw DataError(f.string() + ": phantom side " + std::to_string(out.back().side()) +
                      " differs from " + std::to_string(out.front().side()));
    names.push_back(f.filename().string());
  }
  source = {{"source", "directory"}, {"path", c.phantoms}, {"files", names}};
  return out;
}

void write_trace(const fs::path& path, const ReconResult& r) {
  std::string csv = "iteration,residual,psnr\n";
  for (std::size_t k = 0; k < r.residuals.size(); ++k)
    csv += std::to_string(k + 1) + "," + fmt(r.residuals[k]) + "," +
           (k < r.psnr.size() ? fmt(r.psnr[k]) : std::string()) + "\n";
  write_file(path, csv);
}

void check_geometry(const Sinogram& sino, const ScanScenario& scenario, std::size_t side,
                    double pixel_size, const fs::path& path) {
  const auto want = scenario.geometry(side, pixel_size);
  const auto& g = sino.geometry();
  const bool ok = g.num_views == want.num_views && g.num_detectors == want.num_detectors &&
                  std::abs(g.angular_range - want.angular_range) < 1e-5 &&
                  std::abs(g.detector_spacing - want.detector_spacing) < 1e-6 * want.detector_spacing;
  if (!ok)
    throw DataError(path.string() + ": geometry mismatch (" + std::to_string(g.num_views) +
                    " views x " + std::to_string(g.num_detectors) + " detectors, expected " +
                    std::to_string(want.num_views) + " x " + std::to_string(want.num_detectors) +
                    " for scenario " + scenario.name + ")");
}

std::shared_ptr<const GeneratorWeights> load_generator(const ExperimentConfig& c) {
  auto w = load_weights(c.weights);
  if (c.ablation_no_attention) {
    std::erase_if(w.layers, [](const GeneratorLayer& l) {
      return std::holds_alternative<AttentionLayer>(l);
    });
    w.ablation_no_attention = true;
    validate_generator(w);
  }
  return std::make_shared<const GeneratorWeights>(std::move(w));
}

PriorKind method_prior(const std::string& method) {
  if (method == "sart") return PriorKind::clamp;
  if (method == "sart-tv") return PriorKind::tv_superiorize;
  return PriorKind::generator;
}

}  // namespace

std::vector<ScanScenario> resolve_scenarios(const std::string& list, ScanScale scale) {
  std::vector<ScanScenario> out;
  std::set<std::string> seen;
  auto add = [&](ScanScenario s) {
    if (seen.insert(s.name).second) out.push_back(std::move(s));
  };
  for (const auto& name : split_list(list)) {
    if (name == "paper-train") {
      for (auto& s : training_scenarios(scale)) add(s);
    } else if (name == "paper-test") {
      for (auto& s : test_scenarios(scale)) add(s);
    } else {
      add(scenario_preset(name, scale));
    }
  }
  return out;
}

std::vector<ScanScenario> ExperimentConfig::scenarios() const {
  return resolve_scenarios(scenario, parse_scale(scale));
}

void ExperimentConfig::validate() const {
  if (out.empty()) throw InvalidInput("--out must name a directory");
  const auto sc = parse_scale(scale);
  const auto list = resolve_scenarios(scenario, sc);
  if (side == 0) throw InvalidInput("side must be >= 1");
  if (!(pixel_size > 0.0)) throw InvalidInput("pixel-size must be positive");
  rotation_set(rotations);
  if (reference != "phantom" && reference != "clean")
    throw InvalidInput("reference must be phantom or clean, got '" + reference + "'");
  if (!(tolerance > 0.0)) throw InvalidInput("tolerance must be positive");

  if (methods.empty()) throw InvalidInput("--method needs at least one method");
  bool gan = false;
  for (const auto& m : methods) {
    if (m != "sart" && m != "sart-tv" && m != "sart-gan")
      throw InvalidInput("unknown method '" + m + "' (expected sart, sart-tv or sart-gan)");
    gan = gan || m == "sart-gan";
  }
  if (command == "reconstruct" && gan && weights.empty())
    throw InvalidInput("method sart-gan requires --weights");
  if (command == "train-export-check" && weights.empty())
    throw InvalidInput("train-export-check requires --weights");
  if (!weights.empty() && !fs::is_regular_file(weights))
    throw InvalidInput("weight file " + weights.string() + " does not exist");

  if (command == "simulate") {
    if (!is_count(phantoms) && !fs::is_directory(phantoms))
      throw InvalidInput("--phantoms must be a count or an existing directory, got '" +
                         phantoms + "'");
    std::size_t min_views = normal_dose(sc).num_views;
    for (const auto& s : list) min_views = std::min(min_views, s.num_views);
    ReconConfig r = recon;
    r.prior = PriorKind::clamp;
    r.validate(min_views);
  }
  if (command == "reconstruct" || command == "evaluate") {
    if (input.empty()) throw InvalidInput(command + " requires --input");
    if (!fs::exists(input)) throw InvalidInput("input " + input.string() + " does not exist");
  }
  if (command == "reconstruct") {
    ReconConfig r = recon;
    r.prior = PriorKind::clamp;
    r.validate(std::max<std::size_t>(r.num_subsets, 1));
  }
  if (command == "train-export-check") {
    if (!input.empty() && !fs::is_directory(input))
      throw InvalidInput("probe directory " + input.string() + " does not exist");
    if (!expected.empty() && !fs::is_directory(expected))
      throw InvalidInput("expected-output directory " + expected.string() + " does not exist");
  }
}

void cmd_simulate(const ExperimentConfig& c, std::ostream& log) {
  const auto scale = parse_scale(c.scale);
  auto scenarios = c.scenarios();
  if (scenarios.empty()) scenarios = test_scenarios(scale);
  DatasetOptions options;
  options.recon = c.recon;
  options.recon.prior = PriorKind::clamp;
  options.reference = normal_dose(scale);

  json source;
  const auto phantoms = load_phantoms(c, source);
  ensure_dir(c.out);

  std::vector<json> samples(phantoms.size()), files(phantoms.size());
  parallel_for(phantoms.size(), c.threads, [&](std::size_t p) {
    const auto data = paired_samples(phantoms[p], p, scenarios, c.rotations, c.seed, options);
    samples[p] = json::array();
    files[p] = json::array();
    for (std::size_t i = 0; i < data.size(); i += scenarios.size()) {
      const auto& first = data[i];
      const std::string id = sample_id(p, first.rotation);
      const fs::path rel = fs::path("samples") / id;
      const json common = {{"sample", id},
                           {"phantom_index", p},
                           {"rotation", first.rotation},
                           {"noise_seed", first.seed}};
      auto file = [&](const fs::path& path, const std::string& role, json extra = json::object()) {
        json f = common;
        f["path"] = path.generic_string();
        f["role"] = role;
        f.update(extra);
        files[p].push_back(f);
        return path.generic_string();
      };
      write_image(first.phantom, c.out / rel / "phantom.tpi");
      write_sinogram(first.clean_sino, c.out / rel / "clean.tps");
      write_image(first.clean_recon, c.out / rel / "clean_sart.tpi");
      json sample = common;
      sample["phantom"] = file(rel / "phantom.tpi", "phantom");
      const json ref = {{"scenario", scenario_json(options.reference)}};
      sample["clean_sinogram"] = file(rel / "clean.tps", "clean_sinogram", ref);
      sample["clean_recon"] =
          file(rel / "clean_sart.tpi", "clean_recon", {{"scenario", scenario_json(options.reference)},
                                                       {"recon", recon_json(options.recon)}});
      if (c.png) {
        write_png(first.phantom, c.out / rel / "phantom.png");
        file(rel / "phantom.png", "png");
      }
      sample["degraded"] = json::array();
      for (std::size_t k = 0; k < scenarios.size(); ++k) {
        const auto& s = data[i + k];
        const std::string name = s.scenario.name;
        write_sinogram(s.degraded_sino, c.out / rel / (name + ".tps"));
        write_image(s.degraded_recon, c.out / rel / (name + "_sart.tpi"));
        const json sj = {{"scenario", scenario_json(s.scenario)}};
        json entry = {{"scenario", name}};
        entry["sinogram"] = file(rel / (name + ".tps"), "degraded_sinogram", sj);
        entry["recon"] = file(rel / (name + "_sart.tpi"), "degraded_recon",
                              {{"scenario", scenario_json(s.scenario)},
                               {"recon", recon_json(options.recon)}});
        if (c.png) {
          write_png(s.degraded_recon, c.out / rel / (name + "_sart.png"));
          file(rel / (name + "_sart.png"), "png", sj);
        }
        sample["degraded"].push_back(entry);
      }
      samples[p].push_back(sample);
    }
  });

  json m;
  m["format"] = kDatasetFormat;
  m["version"] = kManifestVersion;
  m["seed"] = c.seed;
  m["scale"] = c.scale;
  m["side"] = phantoms.empty() ? c.side : phantoms.front().side();
  m["pixel_size"] = phantoms.empty() ? c.pixel_size : phantoms.front().pixel_size();
  m["rotations"] = c.rotations;
  m["phantoms"] = source;
  m["recon"] = recon_json(options.recon);
  m["reference"] = scenario_json(options.reference);
  m["scenarios"] = json::array();
  for (const auto& s : scenarios) m["scenarios"].push_back(scenario_json(s));
  m["samples"] = json::array();
  m["files"] = json::array();
  for (std::size_t p = 0; p < phantoms.size(); ++p) {
    for (auto& s : samples[p]) m["samples"].push_back(std::move(s));
    for (auto& f : files[p]) m["files"].push_back(std::move(f));
  }
  write_manifest(c.out, m);
  log << "simulate: " << phantoms.size() << " phantoms x " << c.rotations << " rotations x "
      << scenarios.size() << " scenarios -> " << c.out.string() << "\n";
}

namespace {

struct ReconJob {
  std::string sample;
  std::size_t phantom_index = 0;
  int rotation = 0;
  ScanScenario scenario;
  fs::path sinogram;
  std::string phantom;      // dataset-relative, empty without ground truth
  std::string clean_recon;  // dataset-relative
  std::string method;
};

}  // namespace

void cmd_reconstruct(const ExperimentConfig& c, std::ostream& log) {
  std::vector<ReconJob> jobs;
  std::size_t side = c.side;
  double pixel_size = c.pixel_size;
  json dataset_ref;
  const bool from_dataset = fs::is_directory(c.input);

  if (from_dataset) {
    const json m = load_manifest(c.input, kDatasetFormat);
    side = m.at("side").get<std::size_t>();
    pixel_size = m.at("pixel_size").get<double>();
    std::map<std::string, ScanScenario> by_name;
    for (const auto& s : m.at("scenarios")) {
      auto sc = scenario_from_json(s);
      by_name[sc.name] = sc;
    }
    std::set<std::string> wanted;
    for (const auto& s : c.scenarios()) {
      if (!by_name.contains(s.name))
        throw DataError("scenario " + s.name + " is not in dataset " + c.input.string());
      wanted.insert(s.name);
    }
    for (const auto& sample : m.at("samples"))
      for (const auto& d : sample.at("degraded")) {
        const auto name = d.at("scenario").get<std::string>();
        if (!wanted.empty() && !wanted.contains(name)) continue;
        for (const auto& method : c.methods)
          jobs.push_back({sample.at("sample").get<std::string>(),
                          sample.at("phantom_index").get<std::size_t>(),
                          sample.at("rotation").get<int>(), by_name.at(name),
                          c.input / d.at("sinogram").get<std::string>(),
                          sample.at("phantom").get<std::string>(),
                          sample.at("clean_recon").get<std::string>(), method});
      }
    dataset_ref = fs::absolute(c.input).lexically_normal().generic_string();
  } else {
    ScanScenario scenario;
    scenario.name = c.input.stem().string();
    for (const auto& method : c.methods)
      jobs.push_back({scenario.name, 0, 0, scenario, c.input, {}, {}, method});
  }

  std::shared_ptr<const GeneratorWeights> generator;
  if (std::find(c.methods.begin(), c.methods.end(), "sart-gan") != c.methods.end()) {
    generator = load_generator(c);
    if (generator->input_side != side)
      throw DataError("weight file expects " + std::to_string(generator->input_side) +
                      "-pixel images, data has " + std::to_string(side));
  }
  ensure_dir(c.out);

  std::vector<json> records(jobs.size());
  parallel_for(jobs.size(), c.threads, [&](std::size_t i) {
    const auto& job = jobs[i];
    const Sinogram sino = read_sinogram(job.sinogram);
    if (from_dataset) check_geometry(sino, job.scenario, side, pixel_size, job.sinogram);
    ReconConfig rc = c.recon;
    rc.prior = method_prior(job.method);
    rc.generator = generator;
    try {
      rc.validate(sino.geometry().num_views);
    } catch (const InvalidInput& e) {
      throw DataError(job.sinogram.string() + ": " + e.what());
    }
    ImageGrid truth;
    if (!job.phantom.empty())
      truth = read_image(c.input / (c.reference == "clean" ? job.clean_recon : job.phantom));
    const auto result = reconstruct(sino, side, pixel_size, rc, job.phantom.empty() ? nullptr : &truth);

    const fs::path rel = from_dataset ? fs::path("recons") / job.sample / job.scenario.name
                                      : fs::path(job.sample);
    write_image(result.image, c.out / rel / (job.method + ".tpi"));
    write_trace(c.out / rel / (job.method + "_trace.csv"), result);
    json r = {{"sample", job.sample},
              {"phantom_index", job.phantom_index},
              {"rotation", job.rotation},
              {"scenario", job.scenario.name},
              {"kind", to_string(job.scenario.kind)},
              {"method", job.method},
              {"sinogram", from_dataset ? fs::relative(job.sinogram, c.input).generic_string()
                                        : job.sinogram.generic_string()},
              {"image", (rel / (job.method + ".tpi")).generic_string()},
              {"trace", (rel / (job.method + "_trace.csv")).generic_string()}};
    if (!job.phantom.empty()) {
      r["phantom"] = job.phantom;
      r["clean_recon"] = job.clean_recon;
    }
    if (c.png) {
      write_png(result.image, c.out / rel / (job.method + ".png"));
      r["png"] = (rel / (job.method + ".png")).generic_string();
    }
    records[i] = std::move(r);
  });

  json m;
  m["format"] = kReconFormat;
  m["version"] = kManifestVersion;
  m["dataset"] = dataset_ref;
  m["side"] = side;
  m["pixel_size"] = pixel_size;
  m["recon"] = recon_json(c.recon);
  m["methods"] = c.methods;
  m["reference"] = c.reference;
  m["weights"] = c.weights.empty() ? json() : json(c.weights.generic_string());
  m["ablation_no_attention"] = c.ablation_no_attention;
  m["records"] = records;
  write_manifest(c.out, m);
  log << "reconstruct: " << jobs.size() << " images -> " << c.out.string() << "\n";
}

void cmd_evaluate(const ExperimentConfig& c, std::ostream& log) {
  const json m = load_manifest(c.input, kReconFormat);
  if (m.at("dataset").is_null())
    throw DataError(c.input.string() + ": reconstructions have no ground truth to compare with");
  const fs::path dataset = m.at("dataset").get<std::string>();
  const auto& records = m.at("records");

  struct Scored {
    std::string method, scenario, kind, sample;
    ImageScore score;
  };
  std::vector<Scored> scored(records.size());
  parallel_for(records.size(), c.threads, [&](std::size_t i) {
    const auto& r = records[i];
    const auto image = read_image(c.input / r.at("image").get<std::string>());
    const auto truth = read_image(
        dataset / r.at(c.reference == "clean" ? "clean_recon" : "phantom").get<std::string>());
    if (image.side() != truth.side())
      throw DataError(r.at("image").get<std::string>() + ": size differs from its reference");
    scored[i] = {r.at("method"), r.at("scenario"), r.at("kind"), r.at("sample"),
                 {psnr(image, truth), ssim(image, truth)}};
  });

  ScoreTable all, by_kind;
  std::vector<std::string> scenario_order;
  std::map<std::string, std::vector<std::string>> kind_scenarios;
  std::string scores_csv = "method,scenario,kind,sample,psnr,ssim\n";
  for (const auto& s : scored) {
    all[s.method][s.scenario].push_back(s.score);
    by_kind[s.method][s.kind].push_back(s.score);
    if (std::find(scenario_order.begin(), scenario_order.end(), s.scenario) == scenario_order.end()) {
      scenario_order.push_back(s.scenario);
      kind_scenarios[s.kind].push_back(s.scenario);
    }
    scores_csv += s.method + "," + s.scenario + "," + s.kind + "," + s.sample + "," +
                  fmt(s.score.psnr) + "," + fmt(s.score.ssim) + "\n";
  }

  const std::vector<std::pair<ScenarioKind, const char*>> kinds{
      {ScenarioKind::limited_angle, "Limited angle"},
      {ScenarioKind::low_dose, "Low dose"},
      {ScenarioKind::sparse_view, "Sparse view"},
      {ScenarioKind::normal_dose, "Normal dose"}};

  std::string tables;
  std::vector<std::string> kind_order;
  try {
    for (const auto& [kind, title] : kinds) {
      const auto name = to_string(kind);
      if (!kind_scenarios.contains(name)) continue;
      kind_order.push_back(name);
      ScoreTable part;
      for (const auto& [method, per] : all)
        for (const auto& sc : kind_scenarios[name])
          if (per.contains(sc)) part[method][sc] = per.at(sc);
      tables += render_table(build_report(part, c.baseline, kind_scenarios[name]), title) + "\n";
    }
    const auto report = build_report(all, c.baseline, scenario_order);
    const auto aggregate = build_report(by_kind, c.baseline, kind_order);
    if (!all.empty())
      tables += render_table(aggregate, "Aggregate over degradation classes");
    ensure_dir(c.out);
    write_file(c.out / "scores.csv", scores_csv);
    write_file(c.out / "report.csv", report_csv(report));
    write_file(c.out / "aggregate.csv", report_csv(aggregate));
    write_file(c.out / "tables.txt", tables);
  } catch (const InvalidInput& e) {
    throw DataError(std::string("mismatched image sets: ") + e.what());
  }

  json em;
  em["format"] = kEvalFormat;
  em["version"] = kManifestVersion;
  em["reconstructions"] = fs::absolute(c.input).lexically_normal().generic_string();
  em["reference"] = c.reference;
  em["baseline"] = c.baseline;
  em["files"] = json::array({{{"path", "scores.csv"}, {"role", "per-image scores"}},
                             {{"path", "report.csv"}, {"role", "per-scenario report"}},
                             {{"path", "aggregate.csv"}, {"role", "per-class report"}},
                             {{"path", "tables.txt"}, {"role", "tables"}}});
  write_manifest(c.out, em);
  log << tables;
  log << "evaluate: " << scored.size() << " images -> " << c.out.string() << "\n";
}

void cmd_train_export_check(const ExperimentConfig& c, std::ostream& log) {
  const auto raw = load_weights(c.weights);
  if (c.ablation_no_attention && !raw.ablation_no_attention)
    throw DataError(c.weights.string() + ": --ablation-no-attention given but the file has an attention block");
  const auto& w = raw;

  std::vector<std::pair<std::string, ImageGrid>> probes;
  if (!c.input.empty()) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(c.input))
      if (e.is_regular_file() && e.path().extension() == ".tpi") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) probes.emplace_back(f.filename().string(), read_image(f));
  } else {
    const auto images = random_phantoms(c.probes, w.input_side, derive_seed(c.seed, fnv1a("probes")));
    for (std::size_t i = 0; i < images.size(); ++i) {
      ImageGrid p = images[i];
      const double peak = p.max_value();
      if (peak > 0.0)
        for (double& v : p.values()) v /= peak;
      char name[32];
      std::snprintf(name, sizeof name, "probe_%03zu.tpi", i);
      probes.emplace_back(name, std::move(p));
    }
  }
  if (probes.empty()) throw DataError("no probe images");

  GeneratorWeights plain = w;
  std::erase_if(plain.layers, [](const GeneratorLayer& l) {
    return std::holds_alternative<AttentionLayer>(l);
  });
  plain.ablation_no_attention = true;
  bool zero_gamma = true;
  for (const auto& l : w.layers)
    if (const auto* a = std::get_if<AttentionLayer>(&l)) zero_gamma = zero_gamma && a->gamma == 0.0f;

  ensure_dir(c.out);
  std::string csv = "probe,finite,attention_free_diff,expected_diff,pass\n";
  bool all_pass = true;
  for (const auto& [name, probe] : probes) {
    if (probe.side() != w.input_side)
      throw DataError(name + ": probe side " + std::to_string(probe.side()) +
                      " does not match the generator's " + std::to_string(w.input_side));
    const ImageGrid out = generator_forward(probe, w);
    write_image(out, c.out / name);
    double plain_diff = 0.0;
    const ImageGrid alt = generator_forward(probe, plain);
    for (std::size_t k = 0; k < out.size(); ++k)
      plain_diff = std::max(plain_diff, std::abs(out.values()[k] - alt.values()[k]));
    bool pass = out.all_finite() && (!zero_gamma || plain_diff == 0.0);
    std::string expected_diff;
    if (!c.expected.empty()) {
      const ImageGrid want = read_image(c.expected / name);
      if (want.side() != out.side()) throw DataError(name + ": expected output has another size");
      double d = 0.0;
      for (std::size_t k = 0; k < out.size(); ++k)
        d = std::max(d, std::abs(out.values()[k] - want.values()[k]));
      expected_diff = fmt(d);
      pass = pass && d < c.tolerance;
    }
    all_pass = all_pass && pass;
    csv += name + "," + (out.all_finite() ? "1" : "0") + "," + fmt(plain_diff) + "," +
           expected_diff + "," + (pass ? "1" : "0") + "\n";
  }
  write_file(c.out / "check.csv", csv);
  log << "train-export-check: " << probes.size() << " probes, " << w.layers.size()
      << " layers, " << (all_pass ? "PASS" : "FAIL") << "\n";
  if (!all_pass) throw DataError("train-export-check failed, see " + (c.out / "check.csv").string());
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  ExperimentConfig c;
  std::vector<std::string> methods{"sart"}, scenarios;
  std::string weights, output = c.out.string(), input, expected;

  CLI::App app{"Tomographic reconstruction with SART and interchangeable priors", "tomoprior"};
  app.set_config("--config", "", "Flat key=value configuration file");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1, 1);
  app.fallthrough();

  app.add_option("--seed", c.seed, "Master seed");
  app.add_option("--scenario", scenarios, "Scenario presets, comma separated; groups paper-train, paper-test")
      ->delimiter(',');
  app.add_option("--method", methods, "Methods, comma separated: sart, sart-tv, sart-gan")
      ->delimiter(',');
  app.add_option("--weights", weights, "Generator weight file (TPW1)");
  app.add_option("--out", output, "Output directory");
  app.add_option("--phantoms", c.phantoms, "Procedural phantom count or a directory of images");
  app.add_flag("--ablation-no-attention", c.ablation_no_attention, "Run without the attention block");
  app.add_option("--input", input, "Dataset, reconstruction directory or sinogram file");
  app.add_option("--scale", c.scale, "View density of presets: desk or paper");
  app.add_option("--side", c.side, "Image side for procedural phantoms and raw sinograms");
  app.add_option("--pixel-size", c.pixel_size, "Pixel size");
  app.add_option("--rotations", c.rotations, "Augmentation rotations: 1, 2 or 4");
  app.add_option("--iterations", c.recon.iterations, "SART iterations");
  app.add_option("--subsets", c.recon.num_subsets, "SART subsets");
  app.add_option("--relaxation", c.recon.relaxation, "SART relaxation");
  app.add_option("--prior-cadence", c.recon.prior_cadence, "Apply the prior every k iterations");
  app.add_option("--tv-steps", c.recon.tv.step_count, "TV perturbation steps per application");
  app.add_option("--tv-beta0", c.recon.tv.beta0_fraction, "Initial TV step as a fraction of max(x)");
  app.add_option("--tv-shrink", c.recon.tv.shrink, "TV step shrink factor");
  app.add_flag("--png", c.png, "Also write 16-bit PNG renderings");
  app.add_option("--threads", c.threads, "Worker threads (0: all cores)");
  app.add_option("--reference", c.reference, "Ground truth for metrics: phantom or clean");
  app.add_option("--baseline", c.baseline, "Method the percentages are relative to (default: column best)");
  app.add_option("--probes", c.probes, "Procedural probe count for train-export-check");
  app.add_option("--expected", expected, "Directory of expected generator outputs");
  app.add_option("--tolerance", c.tolerance, "Max element-wise difference for expected outputs");

  app.add_subcommand("simulate", "Generate phantoms, sinograms and reference reconstructions");
  app.add_subcommand("reconstruct", "Reconstruct sinograms with each method");
  app.add_subcommand("evaluate", "Score reconstructions and render tables");
  app.add_subcommand("train-export-check", "Validate a weight file and run probe images");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  c.command = app.get_subcommands().front()->get_name();
  c.methods.clear();
  for (const auto& m : methods) {
    auto parts = split_list(m);
    c.methods.insert(c.methods.end(), parts.begin(), parts.end());
  }
  for (const auto& s : scenarios) c.scenario += (c.scenario.empty() ? "" : ",") + s;
  c.weights = weights;
  c.out = output;
  c.input = input;
  c.expected = expected;

  try {
    c.validate();
    if (c.command == "simulate") cmd_simulate(c, out);
    else if (c.command == "reconstruct") cmd_reconstruct(c, out);
    else if (c.command == "evaluate") cmd_evaluate(c, out);
    else cmd_train_export_check(c, out);
  } catch (const InvalidInput& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace tomoprior::cli
