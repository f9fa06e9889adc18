// Pipeline command-line tool: scenario simulation, GIS rasterization, energy
// map construction, birth-and-death optimization, evaluation, and multi-seed
// stability campaigns. Exit codes: 0 success, 1 usage/config error, 2 data
// error, 3 termination without any energy improvement.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sbdloc/energy_map.hpp"
#include "sbdloc/eval.hpp"
#include "sbdloc/geo.hpp"
#include "sbdloc/io.hpp"
#include "sbdloc/rng.hpp"
#include "sbdloc/sbd.hpp"
#include "sbdloc/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<uint64_t> seed;
  std::optional<int> noise_level;
  std::optional<std::string> schedule;
};

void add_common(CLI::App* cmd, CommonArgs* args, bool needs_out = true) {
  cmd->add_option("--config", args->config_path,
                  "Pipeline config JSON (defaults used when omitted)");
  auto* out = cmd->add_option("--out", args->out_dir, "Output directory");
  if (needs_out) out->required();
  cmd->add_option("--seed", args->seed, "Override the config seed");
  cmd->add_option("--noise-level", args->noise_level,
                  "Override the config noise level (0..3)")
      ->check(CLI::Range(0, 3));
  cmd->add_option("--schedule", args->schedule,
                  "Override the annealing schedule reading")
      ->check(CLI::IsMember({"text", "box"}));
}

// Effective config = file (or defaults) + command-line overrides. The config
// hash stamped into outputs is taken after overrides, so a rerun with the
// same flags is attributable and byte-identical.
sbdloc::PipelineConfig effective_config(const CommonArgs& args) {
  sbdloc::PipelineConfig config =
      args.config_path.empty() ? sbdloc::parse_config(json::object())
                               : sbdloc::load_config(args.config_path);
  if (args.seed) {
    config.seed = *args.seed;
    config.sbd.seed = *args.seed;
  }
  if (args.noise_level) config.noise_level = *args.noise_level;
  if (args.schedule) {
    config.sbd.schedule = *args.schedule == "text"
                              ? sbdloc::ScheduleMode::kPerText
                              : sbdloc::ScheduleMode::kPerAlgorithmBox;
  }
  return config;
}

json noise_to_json(const sbdloc::NoiseProfile& profile) {
  return json{{"level", profile.level},
              {"sigma1", profile.sigma1},
              {"sigma2", profile.sigma2},
              {"p", profile.p}};
}

sbdloc::EnergyMap load_energy(const std::string& sidecar_path) {
  const fs::path sidecar(sidecar_path);
  const json meta = sbdloc::read_json_file(sidecar);
  const std::string raster_file = meta.value("raster_file", std::string());
  if (raster_file.empty()) {
    throw sbdloc::DataError(sidecar.string() +
                            ": sidecar missing 'raster_file'");
  }
  return sbdloc::read_energy_raster(sidecar.parent_path() / raster_file,
                                    sidecar);
}

std::vector<sbdloc::GeoPoint> truth_positions(const std::string& path) {
  std::vector<sbdloc::GeoPoint> positions;
  for (const sbdloc::GroundTruthObject& object :
       sbdloc::read_objects_csv(path)) {
    positions.push_back(object.position);
  }
  return positions;
}

int cmd_simulate(const CommonArgs& args) {
  const sbdloc::PipelineConfig config = effective_config(args);
  const sbdloc::NoiseProfile profile = config.noise();
  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);

  sbdloc::Rng layout_rng(sbdloc::derive_seed(config.seed, "simulate/layout"));
  auto [objects, cameras] =
      sbdloc::synth_layout(config.grid, config.layout.n_objects,
                           config.layout.n_cameras, layout_rng);

  sbdloc::Rng detect_rng(
      sbdloc::derive_seed(config.seed, "simulate/detections"));
  std::vector<sbdloc::Detection> detections = sbdloc::detect_objects(
      cameras, objects, profile, detect_rng, config.lambda_c);
  const size_t n_genuine = detections.size();

  sbdloc::Rng contamination_rng(
      sbdloc::derive_seed(config.seed, "simulate/contamination"));
  std::vector<sbdloc::GeoPoint> phantoms;
  detections =
      sbdloc::contaminate(detections, cameras, profile, contamination_rng,
                          config.lambda_c, &phantoms);

  sbdloc::write_objects_csv(out / "objects.csv", objects);
  sbdloc::write_cameras_csv(out / "cameras.csv", cameras);
  sbdloc::write_detections_csv(out / "detections.csv", detections);

  size_t contaminated_rows = 0;
  for (const sbdloc::Detection& det : detections) {
    contaminated_rows += det.is_contaminant ? 1 : 0;
  }
  const json manifest{
      {"command", "simulate"},
      {"config", sbdloc::config_to_json(config)},
      {"config_hash", sbdloc::hex64(sbdloc::config_hash(config))},
      {"seed", config.seed},
      {"noise", noise_to_json(profile)},
      {"counts",
       {{"objects", objects.size()},
        {"cameras", cameras.size()},
        {"genuine_detections", n_genuine},
        {"phantom_seeds", phantoms.size()},
        {"contaminant_rows", contaminated_rows},
        {"detections", detections.size()}}},
      {"files", {"objects.csv", "cameras.csv", "detections.csv"}}};
  sbdloc::write_json_file(out / "manifest.json", manifest);

  std::cout << "objects: " << objects.size() << "\ncameras: " << cameras.size()
            << "\ndetections: " << detections.size()
            << " (contaminant rows: " << contaminated_rows << ")\n";
  return 0;
}

int cmd_rasterize_gis(const CommonArgs& args, const std::string& geojson_path) {
  const sbdloc::PipelineConfig config = effective_config(args);
  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  const sbdloc::GisRaster gis = sbdloc::rasterize_geojson(
      sbdloc::read_json_file(geojson_path), config.grid);
  sbdloc::write_gis_raster(out / "gis.raster", out / "gis.json", gis,
                           sbdloc::config_hash(config));
  size_t occupied = 0;
  for (const uint8_t v : gis.values()) occupied += v;
  std::cout << "occupied pixels: " << occupied << " / " << gis.grid().pixel_count()
            << "\n";
  return 0;
}

int cmd_energy(const CommonArgs& args, const std::string& detections_path,
               const std::string& cameras_path, const std::string& gis_path) {
  const sbdloc::PipelineConfig config = effective_config(args);
  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);

  const std::vector<sbdloc::Detection> detections =
      sbdloc::read_detections_csv(detections_path);
  const std::vector<sbdloc::Camera> cameras =
      sbdloc::read_cameras_csv(cameras_path);
  const std::vector<sbdloc::Ray> rays =
      sbdloc::make_rays(detections, cameras, config.grid);
  const std::vector<sbdloc::Intersection> intersections =
      sbdloc::all_intersections(rays, config.grid);

  const std::string effective_gis =
      gis_path.empty() ? config.gis_path : gis_path;
  const sbdloc::GisRaster gis =
      effective_gis.empty() ? sbdloc::GisRaster::zeros(config.grid)
                            : sbdloc::load_gis(effective_gis, config.grid);
  const sbdloc::EnergyMap map =
      sbdloc::build_energy_map(intersections, gis, config.weights);
  sbdloc::write_energy_raster(out / "energy.raster", out / "energy.json", map,
                              config.weights, sbdloc::config_hash(config));

  std::cout << "rays: " << rays.size()
            << "\nintersections: " << intersections.size() << "\n";
  return 0;
}

int cmd_run(const CommonArgs& args, const std::string& energy_path) {
  const sbdloc::PipelineConfig config = effective_config(args);
  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  const sbdloc::EnergyMap map = load_energy(energy_path);

  const auto start = std::chrono::steady_clock::now();
  const sbdloc::RunTrace trace =
      sbdloc::run(map, config.weights.alpha, config.sbd);
  const double wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  sbdloc::write_predictions_csv(out / "detections_out.csv", trace.best,
                                map.grid());
  sbdloc::write_trace_csv(out / "trace.csv", trace);
  const json manifest{
      {"command", "run"},
      {"config", sbdloc::config_to_json(config)},
      {"config_hash", sbdloc::hex64(sbdloc::config_hash(config))},
      {"seed", config.sbd.seed},
      {"iterations", trace.rows.size()},
      {"best_energy", trace.best_energy},
      {"best_size", trace.best.size()},
      {"improved_ever", trace.improved_ever},
      {"hit_max_iterations", trace.hit_max_iterations},
      {"warning", trace.warning},
      {"files", {"detections_out.csv", "trace.csv"}}};
  sbdloc::write_json_file(out / "run_manifest.json", manifest);

  std::cout << "iterations: " << trace.rows.size() << "\nbest_energy: "
            << trace.best_energy << "\nbest_size: " << trace.best.size()
            << "\nwall_time_s: " << wall_s << "\n";
  if (!trace.improved_ever) {
    std::cerr << "warning: run never improved on the empty configuration\n";
    return 3;
  }
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& predictions_path,
             const std::string& truth_path) {
  const sbdloc::PipelineConfig config = effective_config(args);
  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);

  const std::vector<sbdloc::GeoPoint> predictions =
      sbdloc::read_predictions_csv(predictions_path);
  const std::vector<sbdloc::GeoPoint> truth = truth_positions(truth_path);

  std::vector<sbdloc::MetricsRow> rows;
  for (int tau = 1; tau <= 5; ++tau) {
    const sbdloc::MatchResult result =
        sbdloc::match(predictions, truth, static_cast<double>(tau));
    rows.push_back({config.noise_level, static_cast<double>(tau),
                    sbdloc::precision_recall_f1(result, predictions.size(),
                                                truth.size())});
  }
  sbdloc::write_metrics_csv(out / "metrics.csv", rows);

  const json manifest{
      {"command", "eval"},
      {"config_hash", sbdloc::hex64(sbdloc::config_hash(config))},
      {"n_predictions", predictions.size()},
      {"n_truth", truth.size()},
      {"files", {"metrics.csv"}}};
  sbdloc::write_json_file(out / "eval_manifest.json", manifest);
  std::cout << "predictions: " << predictions.size()
            << "\ntruth: " << truth.size() << "\n";
  return 0;
}

int cmd_stability(const CommonArgs& args, const std::string& energy_path,
                  const std::string& truth_path, int runs) {
  const sbdloc::PipelineConfig config = effective_config(args);
  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  const sbdloc::EnergyMap map = load_energy(energy_path);
  const std::vector<sbdloc::GeoPoint> truth = truth_positions(truth_path);

  const sbdloc::BirthSamplerBank bank(map, config.sbd.birth);
  std::vector<std::vector<sbdloc::GeoPoint>> run_predictions;
  std::vector<double> pooled_gt;
  json run_entries = json::array();
  for (int k = 0; k < runs; ++k) {
    sbdloc::SbdParams params = config.sbd;
    params.seed = sbdloc::derive_seed(config.seed,
                                      "stability[" + std::to_string(k) + "]");
    const sbdloc::RunTrace trace =
        sbdloc::run(map, config.weights.alpha, params, &bank);
    const fs::path run_dir = out / ("run_" + std::to_string(k));
    fs::create_directories(run_dir);
    sbdloc::write_predictions_csv(run_dir / "detections_out.csv", trace.best,
                                  map.grid());
    sbdloc::write_trace_csv(run_dir / "trace.csv", trace);

    std::vector<sbdloc::GeoPoint> predictions;
    for (const sbdloc::ConfigPoint& point : trace.best) {
      predictions.push_back(sbdloc::unproject(point.x, map.grid()));
    }
    const sbdloc::MatchResult result =
        sbdloc::match(predictions, truth, sbdloc::kClusterRadiusM);
    for (const sbdloc::MatchPair& pair : result.pairs) {
      pooled_gt.push_back(pair.distance_m);
    }
    std::cout << "run " << k << ": seed " << params.seed << ", points "
              << predictions.size() << ", best_energy " << trace.best_energy
              << "\n";
    run_entries.push_back(json{{"seed", params.seed},
                               {"points", predictions.size()},
                               {"best_energy", trace.best_energy},
                               {"iterations", trace.rows.size()}});
    run_predictions.push_back(std::move(predictions));
  }

  const sbdloc::StabilityReport report =
      sbdloc::stability_clusters(run_predictions, truth);
  sbdloc::SummaryStats gt_stats;
  gt_stats.count = pooled_gt.size();
  if (!pooled_gt.empty()) {
    gt_stats.sd = sbdloc::population_sd(pooled_gt);
    gt_stats.median = sbdloc::median_of(pooled_gt);
  }
  const sbdloc::StabilityRow row{config.noise_level, report, gt_stats};
  sbdloc::write_stability_csv(out / "stability.csv", {&row, 1});

  const json manifest{
      {"command", "stability"},
      {"config", sbdloc::config_to_json(config)},
      {"config_hash", sbdloc::hex64(sbdloc::config_hash(config))},
      {"runs", run_entries},
      {"clustered", report.n_clustered},
      {"discarded", report.n_discarded},
      {"files", {"stability.csv"}}};
  sbdloc::write_json_file(out / "stability_manifest.json", manifest);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Street-furniture geolocation pipeline"};
  app.require_subcommand(1);

  CommonArgs simulate_args;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Generate a synthetic scenario (objects, cameras, detections)");
  add_common(simulate, &simulate_args);

  CommonArgs rasterize_args;
  std::string geojson_path;
  CLI::App* rasterize = app.add_subcommand(
      "rasterize-gis", "Rasterize a GeoJSON polygon collection to occupancy");
  add_common(rasterize, &rasterize_args);
  rasterize->add_option("--geojson", geojson_path, "GeoJSON input")
      ->required();

  CommonArgs energy_args;
  std::string detections_path, cameras_path, gis_flag;
  CLI::App* energy = app.add_subcommand(
      "energy", "Build the unary energy raster from detections");
  add_common(energy, &energy_args);
  energy->add_option("--detections", detections_path, "detections.csv")
      ->required();
  energy->add_option("--cameras", cameras_path, "cameras.csv")->required();
  energy->add_option("--gis", gis_flag,
                     "GIS occupancy (GeoJSON or raster sidecar); overrides "
                     "the config gis_path");

  CommonArgs run_args;
  std::string energy_sidecar;
  CLI::App* run_cmd =
      app.add_subcommand("run", "Optimize a configuration on an energy map");
  add_common(run_cmd, &run_args);
  run_cmd->add_option("--energy", energy_sidecar, "energy.json sidecar")
      ->required();

  CommonArgs eval_args;
  std::string predictions_path, truth_path;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Precision/recall/F1 of predictions against ground truth");
  add_common(eval_cmd, &eval_args);
  eval_cmd->add_option("--predictions", predictions_path, "detections_out.csv")
      ->required();
  eval_cmd->add_option("--truth", truth_path, "objects.csv")->required();

  CommonArgs stability_args;
  std::string stability_energy, stability_truth;
  int runs = 10;
  CLI::App* stability = app.add_subcommand(
      "stability", "Multi-seed runs with run-to-run stability statistics");
  add_common(stability, &stability_args);
  stability->add_option("--energy", stability_energy, "energy.json sidecar")
      ->required();
  stability->add_option("--truth", stability_truth, "objects.csv")->required();
  stability->add_option("--runs", runs, "Number of seeded runs")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(simulate_args);
    if (rasterize->parsed()) return cmd_rasterize_gis(rasterize_args, geojson_path);
    if (energy->parsed()) {
      return cmd_energy(energy_args, detections_path, cameras_path, gis_flag);
    }
    if (run_cmd->parsed()) return cmd_run(run_args, energy_sidecar);
    if (eval_cmd->parsed()) return cmd_eval(eval_args, predictions_path, truth_path);
    if (stability->parsed()) {
      return cmd_stability(stability_args, stability_energy, stability_truth,
                           runs);
    }
  } catch (const sbdloc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const sbdloc::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
