#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbdloc/io.hpp"

using namespace sbdloc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Fresh scratch directory per test case.
struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag) {
    path = fs::temp_directory_path() /
           (std::string("sbdloc_test_") + tag + "_" +
            std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const char* name) const { return path / name; }
};

GridSpec small_grid(int h = 40, int w = 40) {
  return GridSpec{{53.35, -6.26}, h, w, 0.25};
}

// Ring of [lon, lat] positions from planar corner coordinates.
json planar_ring(const std::vector<PlanarPoint>& corners,
                 const GridSpec& grid) {
  json ring = json::array();
  for (const PlanarPoint& p : corners) {
    const GeoPoint g = planar_to_geo(p, grid);
    ring.push_back({g.lon, g.lat});
  }
  ring.push_back(ring.front());  // close the ring
  return ring;
}

size_t occupied_count(const GisRaster& gis) {
  size_t n = 0;
  for (uint8_t v : gis.values()) n += v;
  return n;
}

}  // namespace

TEST_CASE("config parsing: defaults, overrides, and strict keys") {
  SUBCASE("empty object yields the documented defaults") {
    const PipelineConfig c = parse_config(json::object());
    CHECK(c.grid.height == 3600);
    CHECK(c.grid.width == 3600);
    CHECK(c.grid.resolution == 0.25);
    CHECK(c.weights.w1 == -3.0);
    CHECK(c.weights.w2 == 0.1);
    CHECK(c.weights.w3 == 0.4);
    CHECK(c.weights.alpha == 10.0);
    CHECK(c.sbd.n0 == 100.0);
    CHECK(c.sbd.epsilon == 0.999);
    CHECK(c.sbd.beta == 0.999);
    CHECK(c.sbd.t_wait == 500);
    CHECK(c.noise_level == 1);
    CHECK(c.layout.n_objects == 600);
    CHECK(c.layout.n_cameras == 1200);
    CHECK(c.seed == 0);
    CHECK(c.sbd.seed == 0);
  }

  SUBCASE("the canonical form round-trips with a stable hash") {
    json j{{"seed", 42},
           {"noise_level", 2},
           {"grid", {{"height", 800}, {"width", 400}}},
           {"sbd", {{"t_wait", 50}, {"schedule", "box"}}}};
    const PipelineConfig c = parse_config(j);
    CHECK(c.seed == 42);
    CHECK(c.sbd.seed == 42);  // top-level seed feeds the optimizer
    CHECK(c.noise_level == 2);
    CHECK(c.grid.height == 800);
    CHECK(c.sbd.schedule == ScheduleMode::kPerAlgorithmBox);

    const PipelineConfig again = parse_config(config_to_json(c));
    CHECK(config_hash(again) == config_hash(c));

    PipelineConfig other = c;
    other.seed = 43;
    CHECK(config_hash(other) != config_hash(c));
  }

  SUBCASE("unknown keys are fatal and named") {
    CHECK_THROWS_WITH_AS(parse_config(json{{"sede", 1}}),
                         doctest::Contains("sede"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(json{{"sbd", {{"n00", 5}}}}),
                         doctest::Contains("sbd.n00"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(json{{"grid", {{"depth", 5}}}}),
                         doctest::Contains("grid.depth"), ConfigError);
  }

  SUBCASE("type and constraint violations name the dotted key") {
    CHECK_THROWS_WITH_AS(parse_config(json{{"seed", "abc"}}),
                         doctest::Contains("seed"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(json{{"sbd", {{"epsilon", 1.2}}}}),
                         doctest::Contains("sbd.epsilon"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(json{{"grid", {{"height", 0}}}}),
                         doctest::Contains("grid.height"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(json{{"noise_level", 7}}),
                         doctest::Contains("noise_level"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_config(json{{"sbd", {{"radius_min", 5}, {"radius_max", 3}}}}),
        doctest::Contains("radius"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(json{{"lambda_c", 0.0}}),
                         doctest::Contains("lambda_c"), ConfigError);
  }

  SUBCASE("a missing gis file is a configuration error") {
    CHECK_THROWS_AS(parse_config(json{{"gis_path", "/no/such/file.geojson"}}),
                    ConfigError);
  }

  SUBCASE("load_config rejects unreadable or malformed files") {
    TempDir dir("cfg");
    CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
    write_text_file(dir / "bad.json", "{not json");
    CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
    write_text_file(dir / "ok.json", "{\"seed\": 7}");
    CHECK(load_config(dir / "ok.json").seed == 7);
  }
}

TEST_CASE("CSV round-trips preserve every value bit") {
  TempDir dir("csv");

  SUBCASE("objects and cameras") {
    std::vector<GroundTruthObject> objects{
        {"o00001", {53.351234567890123, -6.259876543210987}},
        {"o00002", {53.352, -6.261}}};
    write_objects_csv(dir / "objects.csv", objects);
    const auto back = read_objects_csv(dir / "objects.csv");
    REQUIRE(back.size() == 2);
    for (size_t k = 0; k < 2; ++k) {
      CHECK(back[k].id == objects[k].id);
      CHECK(back[k].position.lat == objects[k].position.lat);
      CHECK(back[k].position.lon == objects[k].position.lon);
    }

    std::vector<Camera> cameras{{"c00001", {53.3507, -6.2601}}};
    write_cameras_csv(dir / "cameras.csv", cameras);
    const auto cams = read_cameras_csv(dir / "cameras.csv");
    REQUIRE(cams.size() == 1);
    CHECK(cams[0].id == "c00001");
    CHECK(cams[0].position.lat == cameras[0].position.lat);
  }

  SUBCASE("detections, including the contamination flag") {
    std::vector<Detection> dets{
        {"c00001", 359.999999999, 19.123456789012345, 0.75000000001, false},
        {"c00002", 0.0, 0.5000000000001, 0.9999999, true}};
    write_detections_csv(dir / "d.csv", dets);
    const auto back = read_detections_csv(dir / "d.csv");
    REQUIRE(back.size() == 2);
    for (size_t k = 0; k < 2; ++k) {
      CHECK(back[k].camera_id == dets[k].camera_id);
      CHECK(back[k].bearing_deg == dets[k].bearing_deg);
      CHECK(back[k].distance_m == dets[k].distance_m);
      CHECK(back[k].confidence == dets[k].confidence);
      CHECK(back[k].is_contaminant == dets[k].is_contaminant);
    }
  }

  SUBCASE("predictions carry the back-projected geolocation") {
    const GridSpec grid = small_grid();
    const Configuration config{{{10, 20}, 3}, {{5, 5}, 10}};
    write_predictions_csv(dir / "p.csv", config, grid);
    const auto points = read_predictions_csv(dir / "p.csv");
    REQUIRE(points.size() == 2);
    const GeoPoint expect = unproject({10, 20}, grid);
    CHECK(points[0].lat == doctest::Approx(expect.lat).epsilon(1e-12));
    CHECK(points[0].lon == doctest::Approx(expect.lon).epsilon(1e-12));

    // radius_m = radius_px * resolution appears in the text output.
    const std::string text = read_text_file(dir / "p.csv");
    CHECK(text.find("pixel_i,pixel_j,radius_px,lat,lon,radius_m") == 0);
    CHECK(text.find("0.75") != std::string::npos);  // 3 px * 0.25 m
  }

  SUBCASE("trace rows") {
    RunTrace trace;
    trace.rows = {{0, 5, -1.5, -1.5, 5, 0}, {1, 3, -0.75, -1.5, 4, 6}};
    write_trace_csv(dir / "t.csv", trace);
    const std::string text = read_text_file(dir / "t.csv");
    CHECK(text.find("iteration,config_size,H,H_min,births,deaths\n") == 0);
    CHECK(text.find("0,5,-1.5,-1.5,5,0\n") != std::string::npos);
    CHECK(text.find("1,3,-0.75,-1.5,4,6\n") != std::string::npos);
  }

  SUBCASE("metrics and stability tables") {
    // All chosen values are binary-exact so %.17g prints them tersely.
    MetricsRow row;
    row.noise_level = 1;
    row.tau_m = 2.0;
    row.metrics = {0.75, 0.25, 0.375};
    write_metrics_csv(dir / "m.csv", std::vector<MetricsRow>{row});
    const std::string text = read_text_file(dir / "m.csv");
    CHECK(text.find("noise_level,tau_m,precision,recall,f1\n") == 0);
    CHECK(text.find("1,2,0.75,0.25,0.375") != std::string::npos);

    StabilityRow srow;
    srow.noise_level = 2;
    srow.report.within_cluster_m = {4, 0.75, 0.25};
    srow.report.run_counts = {10, 600.0, 5.5};
    srow.gt_distance = {0, 0.0, 0.0};  // empty: written as blank fields
    write_stability_csv(dir / "s.csv", std::vector<StabilityRow>{srow});
    const std::string stext = read_text_file(dir / "s.csv");
    CHECK(stext.find("noise_level,cluster_median_m,cluster_sd_m,count_median,"
                     "count_sd,gt_median_m,gt_sd_m\n") == 0);
    CHECK(stext.find("2,0.75,0.25,600,5.5,,\n") != std::string::npos);
  }

  SUBCASE("readers enforce the schema") {
    write_text_file(dir / "bad_header.csv", "id,lat\no1,53.35\n");
    CHECK_THROWS_WITH_AS(read_objects_csv(dir / "bad_header.csv"),
                         doctest::Contains("header"), DataError);

    write_text_file(dir / "bad_cols.csv", "id,lat,lon\no1,53.35\n");
    CHECK_THROWS_AS(read_objects_csv(dir / "bad_cols.csv"), DataError);

    write_text_file(dir / "bad_num.csv", "id,lat,lon\no1,53.35,abc\n");
    CHECK_THROWS_WITH_AS(read_objects_csv(dir / "bad_num.csv"),
                         doctest::Contains("lon"), DataError);

    write_text_file(dir / "empty.csv", "");
    CHECK_THROWS_AS(read_objects_csv(dir / "empty.csv"), DataError);

    // Domain checks on detections: confidence outside (0.5, 1).
    write_text_file(dir / "bad_conf.csv",
                    "camera_id,bearing_deg,distance_m,confidence,"
                    "is_contaminant\nc1,10,5,1.5,0\n");
    CHECK_THROWS_WITH_AS(read_detections_csv(dir / "bad_conf.csv"),
                         doctest::Contains("confidence"), DataError);
    write_text_file(dir / "bad_flag.csv",
                    "camera_id,bearing_deg,distance_m,confidence,"
                    "is_contaminant\nc1,10,5,0.8,maybe\n");
    CHECK_THROWS_AS(read_detections_csv(dir / "bad_flag.csv"), DataError);
  }
}

TEST_CASE("rasters round-trip with checksummed sidecars") {
  TempDir dir("raster");
  const GridSpec grid = small_grid(8, 6);

  EnergyMap map(grid);
  for (size_t k = 0; k < map.values().size(); ++k) {
    map.values()[k] = -3.7 + 0.31 * double(k);
  }

  SUBCASE("energy raster: float32 quantisation is the only loss") {
    write_energy_raster(dir / "e.raster", dir / "e.json", map,
                        EnergyWeights{}, 0xabcdef);
    const EnergyMap back = read_energy_raster(dir / "e.raster", dir / "e.json");
    CHECK(back.grid() == grid);
    for (size_t k = 0; k < map.values().size(); ++k) {
      CHECK(back.values()[k] == double(float(map.values()[k])));
    }

    // Writing the read-back map again is byte-identical.
    write_energy_raster(dir / "e2.raster", dir / "e2.json", back,
                        EnergyWeights{}, 0xabcdef);
    CHECK(read_text_file(dir / "e.raster") == read_text_file(dir / "e2.raster"));

    const json sidecar = read_json_file(dir / "e.json");
    CHECK(sidecar.at("kind") == "energy");
    CHECK(sidecar.at("config_hash") == hex64(0xabcdef));
    CHECK(sidecar.at("grid").at("height") == 8);
  }

  SUBCASE("corruption is detected via the checksum") {
    write_energy_raster(dir / "e.raster", dir / "e.json", map,
                        EnergyWeights{}, 1);
    std::string bytes = read_text_file(dir / "e.raster");
    bytes[5] = char(bytes[5] ^ 0x40);
    write_text_file(dir / "e.raster", bytes);
    CHECK_THROWS_WITH_AS(read_energy_raster(dir / "e.raster", dir / "e.json"),
                         doctest::Contains("checksum"), DataError);
  }

  SUBCASE("size mismatches and kind mismatches are fatal") {
    write_energy_raster(dir / "e.raster", dir / "e.json", map,
                        EnergyWeights{}, 1);
    std::string bytes = read_text_file(dir / "e.raster");
    bytes.resize(bytes.size() - 4);
    write_text_file(dir / "e.raster", bytes);
    CHECK_THROWS_AS(read_energy_raster(dir / "e.raster", dir / "e.json"),
                    DataError);

    GisRaster gis = GisRaster::zeros(grid);
    write_gis_raster(dir / "g.raster", dir / "g.json", gis, 1);
    CHECK_THROWS_AS(read_energy_raster(dir / "g.raster", dir / "g.json"),
                    DataError);  // kind 'gis' where 'energy' expected
  }

  SUBCASE("gis rasters survive the trip and must stay binary") {
    GisRaster gis = GisRaster::zeros(grid);
    gis.values()[3] = 1;
    gis.values()[17] = 1;
    write_gis_raster(dir / "g.raster", dir / "g.json", gis, 2);
    const GisRaster back = read_gis_raster(dir / "g.raster", dir / "g.json");
    CHECK(back.grid() == grid);
    for (size_t k = 0; k < gis.values().size(); ++k) {
      CHECK(back.values()[k] == gis.values()[k]);
    }

    // A non-binary payload with a *valid* checksum still fails validation.
    std::string bytes;
    for (size_t k = 0; k < grid.pixel_count(); ++k) {
      const uint32_t half = 0x3f000000;  // 0.5f little-endian
      bytes.push_back(char(half & 0xff));
      bytes.push_back(char((half >> 8) & 0xff));
      bytes.push_back(char((half >> 16) & 0xff));
      bytes.push_back(char((half >> 24) & 0xff));
    }
    write_text_file(dir / "h.raster", bytes);
    json sidecar = read_json_file(dir / "g.json");
    sidecar["checksum"] = hex64(fnv1a64(bytes));
    sidecar["raster_file"] = "h.raster";
    write_json_file(dir / "h.json", sidecar);
    CHECK_THROWS_WITH_AS(read_gis_raster(dir / "h.raster", dir / "h.json"),
                         doctest::Contains("binary"), DataError);
  }
}

TEST_CASE("GeoJSON polygons rasterize under the even-odd pixel-centre rule") {
  const GridSpec grid = small_grid();  // 40 x 40 at 0.25 m = 10 m x 10 m

  SUBCASE("an axis-aligned square covers exactly its centre lattice") {
    const json poly{{"type", "Polygon"},
                    {"coordinates",
                     json::array({planar_ring({{0.0, 0.0},
                                               {2.5, 0.0},
                                               {2.5, 2.5},
                                               {0.0, 2.5}},
                                              grid)})}};
    const GisRaster gis = rasterize_geojson(poly, grid);
    CHECK(occupied_count(gis) == 100);  // 10 x 10 pixel centres inside
    CHECK(gis.at({1, 1}) == 1);
    CHECK(gis.at({10, 10}) == 1);
    CHECK(gis.at({11, 10}) == 0);
    CHECK(gis.at({10, 11}) == 0);
  }

  SUBCASE("holes are carved out by the even-odd rule") {
    const json poly{
        {"type", "Polygon"},
        {"coordinates",
         json::array(
             {planar_ring({{0.0, 0.0}, {5.0, 0.0}, {5.0, 5.0}, {0.0, 5.0}},
                          grid),
              planar_ring({{1.0, 1.0}, {2.0, 1.0}, {2.0, 2.0}, {1.0, 2.0}},
                          grid)})}};
    const GisRaster gis = rasterize_geojson(poly, grid);
    CHECK(occupied_count(gis) == 400 - 16);
    CHECK(gis.at({1, 1}) == 1);
    CHECK(gis.at({6, 6}) == 0);   // centre (1.375, 1.375): inside the hole
    CHECK(gis.at({12, 12}) == 1); // outside the hole, inside the outer ring
  }

  SUBCASE("MultiPolygon, Feature, and FeatureCollection wrappers") {
    const json ring_a = planar_ring(
        {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}}, grid);
    const json ring_b = planar_ring(
        {{5.0, 5.0}, {6.0, 5.0}, {6.0, 6.0}, {5.0, 6.0}}, grid);
    const json multi{{"type", "MultiPolygon"},
                     {"coordinates",
                      json::array({json::array({ring_a}),
                                   json::array({ring_b})})}};
    CHECK(occupied_count(rasterize_geojson(multi, grid)) == 32);

    const json feature{{"type", "Feature"}, {"geometry", multi}};
    CHECK(occupied_count(rasterize_geojson(feature, grid)) == 32);

    const json null_feature{{"type", "Feature"}, {"geometry", nullptr}};
    const json collection{
        {"type", "FeatureCollection"},
        {"features", json::array({feature, null_feature})}};
    CHECK(occupied_count(rasterize_geojson(collection, grid)) == 32);
  }

  SUBCASE("unsupported geometry types are fatal") {
    const json point{{"type", "Point"}, {"coordinates", {-6.26, 53.35}}};
    CHECK_THROWS_AS(rasterize_geojson(point, grid), DataError);
  }

  SUBCASE("load_gis dispatches on extension and content") {
    TempDir dir("gis");
    const json poly{{"type", "Polygon"},
                    {"coordinates",
                     json::array({planar_ring({{0.0, 0.0},
                                               {1.0, 0.0},
                                               {1.0, 1.0},
                                               {0.0, 1.0}},
                                              grid)})}};
    write_json_file(dir / "area.geojson", poly);
    CHECK(occupied_count(load_gis(dir / "area.geojson", grid)) == 16);

    // A GeoJSON payload in a .json file still rasterizes.
    write_json_file(dir / "area.json", poly);
    CHECK(occupied_count(load_gis(dir / "area.json", grid)) == 16);

    // A raster sidecar loads back, but only onto the matching grid.
    GisRaster gis = GisRaster::zeros(grid);
    gis.values()[0] = 1;
    write_gis_raster(dir / "g.raster", dir / "g.json", gis, 3);
    CHECK(occupied_count(load_gis(dir / "g.json", grid)) == 1);
    CHECK_THROWS_WITH_AS(load_gis(dir / "g.json", small_grid(20, 20)),
                         doctest::Contains("grid"), DataError);

    CHECK_THROWS_AS(load_gis(dir / "area.txt", grid), DataError);
  }
}

TEST_CASE("hex64 is fixed-width lowercase hex") {
  CHECK(hex64(0) == "0000000000000000");
  CHECK(hex64(0xabcdef) == "0000000000abcdef");
  CHECK(hex64(0xffffffffffffffffull) == "ffffffffffffffff");
}
