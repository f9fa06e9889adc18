#include "sbdloc/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

namespace sbdloc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double_field(const fs::path& file, size_t row, const char* column,
                          const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || text.empty()) {
    throw DataError(file.string() + ": row " + std::to_string(row) +
                    ", column '" + column + "': not a number: '" + text + "'");
  }
  return v;
}

bool parse_bool_field(const fs::path& file, size_t row, const char* column,
                      const std::string& text) {
  if (text == "0") return false;
  if (text == "1") return true;
  throw DataError(file.string() + ": row " + std::to_string(row) +
                  ", column '" + column + "': expected 0 or 1, got '" + text +
                  "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  for (;;) {
    const size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

// Rows of a strict-schema CSV: header must match exactly, every row must have
// the full column count. Row numbers in errors are 1-based data rows.
std::vector<std::vector<std::string>> read_csv(
    const fs::path& path, const std::vector<std::string>& header) {
  const std::string text = read_text_file(path);
  std::vector<std::vector<std::string>> rows;
  size_t pos = 0;
  size_t line_index = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = eol + 1;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (line_index == 0) {
      if (fields != header) {
        std::string expected;
        for (const std::string& h : header) {
          if (!expected.empty()) expected += ',';
          expected += h;
        }
        throw DataError(path.string() + ": expected header '" + expected +
                        "', got '" + line + "'");
      }
    } else {
      if (fields.size() != header.size()) {
        throw DataError(path.string() + ": row " + std::to_string(line_index) +
                        ": expected " + std::to_string(header.size()) +
                        " columns, got " + std::to_string(fields.size()));
      }
      rows.push_back(std::move(fields));
    }
    ++line_index;
  }
  if (line_index == 0) {
    throw DataError(path.string() + ": empty file (missing header)");
  }
  return rows;
}

// --- config helpers --------------------------------------------------------

void check_keys(const json& j, const std::string& scope,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) {
    throw ConfigError("config: " + (scope.empty() ? "root" : scope) +
                      " must be an object");
  }
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("config: unknown key '" + scope + item.key() + "'");
    }
  }
}

const json* find(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_double(const json& j, const std::string& scope, const char* key,
                  double def) {
  const json* v = find(j, key);
  if (v == nullptr) return def;
  if (!v->is_number()) {
    throw ConfigError("config: " + scope + key + " must be a number");
  }
  return v->get<double>();
}

int get_int(const json& j, const std::string& scope, const char* key,
            int def) {
  const json* v = find(j, key);
  if (v == nullptr) return def;
  if (!v->is_number_integer()) {
    throw ConfigError("config: " + scope + key + " must be an integer");
  }
  return v->get<int>();
}

uint64_t get_u64(const json& j, const std::string& scope, const char* key,
                 uint64_t def) {
  const json* v = find(j, key);
  if (v == nullptr) return def;
  if (!v->is_number_unsigned() && !v->is_number_integer()) {
    throw ConfigError("config: " + scope + key +
                      " must be a nonnegative integer");
  }
  if (v->is_number_integer() && v->get<int64_t>() < 0) {
    throw ConfigError("config: " + scope + key +
                      " must be a nonnegative integer");
  }
  return v->get<uint64_t>();
}

std::string get_string(const json& j, const std::string& scope,
                       const char* key, const std::string& def) {
  const json* v = find(j, key);
  if (v == nullptr) return def;
  if (!v->is_string()) {
    throw ConfigError("config: " + scope + key + " must be a string");
  }
  return v->get<std::string>();
}

void require_finite(double v, const char* key) {
  if (!std::isfinite(v)) {
    throw ConfigError(std::string("config: ") + key + " must be finite");
  }
}

// --- raster helpers --------------------------------------------------------

std::string encode_f32_le(std::span<const double> values) {
  std::string bytes(values.size() * 4, '\0');
  for (size_t k = 0; k < values.size(); ++k) {
    const float f = static_cast<float>(values[k]);
    uint32_t u;
    std::memcpy(&u, &f, 4);
    bytes[4 * k + 0] = static_cast<char>(u & 0xff);
    bytes[4 * k + 1] = static_cast<char>((u >> 8) & 0xff);
    bytes[4 * k + 2] = static_cast<char>((u >> 16) & 0xff);
    bytes[4 * k + 3] = static_cast<char>((u >> 24) & 0xff);
  }
  return bytes;
}

std::vector<double> decode_f32_le(const std::string& bytes) {
  std::vector<double> values(bytes.size() / 4);
  for (size_t k = 0; k < values.size(); ++k) {
    const uint32_t u =
        static_cast<uint32_t>(static_cast<unsigned char>(bytes[4 * k + 0])) |
        (static_cast<uint32_t>(static_cast<unsigned char>(bytes[4 * k + 1]))
         << 8) |
        (static_cast<uint32_t>(static_cast<unsigned char>(bytes[4 * k + 2]))
         << 16) |
        (static_cast<uint32_t>(static_cast<unsigned char>(bytes[4 * k + 3]))
         << 24);
    float f;
    std::memcpy(&f, &u, 4);
    values[k] = static_cast<double>(f);
  }
  return values;
}

json grid_to_json(const GridSpec& grid) {
  return json{{"origin_lat", grid.origin.lat},
              {"origin_lon", grid.origin.lon},
              {"height", grid.height},
              {"width", grid.width},
              {"resolution", grid.resolution}};
}

GridSpec grid_from_sidecar(const json& j, const fs::path& file) {
  const json* g = find(j, "grid");
  if (g == nullptr || !g->is_object()) {
    throw DataError(file.string() + ": sidecar missing 'grid' object");
  }
  GridSpec grid;
  try {
    grid.origin.lat = g->at("origin_lat").get<double>();
    grid.origin.lon = g->at("origin_lon").get<double>();
    grid.height = g->at("height").get<int>();
    grid.width = g->at("width").get<int>();
    grid.resolution = g->at("resolution").get<double>();
  } catch (const json::exception& e) {
    throw DataError(file.string() + ": bad sidecar grid: " + e.what());
  }
  if (grid.height < 1 || grid.width < 1 || !(grid.resolution > 0.0)) {
    throw DataError(file.string() + ": sidecar grid has invalid dimensions");
  }
  return grid;
}

// Raw raster bytes validated against the sidecar's shape and checksum.
std::string read_raster_bytes(const fs::path& raster_path, const json& sidecar,
                              const fs::path& sidecar_path,
                              const GridSpec& grid) {
  const std::string bytes = read_text_file(raster_path);
  const size_t expected = grid.pixel_count() * 4;
  if (bytes.size() != expected) {
    throw DataError(raster_path.string() + ": size " +
                    std::to_string(bytes.size()) + " bytes, expected " +
                    std::to_string(expected));
  }
  const json* checksum = find(sidecar, "checksum");
  if (checksum == nullptr || !checksum->is_string()) {
    throw DataError(sidecar_path.string() + ": sidecar missing 'checksum'");
  }
  if (checksum->get<std::string>() != hex64(fnv1a64(bytes))) {
    throw DataError(raster_path.string() +
                    ": checksum mismatch (corrupt raster)");
  }
  return bytes;
}

std::string expect_kind(const json& sidecar, const fs::path& sidecar_path,
                        const std::string& kind) {
  const std::string got = sidecar.value("kind", std::string());
  if (got != kind) {
    throw DataError(sidecar_path.string() + ": sidecar kind '" + got +
                    "', expected '" + kind + "'");
  }
  return got;
}

// --- GeoJSON ---------------------------------------------------------------

using Ring = std::vector<PlanarPoint>;
using Polygon = std::vector<Ring>;

Ring parse_ring(const json& coords, const GridSpec& grid) {
  if (!coords.is_array()) throw DataError("geojson: ring must be an array");
  Ring ring;
  ring.reserve(coords.size());
  for (const json& vertex : coords) {
    if (!vertex.is_array() || vertex.size() < 2 || !vertex[0].is_number() ||
        !vertex[1].is_number()) {
      throw DataError("geojson: vertex must be a [lon, lat] array");
    }
    ring.push_back(to_planar(
        GeoPoint{vertex[1].get<double>(), vertex[0].get<double>()}, grid));
  }
  return ring;
}

void collect_polygons(const json& node, const GridSpec& grid,
                      std::vector<Polygon>* out) {
  const std::string type = node.value("type", std::string());
  if (type == "FeatureCollection") {
    const json* features = find(node, "features");
    if (features == nullptr || !features->is_array()) {
      throw DataError("geojson: FeatureCollection missing 'features' array");
    }
    for (const json& feature : *features) collect_polygons(feature, grid, out);
  } else if (type == "Feature") {
    const json* geometry = find(node, "geometry");
    if (geometry == nullptr || geometry->is_null()) return;
    collect_polygons(*geometry, grid, out);
  } else if (type == "Polygon") {
    Polygon polygon;
    for (const json& ring : node.at("coordinates")) {
      polygon.push_back(parse_ring(ring, grid));
    }
    out->push_back(std::move(polygon));
  } else if (type == "MultiPolygon") {
    for (const json& part : node.at("coordinates")) {
      Polygon polygon;
      for (const json& ring : part) polygon.push_back(parse_ring(ring, grid));
      out->push_back(std::move(polygon));
    }
  } else {
    throw DataError("geojson: unsupported type '" + type + "'");
  }
}

bool even_odd_inside(const Polygon& polygon, PlanarPoint p) {
  bool inside = false;
  for (const Ring& ring : polygon) {
    const size_t n = ring.size();
    for (size_t a = 0; a < n; ++a) {
      const PlanarPoint& u = ring[a];
      const PlanarPoint& v = ring[(a + 1) % n];
      if ((u.north > p.north) == (v.north > p.north)) continue;
      const double x_cross =
          u.east + (p.north - u.north) * (v.east - u.east) /
                       (v.north - u.north);
      if (p.east < x_cross) inside = !inside;
    }
  }
  return inside;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

PipelineConfig parse_config(const json& j) {
  check_keys(j, "", {"grid", "weights", "sbd", "noise_level", "lambda_c",
                     "seed", "layout", "gis_path"});
  PipelineConfig config;

  if (const json* g = find(j, "grid")) {
    check_keys(*g, "grid.",
               {"origin_lat", "origin_lon", "height", "width", "resolution"});
    config.grid.origin.lat =
        get_double(*g, "grid.", "origin_lat", config.grid.origin.lat);
    config.grid.origin.lon =
        get_double(*g, "grid.", "origin_lon", config.grid.origin.lon);
    config.grid.height = get_int(*g, "grid.", "height", config.grid.height);
    config.grid.width = get_int(*g, "grid.", "width", config.grid.width);
    config.grid.resolution =
        get_double(*g, "grid.", "resolution", config.grid.resolution);
  }
  if (const json* w = find(j, "weights")) {
    check_keys(*w, "weights.", {"w1", "w2", "w3", "alpha", "c_sigma"});
    config.weights.w1 = get_double(*w, "weights.", "w1", config.weights.w1);
    config.weights.w2 = get_double(*w, "weights.", "w2", config.weights.w2);
    config.weights.w3 = get_double(*w, "weights.", "w3", config.weights.w3);
    config.weights.alpha =
        get_double(*w, "weights.", "alpha", config.weights.alpha);
    config.weights.c_sigma =
        get_double(*w, "weights.", "c_sigma", config.weights.c_sigma);
  }
  if (const json* s = find(j, "sbd")) {
    check_keys(*s, "sbd.",
               {"n0", "epsilon", "beta", "t_wait", "max_iterations",
                "schedule", "birth", "radius_min", "radius_max"});
    config.sbd.n0 = get_double(*s, "sbd.", "n0", config.sbd.n0);
    config.sbd.epsilon = get_double(*s, "sbd.", "epsilon", config.sbd.epsilon);
    config.sbd.beta = get_double(*s, "sbd.", "beta", config.sbd.beta);
    config.sbd.t_wait = get_int(*s, "sbd.", "t_wait", config.sbd.t_wait);
    config.sbd.max_iterations =
        get_int(*s, "sbd.", "max_iterations", config.sbd.max_iterations);
    config.sbd.radius_min =
        get_int(*s, "sbd.", "radius_min", config.sbd.radius_min);
    config.sbd.radius_max =
        get_int(*s, "sbd.", "radius_max", config.sbd.radius_max);
    const std::string schedule =
        get_string(*s, "sbd.", "schedule",
                   config.sbd.schedule == ScheduleMode::kPerText ? "text"
                                                                 : "box");
    if (schedule == "text") {
      config.sbd.schedule = ScheduleMode::kPerText;
    } else if (schedule == "box") {
      config.sbd.schedule = ScheduleMode::kPerAlgorithmBox;
    } else {
      throw ConfigError("config: sbd.schedule must be 'text' or 'box'");
    }
    const std::string birth =
        get_string(*s, "sbd.", "birth",
                   config.sbd.birth == BirthMode::kBoltzmann ? "boltzmann"
                                                             : "literal");
    if (birth == "boltzmann") {
      config.sbd.birth = BirthMode::kBoltzmann;
    } else if (birth == "literal") {
      config.sbd.birth = BirthMode::kLiteral;
    } else {
      throw ConfigError("config: sbd.birth must be 'boltzmann' or 'literal'");
    }
  }
  config.noise_level = get_int(j, "", "noise_level", config.noise_level);
  config.lambda_c = get_double(j, "", "lambda_c", config.lambda_c);
  config.seed = get_u64(j, "", "seed", config.seed);
  if (const json* l = find(j, "layout")) {
    check_keys(*l, "layout.", {"n_objects", "n_cameras"});
    config.layout.n_objects =
        get_int(*l, "layout.", "n_objects", config.layout.n_objects);
    config.layout.n_cameras =
        get_int(*l, "layout.", "n_cameras", config.layout.n_cameras);
  }
  config.gis_path = get_string(j, "", "gis_path", config.gis_path);

  // Constraint validation, naming the failing key.
  if (config.grid.height < 1) throw ConfigError("config: grid.height must be >= 1");
  if (config.grid.width < 1) throw ConfigError("config: grid.width must be >= 1");
  if (!(config.grid.resolution > 0.0)) {
    throw ConfigError("config: grid.resolution must be > 0");
  }
  if (config.grid.origin.lat < -90.0 || config.grid.origin.lat > 90.0) {
    throw ConfigError("config: grid.origin_lat must be in [-90, 90]");
  }
  if (config.grid.origin.lon < -180.0 || config.grid.origin.lon > 180.0) {
    throw ConfigError("config: grid.origin_lon must be in [-180, 180]");
  }
  require_finite(config.weights.w1, "weights.w1");
  require_finite(config.weights.w2, "weights.w2");
  require_finite(config.weights.w3, "weights.w3");
  if (!(config.weights.alpha >= 0.0)) {
    throw ConfigError("config: weights.alpha must be >= 0");
  }
  if (!(config.weights.c_sigma > 0.0)) {
    throw ConfigError("config: weights.c_sigma must be > 0");
  }
  if (!(config.sbd.n0 > 0.0)) throw ConfigError("config: sbd.n0 must be > 0");
  if (!(config.sbd.epsilon > 0.0 && config.sbd.epsilon < 1.0)) {
    throw ConfigError("config: sbd.epsilon must be in (0, 1)");
  }
  if (!(config.sbd.beta > 0.0)) {
    throw ConfigError("config: sbd.beta must be > 0");
  }
  if (config.sbd.t_wait < 1) {
    throw ConfigError("config: sbd.t_wait must be >= 1");
  }
  if (config.sbd.max_iterations < 1) {
    throw ConfigError("config: sbd.max_iterations must be >= 1");
  }
  if (config.sbd.radius_min < kRadiusMinPx ||
      config.sbd.radius_max > kRadiusMaxPx ||
      config.sbd.radius_min > config.sbd.radius_max) {
    throw ConfigError(
        "config: sbd.radius_min/radius_max must satisfy 2 <= min <= max <= 10");
  }
  if (config.noise_level < 0 || config.noise_level > 3) {
    throw ConfigError("config: noise_level must be in {0,1,2,3}");
  }
  if (!(config.lambda_c > 0.0)) {
    throw ConfigError("config: lambda_c must be > 0");
  }
  if (config.layout.n_objects < 1) {
    throw ConfigError("config: layout.n_objects must be >= 1");
  }
  if (config.layout.n_cameras < 1) {
    throw ConfigError("config: layout.n_cameras must be >= 1");
  }
  if (!config.gis_path.empty() && !fs::exists(config.gis_path)) {
    throw ConfigError("config: gis_path does not exist: " + config.gis_path);
  }
  config.sbd.seed = config.seed;
  return config;
}

PipelineConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_config(j);
}

json config_to_json(const PipelineConfig& config) {
  return json{
      {"grid", grid_to_json(config.grid)},
      {"weights",
       {{"w1", config.weights.w1},
        {"w2", config.weights.w2},
        {"w3", config.weights.w3},
        {"alpha", config.weights.alpha},
        {"c_sigma", config.weights.c_sigma}}},
      {"sbd",
       {{"n0", config.sbd.n0},
        {"epsilon", config.sbd.epsilon},
        {"beta", config.sbd.beta},
        {"t_wait", config.sbd.t_wait},
        {"max_iterations", config.sbd.max_iterations},
        {"schedule",
         config.sbd.schedule == ScheduleMode::kPerText ? "text" : "box"},
        {"birth",
         config.sbd.birth == BirthMode::kBoltzmann ? "boltzmann" : "literal"},
        {"radius_min", config.sbd.radius_min},
        {"radius_max", config.sbd.radius_max}}},
      {"noise_level", config.noise_level},
      {"lambda_c", config.lambda_c},
      {"seed", config.seed},
      {"layout",
       {{"n_objects", config.layout.n_objects},
        {"n_cameras", config.layout.n_cameras}}},
      {"gis_path", config.gis_path}};
}

uint64_t config_hash(const PipelineConfig& config) {
  return fnv1a64(config_to_json(config).dump());
}

std::string hex64(uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

// ---------------------------------------------------------------------------
// CSV

void write_objects_csv(const fs::path& path,
                       std::span<const GroundTruthObject> objects) {
  std::string out = "id,lat,lon\n";
  for (const GroundTruthObject& object : objects) {
    out += object.id + ',' + fmt_double(object.position.lat) + ',' +
           fmt_double(object.position.lon) + '\n';
  }
  write_text_file(path, out);
}

std::vector<GroundTruthObject> read_objects_csv(const fs::path& path) {
  const auto rows = read_csv(path, {"id", "lat", "lon"});
  std::vector<GroundTruthObject> objects;
  objects.reserve(rows.size());
  size_t row_number = 1;
  for (const auto& row : rows) {
    objects.push_back(
        {row[0],
         {parse_double_field(path, row_number, "lat", row[1]),
          parse_double_field(path, row_number, "lon", row[2])}});
    ++row_number;
  }
  return objects;
}

void write_cameras_csv(const fs::path& path, std::span<const Camera> cameras) {
  std::string out = "id,lat,lon\n";
  for (const Camera& camera : cameras) {
    out += camera.id + ',' + fmt_double(camera.position.lat) + ',' +
           fmt_double(camera.position.lon) + '\n';
  }
  write_text_file(path, out);
}

std::vector<Camera> read_cameras_csv(const fs::path& path) {
  const auto rows = read_csv(path, {"id", "lat", "lon"});
  std::vector<Camera> cameras;
  cameras.reserve(rows.size());
  size_t row_number = 1;
  for (const auto& row : rows) {
    cameras.push_back(
        {row[0],
         {parse_double_field(path, row_number, "lat", row[1]),
          parse_double_field(path, row_number, "lon", row[2])}});
    ++row_number;
  }
  return cameras;
}

void write_detections_csv(const fs::path& path,
                          std::span<const Detection> detections) {
  std::string out =
      "camera_id,bearing_deg,distance_m,confidence,is_contaminant\n";
  for (const Detection& det : detections) {
    out += det.camera_id + ',' + fmt_double(det.bearing_deg) + ',' +
           fmt_double(det.distance_m) + ',' + fmt_double(det.confidence) +
           ',' + (det.is_contaminant ? "1" : "0") + '\n';
  }
  write_text_file(path, out);
}

std::vector<Detection> read_detections_csv(const fs::path& path) {
  const auto rows = read_csv(path, {"camera_id", "bearing_deg", "distance_m",
                                    "confidence", "is_contaminant"});
  std::vector<Detection> detections;
  detections.reserve(rows.size());
  size_t row_number = 1;
  for (const auto& row : rows) {
    Detection det;
    det.camera_id = row[0];
    det.bearing_deg =
        parse_double_field(path, row_number, "bearing_deg", row[1]);
    det.distance_m =
        parse_double_field(path, row_number, "distance_m", row[2]);
    det.confidence =
        parse_double_field(path, row_number, "confidence", row[3]);
    det.is_contaminant =
        parse_bool_field(path, row_number, "is_contaminant", row[4]);
    if (!(det.distance_m > 0.0)) {
      throw DataError(path.string() + ": row " + std::to_string(row_number) +
                      ", column 'distance_m': must be > 0");
    }
    if (!(det.confidence > 0.5 && det.confidence < 1.0)) {
      throw DataError(path.string() + ": row " + std::to_string(row_number) +
                      ", column 'confidence': must be in (0.5, 1)");
    }
    detections.push_back(std::move(det));
    ++row_number;
  }
  return detections;
}

void write_trace_csv(const fs::path& path, const RunTrace& trace) {
  std::string out = "iteration,config_size,H,H_min,births,deaths\n";
  for (const TraceRow& row : trace.rows) {
    out += std::to_string(row.iteration) + ',' +
           std::to_string(row.config_size) + ',' + fmt_double(row.energy) +
           ',' + fmt_double(row.best_energy) + ',' +
           std::to_string(row.births) + ',' + std::to_string(row.deaths) +
           '\n';
  }
  write_text_file(path, out);
}

void write_predictions_csv(const fs::path& path, const Configuration& config,
                           const GridSpec& grid) {
  std::string out = "pixel_i,pixel_j,radius_px,lat,lon,radius_m\n";
  for (const ConfigPoint& point : config) {
    const GeoPoint geo = unproject(point.x, grid);
    out += std::to_string(point.x.i) + ',' + std::to_string(point.x.j) + ',' +
           std::to_string(point.r) + ',' + fmt_double(geo.lat) + ',' +
           fmt_double(geo.lon) + ',' +
           fmt_double(point.r * grid.resolution) + '\n';
  }
  write_text_file(path, out);
}

std::vector<GeoPoint> read_predictions_csv(const fs::path& path) {
  const auto rows = read_csv(
      path, {"pixel_i", "pixel_j", "radius_px", "lat", "lon", "radius_m"});
  std::vector<GeoPoint> points;
  points.reserve(rows.size());
  size_t row_number = 1;
  for (const auto& row : rows) {
    points.push_back({parse_double_field(path, row_number, "lat", row[3]),
                      parse_double_field(path, row_number, "lon", row[4])});
    ++row_number;
  }
  return points;
}

void write_metrics_csv(const fs::path& path,
                       std::span<const MetricsRow> rows) {
  std::string out = "noise_level,tau_m,precision,recall,f1\n";
  for (const MetricsRow& row : rows) {
    out += std::to_string(row.noise_level) + ',' + fmt_double(row.tau_m) +
           ',' + fmt_double(row.metrics.precision) + ',' +
           fmt_double(row.metrics.recall) + ',' + fmt_double(row.metrics.f1) +
           '\n';
  }
  write_text_file(path, out);
}

void write_stability_csv(const fs::path& path,
                         std::span<const StabilityRow> rows) {
  std::string out =
      "noise_level,cluster_median_m,cluster_sd_m,count_median,count_sd,"
      "gt_median_m,gt_sd_m\n";
  auto stat = [](const SummaryStats& s, double SummaryStats::*field) {
    return s.count == 0 ? std::string() : fmt_double(s.*field);
  };
  for (const StabilityRow& row : rows) {
    out += std::to_string(row.noise_level) + ',' +
           stat(row.report.within_cluster_m, &SummaryStats::median) + ',' +
           stat(row.report.within_cluster_m, &SummaryStats::sd) + ',' +
           stat(row.report.run_counts, &SummaryStats::median) + ',' +
           stat(row.report.run_counts, &SummaryStats::sd) + ',' +
           stat(row.gt_distance, &SummaryStats::median) + ',' +
           stat(row.gt_distance, &SummaryStats::sd) + '\n';
  }
  write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// Rasters

void write_energy_raster(const fs::path& raster_path,
                         const fs::path& sidecar_path, const EnergyMap& map,
                         const EnergyWeights& weights, uint64_t cfg_hash) {
  const std::string bytes = encode_f32_le(map.values());
  write_text_file(raster_path, bytes);
  const json sidecar{{"kind", "energy"},
                     {"grid", grid_to_json(map.grid())},
                     {"weights",
                      {{"w1", weights.w1},
                       {"w2", weights.w2},
                       {"w3", weights.w3},
                       {"alpha", weights.alpha},
                       {"c_sigma", weights.c_sigma}}},
                     {"checksum", hex64(fnv1a64(bytes))},
                     {"config_hash", hex64(cfg_hash)},
                     {"raster_file", raster_path.filename().string()}};
  write_json_file(sidecar_path, sidecar);
}

EnergyMap read_energy_raster(const fs::path& raster_path,
                             const fs::path& sidecar_path) {
  const json sidecar = read_json_file(sidecar_path);
  expect_kind(sidecar, sidecar_path, "energy");
  const GridSpec grid = grid_from_sidecar(sidecar, sidecar_path);
  const std::string bytes =
      read_raster_bytes(raster_path, sidecar, sidecar_path, grid);
  return EnergyMap(grid, decode_f32_le(bytes));
}

void write_gis_raster(const fs::path& raster_path,
                      const fs::path& sidecar_path, const GisRaster& gis,
                      uint64_t cfg_hash) {
  std::vector<double> values(gis.values().begin(), gis.values().end());
  const std::string bytes = encode_f32_le(values);
  write_text_file(raster_path, bytes);
  const json sidecar{{"kind", "gis"},
                     {"grid", grid_to_json(gis.grid())},
                     {"checksum", hex64(fnv1a64(bytes))},
                     {"config_hash", hex64(cfg_hash)},
                     {"raster_file", raster_path.filename().string()}};
  write_json_file(sidecar_path, sidecar);
}

GisRaster read_gis_raster(const fs::path& raster_path,
                          const fs::path& sidecar_path) {
  const json sidecar = read_json_file(sidecar_path);
  expect_kind(sidecar, sidecar_path, "gis");
  const GridSpec grid = grid_from_sidecar(sidecar, sidecar_path);
  const std::string bytes =
      read_raster_bytes(raster_path, sidecar, sidecar_path, grid);
  const std::vector<double> values = decode_f32_le(bytes);
  std::vector<uint8_t> occupancy(values.size());
  for (size_t k = 0; k < values.size(); ++k) {
    if (values[k] == 0.0) {
      occupancy[k] = 0;
    } else if (values[k] == 1.0) {
      occupancy[k] = 1;
    } else {
      throw DataError(raster_path.string() + ": value at index " +
                      std::to_string(k) + " is not binary");
    }
  }
  return GisRaster(grid, std::move(occupancy));
}

GisRaster rasterize_geojson(const json& geojson, const GridSpec& grid) {
  std::vector<Polygon> polygons;
  collect_polygons(geojson, grid, &polygons);
  GisRaster gis = GisRaster::zeros(grid);
  for (const Polygon& polygon : polygons) {
    double east_lo = std::numeric_limits<double>::infinity();
    double east_hi = -east_lo;
    double north_lo = east_lo;
    double north_hi = -east_lo;
    for (const Ring& ring : polygon) {
      for (const PlanarPoint& p : ring) {
        east_lo = std::min(east_lo, p.east);
        east_hi = std::max(east_hi, p.east);
        north_lo = std::min(north_lo, p.north);
        north_hi = std::max(north_hi, p.north);
      }
    }
    if (!(east_lo <= east_hi)) continue;  // empty polygon
    const int i_lo =
        std::max(1, 1 + static_cast<int>(std::floor(north_lo / grid.resolution)));
    const int i_hi = std::min(
        grid.height, 1 + static_cast<int>(std::floor(north_hi / grid.resolution)));
    const int j_lo =
        std::max(1, 1 + static_cast<int>(std::floor(east_lo / grid.resolution)));
    const int j_hi = std::min(
        grid.width, 1 + static_cast<int>(std::floor(east_hi / grid.resolution)));
    for (int i = i_lo; i <= i_hi; ++i) {
      for (int j = j_lo; j <= j_hi; ++j) {
        const Pixel pixel{i, j};
        if (gis.at(pixel)) continue;
        if (even_odd_inside(polygon, pixel_center(pixel, grid))) {
          gis.values()[static_cast<size_t>(i - 1) * grid.width + (j - 1)] = 1;
        }
      }
    }
  }
  return gis;
}

GisRaster load_gis(const fs::path& path, const GridSpec& grid) {
  const std::string extension = path.extension().string();
  if (extension == ".geojson") {
    return rasterize_geojson(read_json_file(path), grid);
  }
  if (extension == ".json") {
    const json j = read_json_file(path);
    if (j.contains("type")) return rasterize_geojson(j, grid);
    if (j.value("kind", std::string()) == "gis") {
      const std::string raster_file = j.value("raster_file", std::string());
      if (raster_file.empty()) {
        throw DataError(path.string() + ": gis sidecar missing 'raster_file'");
      }
      GisRaster gis = read_gis_raster(path.parent_path() / raster_file, path);
      if (!(gis.grid() == grid)) {
        throw DataError(path.string() + ": gis grid does not match config grid");
      }
      return gis;
    }
    throw DataError(path.string() +
                    ": neither GeoJSON ('type') nor gis sidecar ('kind')");
  }
  throw DataError(path.string() + ": unsupported gis file extension '" +
                  extension + "'");
}

// ---------------------------------------------------------------------------
// File helpers

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw DataError(path.string() + ": read failed");
  return std::move(buffer).str();
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw DataError(path.string() + ": write failed");
}

void write_json_file(const fs::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

json read_json_file(const fs::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

}  // namespace sbdloc
