#ifndef SBDLOC_IO_HPP_
#define SBDLOC_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbdloc/energy_map.hpp"
#include "sbdloc/eval.hpp"
#include "sbdloc/geo.hpp"
#include "sbdloc/sbd.hpp"
#include "sbdloc/simulator.hpp"

namespace sbdloc {

// Invalid or inconsistent configuration (CLI exit code 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Unreadable, malformed, or corrupt data files (CLI exit code 2).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Pipeline configuration

struct LayoutParams {
  int n_objects = 600;
  int n_cameras = 1200;
};

struct PipelineConfig {
  GridSpec grid{{53.35, -6.26}, 3600, 3600, 0.25};
  EnergyWeights weights;
  SbdParams sbd;
  int noise_level = 1;
  double lambda_c = kConfidenceRate;
  uint64_t seed = 0;
  LayoutParams layout;
  std::string gis_path;  // optional GeoJSON or raw raster; empty = none

  NoiseProfile noise() const { return NoiseProfile::standard(noise_level); }
};

// Parses and validates a config object. Unknown keys, wrong types, and
// violated constraints raise ConfigError naming the offending dotted key.
PipelineConfig parse_config(const nlohmann::json& j);
// Reads and parses a config file; ConfigError when unreadable/unparseable
// (a bad --config argument is a usage problem, not a data problem).
PipelineConfig load_config(const std::filesystem::path& path);
// Canonical JSON form (all keys explicit, sorted serialization).
nlohmann::json config_to_json(const PipelineConfig& config);
// FNV-1a of the canonical serialization; stamped into every output.
uint64_t config_hash(const PipelineConfig& config);

std::string hex64(uint64_t value);

// ---------------------------------------------------------------------------
// CSV files. All doubles are written with %.17g so reruns are byte-identical
// and values round-trip exactly. Readers validate the header and raise
// DataError naming file, row, and column on any violation.

void write_objects_csv(const std::filesystem::path& path,
                       std::span<const GroundTruthObject> objects);
std::vector<GroundTruthObject> read_objects_csv(
    const std::filesystem::path& path);

void write_cameras_csv(const std::filesystem::path& path,
                       std::span<const Camera> cameras);
std::vector<Camera> read_cameras_csv(const std::filesystem::path& path);

void write_detections_csv(const std::filesystem::path& path,
                          std::span<const Detection> detections);
std::vector<Detection> read_detections_csv(const std::filesystem::path& path);

void write_trace_csv(const std::filesystem::path& path, const RunTrace& trace);

// Best configuration with lat/lon back-projection of each disc centre.
void write_predictions_csv(const std::filesystem::path& path,
                           const Configuration& config, const GridSpec& grid);
// Reads back only the geolocated centres (for evaluation).
std::vector<GeoPoint> read_predictions_csv(const std::filesystem::path& path);

struct MetricsRow {
  int noise_level = 0;
  double tau_m = 0.0;
  Metrics metrics;
};
void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const MetricsRow> rows);

struct StabilityRow {
  int noise_level = 0;
  StabilityReport report;
  SummaryStats gt_distance;  // pooled matched distances to ground truth
};
void write_stability_csv(const std::filesystem::path& path,
                         std::span<const StabilityRow> rows);

// ---------------------------------------------------------------------------
// Rasters: raw little-endian float32, row-major, plus a JSON sidecar holding
// the grid, a checksum of the raw bytes, and the producing config hash.
// Readers verify shape and checksum and raise DataError naming the file.

void write_energy_raster(const std::filesystem::path& raster_path,
                         const std::filesystem::path& sidecar_path,
                         const EnergyMap& map, const EnergyWeights& weights,
                         uint64_t cfg_hash);
EnergyMap read_energy_raster(const std::filesystem::path& raster_path,
                             const std::filesystem::path& sidecar_path);

void write_gis_raster(const std::filesystem::path& raster_path,
                      const std::filesystem::path& sidecar_path,
                      const GisRaster& gis, uint64_t cfg_hash);
GisRaster read_gis_raster(const std::filesystem::path& raster_path,
                          const std::filesystem::path& sidecar_path);

// Occupancy from a GeoJSON polygon collection (Feature/FeatureCollection/
// Polygon/MultiPolygon): a pixel is occupied when its centre lies inside any
// polygon under the even-odd rule (holes supported).
GisRaster rasterize_geojson(const nlohmann::json& geojson,
                            const GridSpec& grid);
GisRaster load_gis(const std::filesystem::path& path, const GridSpec& grid);

// ---------------------------------------------------------------------------
// Small file helpers shared by the CLI.

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& content);
void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace sbdloc

#endif  // SBDLOC_IO_HPP_
