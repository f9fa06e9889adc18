#include "sbdloc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace sbdloc {

namespace {

// Street-graph layout constants (see synth_layout contract).
constexpr double kStreetPitchM = 100.0;
constexpr double kMarginM = 25.0;
constexpr double kObjectSpacingM = 20.0;
constexpr double kObjectPhaseM = 10.0;
constexpr double kCameraSpacingM = 10.0;
constexpr double kCameraPhaseM = 5.0;
constexpr double kCameraJitterM = 2.0;

double detection_probability(double d) {
  if (d > kDetectionRangeM) return 0.0;
  if (d >= 2.0 && d <= 10.0) return 0.9;
  return 0.7;  // [0, 2) and (10, 20]
}

double positive_distance(Rng& rng, double mean, double sd) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double d = rng.normal(mean, sd);
    if (d > 0.0) return d;
  }
  throw std::runtime_error(
      "detect_objects: could not draw a positive noisy distance");
}

// An axis-aligned street: fixed cross-axis coordinate, sites placed along
// [from, to] on the other axis.
struct Street {
  bool horizontal = false;  // true: runs east-west at north = cross
  double cross = 0.0;
  double from = 0.0;
  double to = 0.0;
};

std::vector<Street> street_graph(const GridSpec& area) {
  const double east_extent = area.extent_east_m();
  const double north_extent = area.extent_north_m();
  std::vector<Street> streets;
  for (double north = kMarginM; north <= north_extent - kMarginM;
       north += kStreetPitchM) {
    streets.push_back({true, north, kMarginM, east_extent - kMarginM});
  }
  for (double east = kMarginM; east <= east_extent - kMarginM;
       east += kStreetPitchM) {
    streets.push_back({false, east, kMarginM, north_extent - kMarginM});
  }
  return streets;
}

std::vector<PlanarPoint> street_sites(const std::vector<Street>& streets,
                                      double phase, double spacing) {
  std::vector<PlanarPoint> sites;
  for (const Street& street : streets) {
    for (double along = street.from + phase; along <= street.to;
         along += spacing) {
      sites.push_back(street.horizontal ? PlanarPoint{along, street.cross}
                                        : PlanarPoint{street.cross, along});
    }
  }
  return sites;
}

// Even-stride subset of `sites`: indices floor(k * |sites| / n), distinct
// whenever n <= |sites|.
std::vector<PlanarPoint> select_sites(const std::vector<PlanarPoint>& sites,
                                      int n, const char* what) {
  if (n > static_cast<int>(sites.size())) {
    throw std::invalid_argument(std::string("synth_layout: area too small for ") +
                                what + " count " + std::to_string(n) +
                                " (capacity " + std::to_string(sites.size()) +
                                ")");
  }
  std::vector<PlanarPoint> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    out.push_back(sites[static_cast<size_t>(k) * sites.size() / n]);
  }
  return out;
}

std::string padded_id(char prefix, int index) {
  std::string digits = std::to_string(index);
  return prefix + std::string(5 - std::min<size_t>(5, digits.size()), '0') +
         digits;
}

}  // namespace

NoiseProfile NoiseProfile::standard(int level) {
  switch (level) {
    case 0: return {0, 1.0, 2.0, 0.03};
    case 1: return {1, 2.0, 3.0, 0.05};
    case 2: return {2, 3.0, 4.5, 0.075};
    case 3: return {3, 4.0, 6.0, 0.1};
    default:
      throw std::invalid_argument("NoiseProfile::standard: level must be 0..3");
  }
}

double assign_confidence(Rng& rng, double rate) {
  if (!(rate > 0.0)) {
    throw std::invalid_argument("assign_confidence: rate must be > 0");
  }
  for (;;) {
    const double c = 1.0 - rng.exponential(rate);
    if (c > 0.5 && c < 1.0) return c;
  }
}

std::vector<Detection> detect_objects(std::span<const Camera> cameras,
                                      std::span<const GroundTruthObject> objects,
                                      const NoiseProfile& profile, Rng& rng,
                                      double confidence_rate) {
  if (cameras.empty() || objects.empty()) {
    throw std::invalid_argument(
        "detect_objects: cameras and objects must be non-empty");
  }
  std::vector<Detection> detections;
  std::vector<size_t> order(objects.size());
  for (const Camera& camera : cameras) {
    std::vector<double> dist(objects.size());
    for (size_t k = 0; k < objects.size(); ++k) {
      dist[k] = distance_m(camera.position, objects[k].position);
    }
    std::iota(order.begin(), order.end(), size_t{0});
    const size_t n_candidates =
        std::min<size_t>(kCandidateCount, objects.size());
    std::partial_sort(order.begin(), order.begin() + n_candidates, order.end(),
                      [&](size_t a, size_t b) {
                        return std::tie(dist[a], a) < std::tie(dist[b], b);
                      });
    for (size_t c = 0; c < n_candidates; ++c) {
      const size_t k = order[c];
      const double d = dist[k];
      if (d > kDetectionRangeM) break;  // candidates are distance-sorted
      if (!rng.bernoulli(detection_probability(d))) continue;
      const double bearing = bearing_deg(camera.position, objects[k].position);
      Detection det;
      det.camera_id = camera.id;
      det.distance_m = positive_distance(rng, d, profile.sigma1);
      det.bearing_deg = wrap_bearing_deg(rng.normal(bearing, profile.sigma2));
      det.confidence = assign_confidence(rng, confidence_rate);
      detections.push_back(std::move(det));
    }
  }
  return detections;
}

std::vector<Detection> contaminate(std::span<const Detection> detections,
                                   std::span<const Camera> cameras,
                                   const NoiseProfile& profile, Rng& rng,
                                   double confidence_rate,
                                   std::vector<GeoPoint>* phantom_locations) {
  std::vector<Detection> out(detections.begin(), detections.end());
  const size_t n =
      static_cast<size_t>(profile.p * static_cast<double>(detections.size()));
  if (phantom_locations != nullptr) phantom_locations->clear();
  if (n == 0) return out;
  if (n > cameras.size()) {
    throw std::invalid_argument(
        "contaminate: phantom count " + std::to_string(n) +
        " exceeds camera count " + std::to_string(cameras.size()) +
        " (cannot sample without replacement)");
  }

  std::vector<size_t> available(cameras.size());
  std::iota(available.begin(), available.end(), size_t{0});
  std::vector<Detection> seeds;
  std::vector<GeoPoint> locations;
  seeds.reserve(n);
  locations.reserve(n);
  for (size_t k = 0; k < n; ++k) {
    const size_t pick = rng.uniform_below(available.size());
    const Camera& camera = cameras[available[pick]];
    available.erase(available.begin() + pick);
    Detection seed;
    seed.camera_id = camera.id;
    seed.distance_m = rng.uniform(1.0, 15.0);
    seed.bearing_deg = rng.uniform(0.0, 360.0);
    seed.confidence = assign_confidence(rng, confidence_rate);
    seed.is_contaminant = true;
    locations.push_back(
        destination(camera.position, seed.bearing_deg, seed.distance_m));
    seeds.push_back(std::move(seed));
  }
  out.insert(out.end(), seeds.begin(), seeds.end());

  // Each phantom is re-detected like a real object, with the same noise.
  for (size_t k = 0; k < n; ++k) {
    const GroundTruthObject phantom{"phantom-" + std::to_string(k),
                                    locations[k]};
    std::vector<Detection> secondary =
        detect_objects(cameras, std::span(&phantom, 1), profile, rng,
                       confidence_rate);
    for (Detection& det : secondary) {
      det.is_contaminant = true;
      out.push_back(std::move(det));
    }
  }
  if (phantom_locations != nullptr) *phantom_locations = std::move(locations);
  return out;
}

std::pair<std::vector<GroundTruthObject>, std::vector<Camera>> synth_layout(
    const GridSpec& area, int n_objects, int n_cameras, Rng& rng) {
  if (n_objects < 1 || n_cameras < 1) {
    throw std::invalid_argument(
        "synth_layout: n_objects and n_cameras must be >= 1");
  }
  const std::vector<Street> streets = street_graph(area);
  const std::vector<PlanarPoint> object_sites =
      select_sites(street_sites(streets, kObjectPhaseM, kObjectSpacingM),
                   n_objects, "object");
  const std::vector<PlanarPoint> camera_sites =
      select_sites(street_sites(streets, kCameraPhaseM, kCameraSpacingM),
                   n_cameras, "camera");

  std::vector<GroundTruthObject> objects;
  objects.reserve(n_objects);
  for (int k = 0; k < n_objects; ++k) {
    objects.push_back(
        {padded_id('o', k + 1), planar_to_geo(object_sites[k], area)});
  }
  std::vector<Camera> cameras;
  cameras.reserve(n_cameras);
  for (int k = 0; k < n_cameras; ++k) {
    const double radius = rng.uniform(0.0, kCameraJitterM);
    const double theta = rng.uniform(0.0, 2.0 * kPi);
    const PlanarPoint site{camera_sites[k].east + radius * std::cos(theta),
                           camera_sites[k].north + radius * std::sin(theta)};
    cameras.push_back({padded_id('c', k + 1), planar_to_geo(site, area)});
  }
  return {std::move(objects), std::move(cameras)};
}

std::vector<Ray> make_rays(std::span<const Detection> detections,
                           std::span<const Camera> cameras,
                           const GridSpec& grid) {
  std::unordered_map<std::string, const Camera*> by_id;
  by_id.reserve(cameras.size());
  for (const Camera& camera : cameras) by_id[camera.id] = &camera;
  std::vector<Ray> rays;
  rays.reserve(detections.size());
  for (const Detection& det : detections) {
    const auto it = by_id.find(det.camera_id);
    if (it == by_id.end()) {
      throw std::invalid_argument("make_rays: unknown camera id '" +
                                  det.camera_id + "'");
    }
    rays.push_back({det.camera_id, to_planar(it->second->position, grid),
                    det.bearing_deg, det.confidence, det.distance_m});
  }
  return rays;
}

}  // namespace sbdloc
