#ifndef SBDLOC_SIMULATOR_HPP_
#define SBDLOC_SIMULATOR_HPP_

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sbdloc/geo.hpp"
#include "sbdloc/rng.hpp"

namespace sbdloc {

// Objects beyond this true distance are never detected.
inline constexpr double kDetectionRangeM = 20.0;
// Each camera considers only this many nearest objects.
inline constexpr int kCandidateCount = 15;
// Default rate of the exponential confidence deficit (c = 1 - alpha).
inline constexpr double kConfidenceRate = 10.0;

struct GroundTruthObject {
  std::string id;
  GeoPoint position;
};

// One row of the noise calibration: distance noise SD (m), bearing noise SD
// (deg), and contamination fraction.
struct NoiseProfile {
  int level = 0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double p = 0.0;

  // The four calibrated levels: (1, 2, 0.03), (2, 3, 0.05), (3, 4.5, 0.075),
  // (4, 6, 0.1). Throws std::invalid_argument outside {0,1,2,3}.
  static NoiseProfile standard(int level);
};

// A simulated CNN detection: camera, noisy bearing/distance, confidence.
// is_contaminant is evaluation-only provenance and is never fed to the
// optimizer.
struct Detection {
  std::string camera_id;
  double bearing_deg = 0.0;  // wrapped to [0, 360)
  double distance_m = 0.0;   // > 0 (resampled if nonpositive)
  double confidence = 0.0;   // in (0.5, 1)
  bool is_contaminant = false;
};

// c = 1 - alpha with alpha ~ Exponential(rate), resampled until c lies in
// (0.5, 1).
double assign_confidence(Rng& rng, double rate = kConfidenceRate);

// Simulates detections: each camera considers its 15 nearest objects by true
// distance; a candidate at distance d is detected with probability 0.9 for
// d in [2,10] m, 0.7 for d in [0,2) or (10,20] m, and never beyond 20 m.
// Accepted detections get distance ~ N(d, sigma1) resampled until positive,
// bearing ~ N(B, sigma2) wrapped to [0, 360), and a confidence draw.
//
// Stream order: cameras in input order; per camera, candidates by ascending
// (true distance, object index); per in-range candidate: acceptance coin,
// then for accepted ones the distance redraws, one bearing draw, and the
// confidence redraws.
std::vector<Detection> detect_objects(std::span<const Camera> cameras,
                                      std::span<const GroundTruthObject> objects,
                                      const NoiseProfile& profile, Rng& rng,
                                      double confidence_rate = kConfidenceRate);

// Injects n = floor(p * N) phantom detections (N = detections.size()):
// camera drawn uniformly without replacement, distance ~ Unif(1, 15) m,
// bearing ~ Unif(0, 360), confidence per assign_confidence. Each phantom
// location is then treated as an object and re-detected by all cameras via
// detect_objects. Output = input detections, then the phantom seeds, then
// the secondary detections, every injected row flagged is_contaminant.
//
// Stream order: per seed (camera index, distance, bearing, confidence
// redraws); then per seed one detect_objects pass.
//
// Throws std::invalid_argument when n exceeds the number of cameras.
// `phantom_locations`, when given, receives the n phantom positions.
std::vector<Detection> contaminate(
    std::span<const Detection> detections, std::span<const Camera> cameras,
    const NoiseProfile& profile, Rng& rng,
    double confidence_rate = kConfidenceRate,
    std::vector<GeoPoint>* phantom_locations = nullptr);

// Street-like synthetic scene: a rectilinear street grid (100 m pitch,
// 25 m margin) covering the area; objects every 20 m along the streets,
// cameras every 10 m with radial jitter up to 2 m. When fewer sites are
// requested than exist, sites are taken at an even stride so the selection
// still covers the whole graph. Throws std::invalid_argument when the area
// cannot host the requested counts.
std::pair<std::vector<GroundTruthObject>, std::vector<Camera>> synth_layout(
    const GridSpec& area, int n_objects, int n_cameras, Rng& rng);

// Projects detections into the grid frame as rays. Camera ids must resolve;
// unknown ids throw std::invalid_argument naming the id.
std::vector<Ray> make_rays(std::span<const Detection> detections,
                           std::span<const Camera> cameras,
                           const GridSpec& grid);

}  // namespace sbdloc

#endif  // SBDLOC_SIMULATOR_HPP_
