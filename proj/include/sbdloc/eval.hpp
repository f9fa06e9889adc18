#ifndef SBDLOC_EVAL_HPP_
#define SBDLOC_EVAL_HPP_

#include <span>
#include <vector>

#include "sbdloc/geo.hpp"

namespace sbdloc {

// Default matching/clustering radius; equals the outer evaluation distance.
inline constexpr double kClusterRadiusM = 5.0;

struct MatchPair {
  size_t prediction = 0;  // index into the prediction list
  size_t truth = 0;       // index into the ground-truth list
  double distance_m = 0.0;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<size_t> unmatched_predictions;
  std::vector<size_t> unmatched_truth;
  double tau_m = 0.0;
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Median and population SD of a sample. count == 0 marks an empty report
// (no data), which is distinct from a zero statistic.
struct SummaryStats {
  size_t count = 0;
  double median = 0.0;
  double sd = 0.0;
};

struct StabilityReport {
  SummaryStats within_cluster_m;  // pooled pairwise distances inside clusters
  SummaryStats run_counts;        // raw per-run prediction counts
  size_t n_runs = 0;
  size_t n_clustered = 0;   // predictions assigned to some cluster
  size_t n_discarded = 0;   // predictions farther than the cluster radius
};

// Median of a sample (average of the two middle values for even sizes).
// Throws std::invalid_argument on empty input.
double median_of(std::vector<double> values);
// Population standard deviation (n divisor). Empty input → 0.
double population_sd(std::span<const double> values);

// Greedy one-to-one matching: all prediction-truth pairs with distance <= tau
// considered in ascending (distance, prediction index, truth index) order;
// a pair is accepted when both endpoints are still unmatched.
MatchResult match(std::span<const GeoPoint> predictions,
                  std::span<const GeoPoint> truth, double tau_m);

// precision = matched/n_pred (1 when n_pred = 0), recall = matched/n_truth
// (1 when n_truth = 0), f1 = harmonic mean (0 when precision + recall = 0).
Metrics precision_recall_f1(const MatchResult& result, size_t n_pred,
                            size_t n_truth);

// Pools the predictions of all runs; each is assigned to its nearest
// ground-truth object when within tau_cluster_m (ties by truth index), else
// discarded. Clusters with >= 2 members contribute all pairwise distances.
// Throws std::invalid_argument with fewer than 2 runs.
StabilityReport stability_clusters(std::span<const std::vector<GeoPoint>> runs,
                                   std::span<const GeoPoint> truth,
                                   double tau_cluster_m = kClusterRadiusM);

// Median/SD of matched prediction-to-truth distances at tau_m. Zero matches
// yield an empty report (count = 0). Throws std::invalid_argument when either
// input is empty.
SummaryStats distance_to_gt(std::span<const GeoPoint> predictions,
                            std::span<const GeoPoint> truth,
                            double tau_m = kClusterRadiusM);

}  // namespace sbdloc

#endif  // SBDLOC_EVAL_HPP_
