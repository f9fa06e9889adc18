#include "sbdloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace sbdloc {

double median_of(std::vector<double> values) {
  if (values.empty()) {
    throw std::invalid_argument("median_of: empty sample");
  }
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  if (values.size() % 2 == 1) return values[mid];
  const double upper = values[mid];
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

double population_sd(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

MatchResult match(std::span<const GeoPoint> predictions,
                  std::span<const GeoPoint> truth, double tau_m) {
  if (!(tau_m > 0.0)) {
    throw std::invalid_argument("match: tau must be > 0");
  }
  struct Candidate {
    double distance;
    size_t prediction;
    size_t truth;
  };
  std::vector<Candidate> candidates;
  for (size_t p = 0; p < predictions.size(); ++p) {
    for (size_t t = 0; t < truth.size(); ++t) {
      const double d = distance_m(predictions[p], truth[t]);
      if (d <= tau_m) candidates.push_back({d, p, t});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              return std::tie(a.distance, a.prediction, a.truth) <
                     std::tie(b.distance, b.prediction, b.truth);
            });

  MatchResult result;
  result.tau_m = tau_m;
  std::vector<char> pred_taken(predictions.size(), 0);
  std::vector<char> truth_taken(truth.size(), 0);
  for (const Candidate& c : candidates) {
    if (pred_taken[c.prediction] || truth_taken[c.truth]) continue;
    pred_taken[c.prediction] = 1;
    truth_taken[c.truth] = 1;
    result.pairs.push_back({c.prediction, c.truth, c.distance});
  }
  for (size_t p = 0; p < predictions.size(); ++p) {
    if (!pred_taken[p]) result.unmatched_predictions.push_back(p);
  }
  for (size_t t = 0; t < truth.size(); ++t) {
    if (!truth_taken[t]) result.unmatched_truth.push_back(t);
  }
  return result;
}

Metrics precision_recall_f1(const MatchResult& result, size_t n_pred,
                            size_t n_truth) {
  const double matched = static_cast<double>(result.pairs.size());
  Metrics m;
  m.precision = n_pred == 0 ? 1.0 : matched / static_cast<double>(n_pred);
  m.recall = n_truth == 0 ? 1.0 : matched / static_cast<double>(n_truth);
  m.f1 = m.precision + m.recall == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

StabilityReport stability_clusters(std::span<const std::vector<GeoPoint>> runs,
                                   std::span<const GeoPoint> truth,
                                   double tau_cluster_m) {
  if (runs.size() < 2) {
    throw std::invalid_argument("stability_clusters: need at least 2 runs");
  }
  StabilityReport report;
  report.n_runs = runs.size();

  std::vector<double> counts;
  counts.reserve(runs.size());
  std::vector<std::vector<GeoPoint>> clusters(truth.size());
  for (const std::vector<GeoPoint>& run : runs) {
    counts.push_back(static_cast<double>(run.size()));
    for (const GeoPoint& prediction : run) {
      size_t best = truth.size();
      double best_d = std::numeric_limits<double>::infinity();
      for (size_t t = 0; t < truth.size(); ++t) {
        const double d = distance_m(prediction, truth[t]);
        if (d < best_d) {  // first index wins ties
          best = t;
          best_d = d;
        }
      }
      if (best < truth.size() && best_d <= tau_cluster_m) {
        clusters[best].push_back(prediction);
        ++report.n_clustered;
      } else {
        ++report.n_discarded;
      }
    }
  }

  std::vector<double> pooled;
  for (const std::vector<GeoPoint>& cluster : clusters) {
    for (size_t a = 0; a + 1 < cluster.size(); ++a) {
      for (size_t b = a + 1; b < cluster.size(); ++b) {
        pooled.push_back(distance_m(cluster[a], cluster[b]));
      }
    }
  }
  report.within_cluster_m.count = pooled.size();
  if (!pooled.empty()) {
    report.within_cluster_m.sd = population_sd(pooled);
    report.within_cluster_m.median = median_of(std::move(pooled));
  }
  report.run_counts.count = counts.size();
  report.run_counts.sd = population_sd(counts);
  report.run_counts.median = median_of(std::move(counts));
  return report;
}

SummaryStats distance_to_gt(std::span<const GeoPoint> predictions,
                            std::span<const GeoPoint> truth, double tau_m) {
  if (predictions.empty() || truth.empty()) {
    throw std::invalid_argument(
        "distance_to_gt: predictions and truth must be non-empty");
  }
  const MatchResult result = match(predictions, truth, tau_m);
  SummaryStats stats;
  stats.count = result.pairs.size();
  if (stats.count == 0) return stats;  // empty report, not zero
  std::vector<double> distances;
  distances.reserve(result.pairs.size());
  for (const MatchPair& pair : result.pairs) {
    distances.push_back(pair.distance_m);
  }
  stats.sd = population_sd(distances);
  stats.median = median_of(std::move(distances));
  return stats;
}

}  // namespace sbdloc
