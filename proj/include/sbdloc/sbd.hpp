#ifndef SBDLOC_SBD_HPP_
#define SBDLOC_SBD_HPP_

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "sbdloc/energy_map.hpp"
#include "sbdloc/geo.hpp"
#include "sbdloc/rng.hpp"

namespace sbdloc {

// Radius marks are integer pixel radii in this closed range.
inline constexpr int kRadiusMinPx = 2;
inline constexpr int kRadiusMaxPx = 10;

// One hypothesised object: a disc centre with its radius mark.
struct ConfigPoint {
  Pixel x;
  int r = kRadiusMinPx;
  bool operator==(const ConfigPoint&) const = default;
};

// Finite set of marked points. Exact duplicates are rejected at birth, not by
// the container, so tests may construct degenerate configurations directly.
using Configuration = std::vector<ConfigPoint>;

// Which reading of the annealing schedule to use: the prose description
// scales the death discretisation by epsilon^m, the algorithm box keeps a
// constant epsilon.
enum class ScheduleMode { kPerText, kPerAlgorithmBox };

// Birth proposal distribution. kBoltzmann draws from exp(-U/tau) so low
// energy attracts births; kLiteral uses U/sum(U) verbatim (requires a
// nonnegative unary map) and exists for ablation.
enum class BirthMode { kBoltzmann, kLiteral };

struct SbdParams {
  double n0 = 100.0;      // mean birth count per iteration
  double epsilon = 0.999; // discretisation base, in (0,1)
  double beta = 0.999;    // annealing base, > 0, applied as beta^m
  int t_wait = 500;       // iterations without improvement before stopping
  int max_iterations = 10000;
  ScheduleMode schedule = ScheduleMode::kPerText;
  BirthMode birth = BirthMode::kBoltzmann;
  uint64_t seed = 0;
  int radius_min = kRadiusMinPx;
  int radius_max = kRadiusMaxPx;
};

struct TraceRow {
  int iteration = 0;
  int config_size = 0;
  double energy = 0.0;
  double best_energy = 0.0;
  int births = 0;
  int deaths = 0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  Configuration best;
  double best_energy = 0.0;
  uint64_t seed = 0;
  bool improved_ever = false;
  bool hit_max_iterations = false;
  // Set when the iteration cap was reached without ever improving on the
  // initial empty configuration.
  bool warning = false;
};

// H(g) = sum over points of [U(x,r) + alpha * sum over other points of
// A[(x,r),(x',r')] / (pi r'^2)]. Each unordered pair contributes twice, once
// per normalisation.
double config_energy(const EnergyMap& map, const Configuration& g,
                     double alpha);

// H(g) - H(g \ {g[index]}), computed incrementally. Throws std::out_of_range
// when index does not address a point of g.
double removal_delta(const EnergyMap& map, const Configuration& g,
                     size_t index, double alpha);
// Same, addressing the first point equal to p; throws std::invalid_argument
// when p is not in g.
double removal_delta(const EnergyMap& map, const Configuration& g,
                     ConfigPoint p, double alpha);

// Radius mark with P(r = k) proportional to exp(-k/10) on [r_min, r_max].
int sample_radius(Rng& rng, int r_min = kRadiusMinPx, int r_max = kRadiusMaxPx);
// Closed-form pmf of sample_radius, for tests and diagnostics.
double radius_pmf(int k, int r_min = kRadiusMinPx, int r_max = kRadiusMaxPx);

// Birth proposal table over the grid for one radius mark.
class BirthWeights {
 public:
  static BirthWeights build(const EnergyMap& map, int radius,
                            BirthMode mode = BirthMode::kBoltzmann);

  double probability(Pixel p) const;
  Pixel sample(Rng& rng) const;
  const GridSpec& grid() const { return grid_; }

 private:
  GridSpec grid_;
  std::vector<float> weights_;  // unnormalised, row-major
  std::vector<double> row_cdf_; // cumulative row masses
  double total_ = 0.0;
};

// Lazily-built per-radius birth tables for one energy map. Not thread safe;
// one bank per run.
class BirthSamplerBank {
 public:
  BirthSamplerBank(const EnergyMap& map, BirthMode mode)
      : map_(&map), mode_(mode) {}
  const BirthWeights& for_radius(int radius) const;

 private:
  const EnergyMap* map_;
  BirthMode mode_;
  mutable std::array<std::unique_ptr<BirthWeights>, kRadiusMaxPx + 1> cache_;
};

struct StepStats {
  int births = 0;
  int deaths = 0;
  int radius = 0;
};

// Birth step: N ~ Poisson(n0) points, one shared radius mark, locations drawn
// from the birth table. A location colliding exactly with an existing (x, r)
// is redrawn up to ten times, then skipped.
Configuration birth_step(const Configuration& g, const BirthSamplerBank& bank,
                         const SbdParams& params, Rng& rng,
                         StepStats* stats = nullptr);

// Death probability d = s_m * a / (1 + s_m * a) with a = exp(b_m * delta),
// (b_m, s_m) = (beta^m, epsilon^m) per text or (beta^m, epsilon) per the
// algorithm box. b_m * delta is clamped to +-700 before exponentiation.
double death_probability(double removal_delta, int m, const SbdParams& params);

// Death step: points visited in descending order of their removal delta at
// sweep start (ties by pixel, then radius); each survives or dies by its
// current delta, which reflects removals already made in this sweep.
Configuration death_step(const Configuration& g_hat, const EnergyMap& map,
                         double alpha, const SbdParams& params, int m,
                         Rng& rng, StepStats* stats = nullptr);

// Full optimisation loop: alternate birth and death, track the best energy
// seen, stop after t_wait iterations without strict improvement or at the
// iteration cap. Identical seeds and inputs give bit-identical traces.
//
// Stream order per iteration: Poisson count, radius mark, location draws
// (including duplicate redraws), then one death coin per visited point.
//
// `shared_bank` lets callers running many seeds on one map reuse the birth
// tables; it must have been built from `map` with params.birth. Results are
// identical with or without it.
RunTrace run(const EnergyMap& map, double alpha, const SbdParams& params,
             const BirthSamplerBank* shared_bank = nullptr);

}  // namespace sbdloc

#endif  // SBDLOC_SBD_HPP_
