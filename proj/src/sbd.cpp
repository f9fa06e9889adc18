#include "sbdloc/sbd.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace sbdloc {

namespace {

// Above this configuration size pairwise sums go through a bucket grid
// instead of the quadratic loop.
constexpr size_t kBucketThreshold = 64;

// Bucket side in pixels. Two discs can only overlap when their centres are
// closer than r1 + r2 <= 2 * kRadiusMaxPx, so one cell ring suffices.
constexpr int kCellSize = 2 * kRadiusMaxPx + 1;

// Spatial hash of configuration points for near-neighbour queries.
class NeighborGrid {
 public:
  explicit NeighborGrid(const Configuration& g) : points_(&g) {
    cells_.reserve(g.size() * 2);
    for (size_t idx = 0; idx < g.size(); ++idx) {
      cells_[key(g[idx].x)].push_back(idx);
    }
  }

  // Indices of points whose discs could overlap p's, ascending, excluding
  // `self`.
  void collect(Pixel p, size_t self, std::vector<size_t>* out) const {
    out->clear();
    const int ci = cell_coord(p.i);
    const int cj = cell_coord(p.j);
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        const auto it = cells_.find(pack(ci + di, cj + dj));
        if (it == cells_.end()) continue;
        for (const size_t idx : it->second) {
          if (idx != self) out->push_back(idx);
        }
      }
    }
    std::sort(out->begin(), out->end());
  }

 private:
  static int cell_coord(int v) {
    return v >= 0 ? v / kCellSize : (v - kCellSize + 1) / kCellSize;
  }
  static uint64_t pack(int ci, int cj) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(ci)) << 32) |
           static_cast<uint32_t>(cj);
  }
  static uint64_t key(Pixel p) {
    return pack(cell_coord(p.i), cell_coord(p.j));
  }

  const Configuration* points_;
  std::unordered_map<uint64_t, std::vector<size_t>> cells_;
};

// Interaction sum for one point against the others: for every q != index,
// A(p,q)/(pi r_q^2) plus, when two_sided, A(p,q)/(pi r_p^2).
double interaction_sum(const Configuration& g, size_t index, bool two_sided,
                       const NeighborGrid* grid,
                       const std::vector<char>* alive,
                       std::vector<size_t>* scratch) {
  const ConfigPoint& p = g[index];
  const double inv_self = 1.0 / (kPi * p.r * p.r);
  double sum = 0.0;
  auto accumulate = [&](size_t q_idx) {
    const ConfigPoint& q = g[q_idx];
    const double a = disc_overlap_area(p.x, p.r, q.x, q.r);
    if (a == 0.0) return;
    sum += a / (kPi * q.r * q.r);
    if (two_sided) sum += a * inv_self;
  };
  if (grid != nullptr) {
    grid->collect(p.x, index, scratch);
    for (const size_t q_idx : *scratch) {
      if (alive != nullptr && !(*alive)[q_idx]) continue;
      accumulate(q_idx);
    }
  } else {
    for (size_t q_idx = 0; q_idx < g.size(); ++q_idx) {
      if (q_idx == index) continue;
      if (alive != nullptr && !(*alive)[q_idx]) continue;
      accumulate(q_idx);
    }
  }
  return sum;
}

uint64_t point_key(const ConfigPoint& p) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(p.x.i)) << 40) ^
         (static_cast<uint64_t>(static_cast<uint32_t>(p.x.j)) << 8) ^
         static_cast<uint64_t>(p.r);
}

void validate_params(const SbdParams& p) {
  if (!(p.n0 > 0.0)) throw std::invalid_argument("sbd: n0 must be > 0");
  if (!(p.epsilon > 0.0 && p.epsilon < 1.0)) {
    throw std::invalid_argument("sbd: epsilon must be in (0, 1)");
  }
  if (!(p.beta > 0.0)) throw std::invalid_argument("sbd: beta must be > 0");
  if (p.t_wait < 1) throw std::invalid_argument("sbd: t_wait must be >= 1");
  if (p.max_iterations < 1) {
    throw std::invalid_argument("sbd: max_iterations must be >= 1");
  }
  if (p.radius_min < kRadiusMinPx || p.radius_max > kRadiusMaxPx ||
      p.radius_min > p.radius_max) {
    throw std::invalid_argument("sbd: radius range must satisfy 2 <= min <= max <= 10");
  }
}

}  // namespace

double config_energy(const EnergyMap& map, const Configuration& g,
                     double alpha) {
  const bool bucketed = g.size() > kBucketThreshold;
  std::unique_ptr<NeighborGrid> grid;
  if (bucketed) grid = std::make_unique<NeighborGrid>(g);
  std::vector<size_t> scratch;
  double h = 0.0;
  for (size_t idx = 0; idx < g.size(); ++idx) {
    h += unary_energy(map, g[idx].x, g[idx].r) +
         alpha * interaction_sum(g, idx, /*two_sided=*/false, grid.get(),
                                 nullptr, &scratch);
  }
  return h;
}

double removal_delta(const EnergyMap& map, const Configuration& g,
                     size_t index, double alpha) {
  if (index >= g.size()) {
    throw std::out_of_range("removal_delta: index does not address a point of g");
  }
  const bool bucketed = g.size() > kBucketThreshold;
  std::unique_ptr<NeighborGrid> grid;
  if (bucketed) grid = std::make_unique<NeighborGrid>(g);
  std::vector<size_t> scratch;
  return unary_energy(map, g[index].x, g[index].r) +
         alpha * interaction_sum(g, index, /*two_sided=*/true, grid.get(),
                                 nullptr, &scratch);
}

double removal_delta(const EnergyMap& map, const Configuration& g,
                     ConfigPoint p, double alpha) {
  const auto it = std::find(g.begin(), g.end(), p);
  if (it == g.end()) {
    throw std::invalid_argument("removal_delta: point is not in the configuration");
  }
  return removal_delta(map, g, static_cast<size_t>(it - g.begin()), alpha);
}

double radius_pmf(int k, int r_min, int r_max) {
  if (k < r_min || k > r_max) return 0.0;
  double z = 0.0;
  for (int j = r_min; j <= r_max; ++j) z += std::exp(-j / 10.0);
  return std::exp(-k / 10.0) / z;
}

int sample_radius(Rng& rng, int r_min, int r_max) {
  const double u = rng.uniform01();
  double z = 0.0;
  for (int j = r_min; j <= r_max; ++j) z += std::exp(-j / 10.0);
  double acc = 0.0;
  for (int k = r_min; k < r_max; ++k) {
    acc += std::exp(-k / 10.0) / z;
    if (u < acc) return k;
  }
  return r_max;
}

BirthWeights BirthWeights::build(const EnergyMap& map, int radius,
                                 BirthMode mode) {
  BirthWeights bw;
  bw.grid_ = map.grid();
  const std::vector<double> unary = disc_sum_map(map, radius);
  const size_t n = unary.size();
  bw.weights_.resize(n);

  if (mode == BirthMode::kLiteral) {
    for (size_t idx = 0; idx < n; ++idx) {
      if (unary[idx] < 0.0) {
        throw std::invalid_argument(
            "literal birth weights require a nonnegative unary map");
      }
      bw.weights_[idx] = static_cast<float>(unary[idx]);
    }
  } else {
    // Boltzmann transform of -U with a robust temperature: favourable (low
    // energy) pixels receive the highest birth probability. The scale is the
    // MAD of U, floored by half the low-side range: on sparse maps most
    // pixels carry no evidence, the MAD collapses to zero, and without the
    // floor every draw would land on the single argmin pixel.
    std::vector<double> work(unary);
    const auto mid = work.begin() + work.size() / 2;
    std::nth_element(work.begin(), mid, work.end());
    const double med = *mid;
    for (double& v : work) v = std::abs(v - med);
    std::nth_element(work.begin(), mid, work.end());
    const double mad = *mid;
    const double u_min = *std::min_element(unary.begin(), unary.end());
    const double tau = std::max({mad, 0.5 * (med - u_min), 1e-6});
    for (size_t idx = 0; idx < n; ++idx) {
      const float w = static_cast<float>(std::exp(-(unary[idx] - u_min) / tau));
      bw.weights_[idx] = std::max(w, FLT_MIN);  // strictly positive table
    }
  }

  bw.row_cdf_.resize(bw.grid_.height);
  double total = 0.0;
  for (int i = 0; i < bw.grid_.height; ++i) {
    const float* row = bw.weights_.data() + static_cast<size_t>(i) * bw.grid_.width;
    double row_sum = 0.0;
    for (int j = 0; j < bw.grid_.width; ++j) row_sum += row[j];
    total += row_sum;
    bw.row_cdf_[i] = total;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("birth weights: table has zero total mass");
  }
  bw.total_ = total;
  return bw;
}

double BirthWeights::probability(Pixel p) const {
  if (!grid_.contains(p)) {
    throw std::out_of_range("BirthWeights::probability: pixel outside grid");
  }
  const size_t idx = static_cast<size_t>(p.i - 1) * grid_.width + (p.j - 1);
  return weights_[idx] / total_;
}

Pixel BirthWeights::sample(Rng& rng) const {
  const double target = rng.uniform01() * total_;
  const auto row_it =
      std::upper_bound(row_cdf_.begin(), row_cdf_.end(), target);
  const int row = std::min<int>(
      static_cast<int>(row_it - row_cdf_.begin()), grid_.height - 1);
  double resid = target - (row > 0 ? row_cdf_[row - 1] : 0.0);
  const float* w = weights_.data() + static_cast<size_t>(row) * grid_.width;
  double acc = 0.0;
  int col = grid_.width - 1;
  for (int j = 0; j < grid_.width; ++j) {
    acc += w[j];
    if (acc > resid) {
      col = j;
      break;
    }
  }
  return Pixel{row + 1, col + 1};
}

const BirthWeights& BirthSamplerBank::for_radius(int radius) const {
  if (radius < kRadiusMinPx || radius > kRadiusMaxPx) {
    throw std::invalid_argument("BirthSamplerBank: radius mark out of range");
  }
  auto& slot = cache_[radius];
  if (!slot) {
    slot = std::make_unique<BirthWeights>(
        BirthWeights::build(*map_, radius, mode_));
  }
  return *slot;
}

Configuration birth_step(const Configuration& g, const BirthSamplerBank& bank,
                         const SbdParams& params, Rng& rng, StepStats* stats) {
  const uint64_t n_births = rng.poisson(params.n0);
  const int radius = sample_radius(rng, params.radius_min, params.radius_max);
  Configuration out = g;
  std::unordered_set<uint64_t> occupied;
  occupied.reserve(g.size() + n_births);
  for (const ConfigPoint& p : g) occupied.insert(point_key(p));

  const BirthWeights& weights = bank.for_radius(radius);
  int added = 0;
  for (uint64_t k = 0; k < n_births; ++k) {
    ConfigPoint candidate{weights.sample(rng), radius};
    int redraws = 0;
    while (occupied.count(point_key(candidate)) && redraws < 10) {
      candidate.x = weights.sample(rng);
      ++redraws;
    }
    if (occupied.count(point_key(candidate))) continue;  // give up on this one
    occupied.insert(point_key(candidate));
    out.push_back(candidate);
    ++added;
  }
  if (stats != nullptr) {
    stats->births = added;
    stats->radius = radius;
  }
  return out;
}

double death_probability(double removal_delta, int m, const SbdParams& params) {
  const double b = std::pow(params.beta, m);
  const double s = params.schedule == ScheduleMode::kPerText
                       ? std::pow(params.epsilon, m)
                       : params.epsilon;
  const double x = std::clamp(b * removal_delta, -700.0, 700.0);
  const double sa = s * std::exp(x);
  return sa / (1.0 + sa);
}

Configuration death_step(const Configuration& g_hat, const EnergyMap& map,
                         double alpha, const SbdParams& params, int m,
                         Rng& rng, StepStats* stats) {
  if (stats != nullptr) stats->deaths = 0;
  if (g_hat.empty()) return g_hat;

  const size_t n = g_hat.size();
  const bool bucketed = n > kBucketThreshold;
  std::unique_ptr<NeighborGrid> grid;
  if (bucketed) grid = std::make_unique<NeighborGrid>(g_hat);
  std::vector<size_t> scratch;

  // Unary terms are static during the sweep; interactions are not.
  std::vector<double> unary(n);
  std::vector<double> delta0(n);
  for (size_t idx = 0; idx < n; ++idx) {
    unary[idx] = unary_energy(map, g_hat[idx].x, g_hat[idx].r);
    delta0[idx] = unary[idx] + alpha * interaction_sum(g_hat, idx, true,
                                                       grid.get(), nullptr,
                                                       &scratch);
  }

  // Worst points first; deterministic tie-break.
  std::vector<size_t> order(n);
  for (size_t idx = 0; idx < n; ++idx) order[idx] = idx;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (delta0[a] != delta0[b]) return delta0[a] > delta0[b];
    return std::tie(g_hat[a].x, g_hat[a].r) < std::tie(g_hat[b].x, g_hat[b].r);
  });

  std::vector<char> alive(n, 1);
  int deaths = 0;
  for (const size_t idx : order) {
    const double delta =
        unary[idx] + alpha * interaction_sum(g_hat, idx, true, grid.get(),
                                             &alive, &scratch);
    if (rng.uniform01() < death_probability(delta, m, params)) {
      alive[idx] = 0;
      ++deaths;
    }
  }

  Configuration survivors;
  survivors.reserve(n - deaths);
  for (size_t idx = 0; idx < n; ++idx) {
    if (alive[idx]) survivors.push_back(g_hat[idx]);
  }
  if (stats != nullptr) stats->deaths = deaths;
  return survivors;
}

RunTrace run(const EnergyMap& map, double alpha, const SbdParams& params,
             const BirthSamplerBank* shared_bank) {
  validate_params(params);
  Rng rng(params.seed);
  BirthSamplerBank local_bank(map, params.birth);
  const BirthSamplerBank& bank = shared_bank ? *shared_bank : local_bank;

  RunTrace trace;
  trace.seed = params.seed;
  Configuration g;
  double h_min = 0.0;  // the empty configuration has zero energy
  int patience = 0;
  int m = 0;
  while (patience < params.t_wait && m < params.max_iterations) {
    StepStats birth_stats, death_stats;
    const Configuration proposed = birth_step(g, bank, params, rng, &birth_stats);
    g = death_step(proposed, map, alpha, params, m, rng, &death_stats);
    const double h = config_energy(map, g, alpha);
    if (h < h_min) {
      h_min = h;
      trace.best = g;
      trace.improved_ever = true;
      patience = 0;
    } else {
      ++patience;
    }
    trace.rows.push_back({m, static_cast<int>(g.size()), h, h_min,
                          birth_stats.births, death_stats.deaths});
    ++m;
  }
  trace.best_energy = h_min;
  trace.hit_max_iterations = m >= params.max_iterations && patience < params.t_wait;
  trace.warning = trace.hit_max_iterations && !trace.improved_ever;
  return trace;
}

}  // namespace sbdloc
