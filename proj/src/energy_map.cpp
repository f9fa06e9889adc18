#include "sbdloc/energy_map.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "sbdloc/rng.hpp"

namespace sbdloc {

namespace {

// Column half-widths of the integer disc, one per row offset.
std::vector<int> disc_spans(int radius) {
  std::vector<int> spans(2 * radius + 1);
  const int r2 = radius * radius;
  for (int di = -radius; di <= radius; ++di) {
    int span = static_cast<int>(std::sqrt(static_cast<double>(r2 - di * di)));
    while ((span + 1) * (span + 1) + di * di <= r2) ++span;
    while (span * span + di * di > r2) --span;
    spans[di + radius] = span;
  }
  return spans;
}

const std::vector<int>& cached_spans(int radius) {
  static constexpr int kMaxCached = 64;
  static std::vector<std::vector<int>> cache(kMaxCached + 1);
  if (radius <= kMaxCached) {
    auto& entry = cache[radius];
    if (entry.empty()) entry = disc_spans(radius);
    return entry;
  }
  static thread_local std::vector<int> fallback;
  fallback = disc_spans(radius);
  return fallback;
}

}  // namespace

GisRaster::GisRaster(GridSpec grid, std::vector<uint8_t> occupancy)
    : grid_(grid), occupancy_(std::move(occupancy)) {
  if (occupancy_.size() != grid_.pixel_count()) {
    throw std::invalid_argument("GisRaster: occupancy size does not match grid");
  }
  for (const uint8_t v : occupancy_) {
    if (v > 1) {
      throw std::invalid_argument("GisRaster: occupancy values must be 0 or 1");
    }
  }
}

GisRaster GisRaster::zeros(const GridSpec& grid) {
  return GisRaster(grid, std::vector<uint8_t>(grid.pixel_count(), 0));
}

EnergyMap::EnergyMap(GridSpec grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.pixel_count()) {
    throw std::invalid_argument("EnergyMap: value count does not match grid");
  }
}

std::pair<double, double> intersection_scores(const Intersection& isec) {
  return {isec.c1 * isec.c2,
          std::abs(isec.d1 - isec.delta1) + std::abs(isec.d2 - isec.delta2)};
}

double kernel_sigma(double d1, double d2, double c_sigma) {
  if (d1 <= 0.0 || d2 <= 0.0) {
    throw std::invalid_argument("kernel_sigma: depth estimates must be positive");
  }
  return std::max(c_sigma * (1.0 / d1 + 1.0 / d2), 0.5);
}

void splat(EnergyMap& map, const Intersection& isec,
           const EnergyWeights& weights) {
  const GridSpec& grid = map.grid();
  if (!grid.contains(isec.pixel)) {
    throw std::out_of_range("splat: intersection pixel outside the grid");
  }
  const auto [s1, s2] = intersection_scores(isec);
  const double amount = weights.w1 * s1 + weights.w2 * s2;
  const double sigma = kernel_sigma(isec.d1, isec.d2, weights.c_sigma);
  const int k = static_cast<int>(std::ceil(3.0 * sigma));

  // Unit mass over the truncated circular support, then clip to the grid.
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  const int k2 = k * k;
  double mass = 0.0;
  for (int di = -k; di <= k; ++di) {
    for (int dj = -k; dj <= k; ++dj) {
      if (di * di + dj * dj > k2) continue;
      mass += std::exp(-(di * di + dj * dj) * inv2s2);
    }
  }
  const double scale = amount / mass;
  for (int di = -k; di <= k; ++di) {
    const int i = isec.pixel.i + di;
    if (i < 1 || i > grid.height) continue;
    for (int dj = -k; dj <= k; ++dj) {
      if (di * di + dj * dj > k2) continue;
      const int j = isec.pixel.j + dj;
      if (j < 1 || j > grid.width) continue;
      map.at({i, j}) += scale * std::exp(-(di * di + dj * dj) * inv2s2);
    }
  }
}

EnergyMap build_energy_map(std::span<const Intersection> intersections,
                           const GisRaster& gis, const EnergyWeights& weights) {
  EnergyMap map = build_energy_map(intersections, gis.grid(), weights);
  double* d = map.values().data();
  const uint8_t* r = gis.values().data();
  const size_t n = gis.grid().pixel_count();
  for (size_t idx = 0; idx < n; ++idx) {
    if (r[idx]) d[idx] += weights.w3;
  }
  return map;
}

EnergyMap build_energy_map(std::span<const Intersection> intersections,
                           const GridSpec& grid, const EnergyWeights& weights) {
  EnergyMap map(grid);
  for (const Intersection& isec : intersections) {
    if (!grid.contains(isec.pixel)) {
      throw std::invalid_argument(
          "build_energy_map: intersection pixel outside the target grid");
    }
  }
  // Accumulate in a canonical order so the map does not depend on the
  // permutation of the input list.
  std::vector<Intersection> sorted(intersections.begin(), intersections.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const Intersection& a, const Intersection& b) {
              return std::tie(a.pixel, a.c1, a.c2, a.d1, a.d2, a.delta1,
                              a.delta2) < std::tie(b.pixel, b.c1, b.c2, b.d1,
                                                   b.d2, b.delta1, b.delta2);
            });
  for (const Intersection& isec : sorted) splat(map, isec, weights);
  return map;
}

double unary_energy(const EnergyMap& map, Pixel x, int radius) {
  const GridSpec& grid = map.grid();
  if (!grid.contains(x)) {
    throw std::out_of_range("unary_energy: centre pixel outside the grid");
  }
  if (radius < 1) {
    throw std::invalid_argument("unary_energy: radius must be >= 1");
  }
  const std::vector<int>& spans = cached_spans(radius);
  const double* values = map.values().data();
  double sum = 0.0;
  for (int di = -radius; di <= radius; ++di) {
    const int i = x.i + di;
    if (i < 1 || i > grid.height) continue;
    const int span = spans[di + radius];
    const int j_lo = std::max(1, x.j - span);
    const int j_hi = std::min(grid.width, x.j + span);
    const double* row = values + static_cast<size_t>(i - 1) * grid.width;
    for (int j = j_lo; j <= j_hi; ++j) sum += row[j - 1];
  }
  return sum;
}

std::vector<double> disc_sum_map(const EnergyMap& map, int radius) {
  if (radius < 1) {
    throw std::invalid_argument("disc_sum_map: radius must be >= 1");
  }
  const GridSpec& grid = map.grid();
  const int h = grid.height;
  const int w = grid.width;
  const double* values = map.values().data();

  // prefix[i][j] = sum of row i, columns 1..j (prefix[i][0] = 0).
  std::vector<double> prefix(static_cast<size_t>(h) * (w + 1), 0.0);
  for (int i = 0; i < h; ++i) {
    const double* row = values + static_cast<size_t>(i) * w;
    double* pre = prefix.data() + static_cast<size_t>(i) * (w + 1);
    double acc = 0.0;
    for (int j = 0; j < w; ++j) {
      acc += row[j];
      pre[j + 1] = acc;
    }
  }

  const std::vector<int>& spans = cached_spans(radius);
  std::vector<double> out(grid.pixel_count(), 0.0);
  for (int i = 1; i <= h; ++i) {
    double* out_row = out.data() + static_cast<size_t>(i - 1) * w;
    for (int di = -radius; di <= radius; ++di) {
      const int ii = i + di;
      if (ii < 1 || ii > h) continue;
      const int span = spans[di + radius];
      const double* pre = prefix.data() + static_cast<size_t>(ii - 1) * (w + 1);
      for (int j = 1; j <= w; ++j) {
        const int j_lo = std::max(1, j - span);
        const int j_hi = std::min(w, j + span);
        out_row[j - 1] += pre[j_hi] - pre[j_lo - 1];
      }
    }
  }
  return out;
}

}  // namespace sbdloc
