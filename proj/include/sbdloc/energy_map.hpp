#ifndef SBDLOC_ENERGY_MAP_HPP_
#define SBDLOC_ENERGY_MAP_HPP_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sbdloc/geo.hpp"

namespace sbdloc {

// Weighting of the energy map terms and of the pairwise interaction.
// Defaults follow the reference experimental setup.
struct EnergyWeights {
  double w1 = -3.0;     // confidence score weight
  double w2 = 0.1;      // depth-consistency score weight
  double w3 = 0.4;      // GIS occupancy weight
  double alpha = 10.0;  // pairwise interaction weight
  double c_sigma = 4.0; // kernel scale, metres*pixels
  bool operator==(const EnergyWeights&) const = default;
};

// Binary occupancy layer: 1 where infrastructure (buildings, water) blocks
// object placement.
class GisRaster {
 public:
  GisRaster() = default;
  GisRaster(GridSpec grid, std::vector<uint8_t> occupancy);
  static GisRaster zeros(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  uint8_t at(Pixel p) const {
    return occupancy_[static_cast<size_t>(p.i - 1) * grid_.width + (p.j - 1)];
  }
  std::span<const uint8_t> values() const { return occupancy_; }
  std::span<uint8_t> values() { return occupancy_; }

 private:
  GridSpec grid_;
  std::vector<uint8_t> occupancy_;
};

// The static unary raster D. Low values mark favourable object locations.
class EnergyMap {
 public:
  EnergyMap() = default;
  explicit EnergyMap(GridSpec grid)
      : grid_(grid), values_(grid.pixel_count(), 0.0) {}
  EnergyMap(GridSpec grid, std::vector<double> values);

  const GridSpec& grid() const { return grid_; }
  double at(Pixel p) const { return values_[index(p)]; }
  double& at(Pixel p) { return values_[index(p)]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  size_t index(Pixel p) const {
    return static_cast<size_t>(p.i - 1) * grid_.width + (p.j - 1);
  }

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

// Confidence score s1 = c1*c2 and depth-consistency score
// s2 = |d1 - delta1| + |d2 - delta2| of one intersection.
std::pair<double, double> intersection_scores(const Intersection& isec);

// Kernel width sigma = c_sigma * (1/d1 + 1/d2) pixels, floored at 0.5 px.
// Close-range detections are the least certain, hence the reciprocals.
double kernel_sigma(double d1, double d2, double c_sigma);

// Adds (w1*s1 + w2*s2) * G(sigma) centred at the intersection pixel. G is a
// discrete Gaussian truncated at radius ceil(3*sigma) and renormalised to
// unit mass over the truncated support; mass falling outside the grid is
// dropped.
void splat(EnergyMap& map, const Intersection& isec,
           const EnergyWeights& weights);

// D = sum_k (w1*s1 + w2*s2) G_k * M_k + w3*R. Intersections are accumulated
// in a fixed sorted order so the result is independent of input permutation.
EnergyMap build_energy_map(std::span<const Intersection> intersections,
                           const GisRaster& gis, const EnergyWeights& weights);
EnergyMap build_energy_map(std::span<const Intersection> intersections,
                           const GridSpec& grid, const EnergyWeights& weights);

// U(x, r): sum of D over the disc of radius r at x.
double unary_energy(const EnergyMap& map, Pixel x, int radius);

// U(., r) evaluated for every pixel via row prefix sums. Equals per-pixel
// unary_energy up to floating-point reassociation.
std::vector<double> disc_sum_map(const EnergyMap& map, int radius);

}  // namespace sbdloc

#endif  // SBDLOC_ENERGY_MAP_HPP_
