#ifndef SBDLOC_GEO_HPP_
#define SBDLOC_GEO_HPP_

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sbdloc {

inline constexpr double kEarthRadiusM = 6371000.0;

// Pairwise ray intersections are only kept when both camera-to-intersection
// distances fall within this range.
inline constexpr double kIntersectionRangeM = 20.0;

struct GeoPoint {
  double lat = 0.0;  // degrees WGS84, [-90, 90]
  double lon = 0.0;  // degrees WGS84, [-180, 180]
  bool operator==(const GeoPoint&) const = default;
};

// East/north offset in metres relative to a grid origin.
struct PlanarPoint {
  double east = 0.0;
  double north = 0.0;
};

// 1-based grid coordinate: i is the row (northing), j the column (easting).
struct Pixel {
  int i = 0;
  int j = 0;
  auto operator<=>(const Pixel&) const = default;
};

// Georeferenced pixel lattice. `origin` anchors pixel (1,1); the footprint
// spans [0, height*resolution) north and [0, width*resolution) east of it.
struct GridSpec {
  GeoPoint origin;
  int height = 0;
  int width = 0;
  double resolution = 0.25;  // metres per pixel

  bool contains(Pixel p) const {
    return p.i >= 1 && p.i <= height && p.j >= 1 && p.j <= width;
  }
  double extent_north_m() const { return height * resolution; }
  double extent_east_m() const { return width * resolution; }
  size_t pixel_count() const {
    return static_cast<size_t>(height) * static_cast<size_t>(width);
  }
  bool operator==(const GridSpec&) const = default;
};

struct Camera {
  std::string id;
  GeoPoint position;
};

// One projected detection: half-line from a camera with the detection's
// confidence and (noisy) depth estimate attached.
struct Ray {
  std::string camera_id;
  PlanarPoint origin;        // camera position in the grid frame
  double bearing_deg = 0.0;  // clockwise from north, [0, 360)
  double confidence = 0.0;   // c in (0.5, 1)
  double depth_m = 0.0;      // detection's distance estimate, > 0
};

// Crossing point of two rays before grid quantisation.
struct RayCrossing {
  PlanarPoint point;
  double c1 = 0.0, c2 = 0.0;          // confidences of the two rays
  double d1 = 0.0, d2 = 0.0;          // depth estimates
  double delta1 = 0.0, delta2 = 0.0;  // along-ray camera distances
};

// Evidence tuple splatted into the energy map.
struct Intersection {
  Pixel pixel;
  double c1 = 0.0, c2 = 0.0;
  double d1 = 0.0, d2 = 0.0;
  double delta1 = 0.0, delta2 = 0.0;
};

// Local equirectangular projection about the grid origin. No footprint check;
// use project_to_metres for validated ingestion.
PlanarPoint to_planar(GeoPoint p, const GridSpec& grid);
GeoPoint planar_to_geo(PlanarPoint p, const GridSpec& grid);

// Checked projection: throws std::out_of_range naming the offending
// coordinate when the point falls outside the grid footprint.
PlanarPoint project_to_metres(GeoPoint p, const GridSpec& grid);
Pixel metres_to_pixel(PlanarPoint p, const GridSpec& grid);
Pixel project(GeoPoint p, const GridSpec& grid);

PlanarPoint pixel_center(Pixel p, const GridSpec& grid);
GeoPoint unproject(Pixel p, const GridSpec& grid);

double wrap_bearing_deg(double deg);
// Planar offset of `to` relative to `from` (equirectangular about `from`).
PlanarPoint planar_offset(GeoPoint from, GeoPoint to);
double distance_m(GeoPoint a, GeoPoint b);
double bearing_deg(GeoPoint from, GeoPoint to);
GeoPoint destination(GeoPoint from, double bearing_deg, double distance_m);

// Forward crossing of two half-lines with both along-ray distances in
// [0, max_range]. Parallel rays and backward crossings yield nullopt.
// Throws std::invalid_argument when both rays share a camera id.
std::optional<RayCrossing> ray_pair_intersection(
    const Ray& a, const Ray& b, double max_range = kIntersectionRangeM);

// Every unordered distinct-camera pair's crossing that lands inside the grid,
// sorted by pixel then by pair enumeration index.
std::vector<Intersection> all_intersections(
    std::span<const Ray> rays, const GridSpec& grid,
    double max_range = kIntersectionRangeM);

// Grid pixels y with ||center - y|| <= radius, clipped to the grid, in
// row-major order.
std::vector<Pixel> disc_pixels(Pixel center, int radius, const GridSpec& grid);

// Exact lens area of two discs, in squared pixel units.
double disc_overlap_area(double center_distance, double r1, double r2);
double disc_overlap_area(Pixel c1, double r1, Pixel c2, double r2);

}  // namespace sbdloc

#endif  // SBDLOC_GEO_HPP_
