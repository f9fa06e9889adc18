#include "sbdloc/geo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sbdloc/rng.hpp"

namespace sbdloc {

namespace {

constexpr double kDegToRad = kPi / 180.0;
constexpr double kRadToDeg = 180.0 / kPi;

[[noreturn]] void throw_out_of_footprint(GeoPoint p, PlanarPoint m,
                                         const GridSpec& grid) {
  std::ostringstream msg;
  msg << "point (lat=" << p.lat << ", lon=" << p.lon << ") projects to ("
      << m.east << " m east, " << m.north << " m north), outside the grid "
      << "footprint [0, " << grid.extent_east_m() << ") x [0, "
      << grid.extent_north_m() << ")";
  throw std::out_of_range(msg.str());
}

}  // namespace

PlanarPoint to_planar(GeoPoint p, const GridSpec& grid) {
  const double lat0 = grid.origin.lat * kDegToRad;
  return {kEarthRadiusM * std::cos(lat0) * (p.lon - grid.origin.lon) * kDegToRad,
          kEarthRadiusM * (p.lat - grid.origin.lat) * kDegToRad};
}

GeoPoint planar_to_geo(PlanarPoint p, const GridSpec& grid) {
  const double lat0 = grid.origin.lat * kDegToRad;
  return {grid.origin.lat + p.north / kEarthRadiusM * kRadToDeg,
          grid.origin.lon + p.east / (kEarthRadiusM * std::cos(lat0)) * kRadToDeg};
}

PlanarPoint project_to_metres(GeoPoint p, const GridSpec& grid) {
  const PlanarPoint m = to_planar(p, grid);
  if (m.east < 0.0 || m.east >= grid.extent_east_m() || m.north < 0.0 ||
      m.north >= grid.extent_north_m()) {
    throw_out_of_footprint(p, m, grid);
  }
  return m;
}

Pixel metres_to_pixel(PlanarPoint p, const GridSpec& grid) {
  const Pixel px{1 + static_cast<int>(std::floor(p.north / grid.resolution)),
                 1 + static_cast<int>(std::floor(p.east / grid.resolution))};
  if (!grid.contains(px)) {
    std::ostringstream msg;
    msg << "planar point (" << p.east << ", " << p.north
        << ") maps to pixel (" << px.i << ", " << px.j
        << ") outside the " << grid.height << "x" << grid.width << " grid";
    throw std::out_of_range(msg.str());
  }
  return px;
}

Pixel project(GeoPoint p, const GridSpec& grid) {
  return metres_to_pixel(project_to_metres(p, grid), grid);
}

PlanarPoint pixel_center(Pixel p, const GridSpec& grid) {
  return {(p.j - 0.5) * grid.resolution, (p.i - 0.5) * grid.resolution};
}

GeoPoint unproject(Pixel p, const GridSpec& grid) {
  return planar_to_geo(pixel_center(p, grid), grid);
}

double wrap_bearing_deg(double deg) {
  double b = std::fmod(deg, 360.0);
  if (b < 0.0) b += 360.0;
  return b == 360.0 ? 0.0 : b;
}

PlanarPoint planar_offset(GeoPoint from, GeoPoint to) {
  const double lat0 = from.lat * kDegToRad;
  return {kEarthRadiusM * std::cos(lat0) * (to.lon - from.lon) * kDegToRad,
          kEarthRadiusM * (to.lat - from.lat) * kDegToRad};
}

double distance_m(GeoPoint a, GeoPoint b) {
  const PlanarPoint d = planar_offset(a, b);
  return std::hypot(d.east, d.north);
}

double bearing_deg(GeoPoint from, GeoPoint to) {
  const PlanarPoint d = planar_offset(from, to);
  return wrap_bearing_deg(std::atan2(d.east, d.north) * kRadToDeg);
}

GeoPoint destination(GeoPoint from, double bearing_deg, double distance_m) {
  const double theta = bearing_deg * kDegToRad;
  const double east = distance_m * std::sin(theta);
  const double north = distance_m * std::cos(theta);
  const double lat0 = from.lat * kDegToRad;
  return {from.lat + north / kEarthRadiusM * kRadToDeg,
          from.lon + east / (kEarthRadiusM * std::cos(lat0)) * kRadToDeg};
}

std::optional<RayCrossing> ray_pair_intersection(const Ray& a, const Ray& b,
                                                 double max_range) {
  if (a.camera_id == b.camera_id) {
    throw std::invalid_argument(
        "ray_pair_intersection: both rays originate from camera '" +
        a.camera_id + "'; same-camera pairs carry no triangulation evidence");
  }
  const double ta = a.bearing_deg * kDegToRad;
  const double tb = b.bearing_deg * kDegToRad;
  const double ae = std::sin(ta), an = std::cos(ta);
  const double be = std::sin(tb), bn = std::cos(tb);
  // Solve a.origin + s*dir_a == b.origin + t*dir_b.
  const double det = be * an - ae * bn;
  if (std::abs(det) < 1e-12) return std::nullopt;  // parallel
  const double re = b.origin.east - a.origin.east;
  const double rn = b.origin.north - a.origin.north;
  const double s = (be * rn - bn * re) / det;
  const double t = (ae * rn - an * re) / det;
  if (s < 0.0 || s > max_range || t < 0.0 || t > max_range) {
    return std::nullopt;
  }
  return RayCrossing{{a.origin.east + s * ae, a.origin.north + s * an},
                     a.confidence,
                     b.confidence,
                     a.depth_m,
                     b.depth_m,
                     s,
                     t};
}

std::vector<Intersection> all_intersections(std::span<const Ray> rays,
                                            const GridSpec& grid,
                                            double max_range) {
  struct Entry {
    Intersection isec;
    size_t pair_index;
  };
  std::vector<Entry> found;
  const double reach2 = (2.0 * max_range) * (2.0 * max_range);
  size_t pair_index = 0;
  for (size_t p = 0; p < rays.size(); ++p) {
    for (size_t q = p + 1; q < rays.size(); ++q, ++pair_index) {
      if (rays[p].camera_id == rays[q].camera_id) continue;
      // Two in-range crossings need origins within 2*max_range of each other.
      const double de = rays[p].origin.east - rays[q].origin.east;
      const double dn = rays[p].origin.north - rays[q].origin.north;
      if (de * de + dn * dn > reach2) continue;
      const auto crossing = ray_pair_intersection(rays[p], rays[q], max_range);
      if (!crossing) continue;
      const Pixel px{
          1 + static_cast<int>(std::floor(crossing->point.north / grid.resolution)),
          1 + static_cast<int>(std::floor(crossing->point.east / grid.resolution))};
      if (!grid.contains(px)) continue;  // cannot be splatted
      found.push_back({Intersection{px, crossing->c1, crossing->c2,
                                    crossing->d1, crossing->d2,
                                    crossing->delta1, crossing->delta2},
                       pair_index});
    }
  }
  std::sort(found.begin(), found.end(), [](const Entry& x, const Entry& y) {
    if (x.isec.pixel != y.isec.pixel) return x.isec.pixel < y.isec.pixel;
    return x.pair_index < y.pair_index;
  });
  std::vector<Intersection> out;
  out.reserve(found.size());
  for (const Entry& e : found) out.push_back(e.isec);
  return out;
}

std::vector<Pixel> disc_pixels(Pixel center, int radius, const GridSpec& grid) {
  if (radius < 1) {
    throw std::invalid_argument("disc_pixels: radius must be >= 1");
  }
  std::vector<Pixel> out;
  const int r2 = radius * radius;
  for (int di = -radius; di <= radius; ++di) {
    const int i = center.i + di;
    if (i < 1 || i > grid.height) continue;
    // Widest integer column offset with di^2 + dj^2 <= r^2.
    int span = static_cast<int>(std::sqrt(static_cast<double>(r2 - di * di)));
    while ((span + 1) * (span + 1) + di * di <= r2) ++span;
    while (span * span + di * di > r2) --span;
    const int j_lo = std::max(1, center.j - span);
    const int j_hi = std::min(grid.width, center.j + span);
    for (int j = j_lo; j <= j_hi; ++j) out.push_back({i, j});
  }
  return out;
}

double disc_overlap_area(double center_distance, double r1, double r2) {
  if (r1 <= 0.0 || r2 <= 0.0) {
    throw std::invalid_argument("disc_overlap_area: radii must be positive");
  }
  // Canonicalise the argument order so the result is bitwise symmetric in
  // (r1, r2); the closed form is symmetric but FP summation order is not.
  if (r1 > r2) std::swap(r1, r2);
  const double d = center_distance;
  if (d >= r1 + r2) return 0.0;
  if (d <= r2 - r1) return kPi * r1 * r1;
  // Circular-segment lens area.
  const double a1 = std::acos(
      std::clamp((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1), -1.0, 1.0));
  const double a2 = std::acos(
      std::clamp((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2), -1.0, 1.0));
  const double k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
  return r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * std::sqrt(std::max(k, 0.0));
}

double disc_overlap_area(Pixel c1, double r1, Pixel c2, double r2) {
  const double d = std::hypot(static_cast<double>(c1.i - c2.i),
                              static_cast<double>(c1.j - c2.j));
  return disc_overlap_area(d, r1, r2);
}

}  // namespace sbdloc
