#include <doctest.h>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sbdloc/geo.hpp"
#include "sbdloc/rng.hpp"

using namespace sbdloc;

namespace {

GridSpec test_grid(int h = 400, int w = 400) {
  return GridSpec{{53.35, -6.26}, h, w, 0.25};
}

Ray make_ray(const char* cam, double east, double north, double bearing,
             double conf = 0.9, double depth = 5.0) {
  return Ray{cam, {east, north}, bearing, conf, depth};
}

}  // namespace

TEST_CASE("projection anchors pixel (1,1) at the origin") {
  const GridSpec grid = test_grid();
  CHECK(project(grid.origin, grid) == Pixel{1, 1});

  // 0.375 m east of the origin lies in the second column.
  const GeoPoint p = planar_to_geo({0.375, 0.0}, grid);
  CHECK(project(p, grid) == Pixel{1, 2});

  // Pixel centres sit at (k - 0.5) * resolution.
  const PlanarPoint c = pixel_center({3, 7}, grid);
  CHECK(c.north == doctest::Approx(2.5 * 0.25).epsilon(1e-12));
  CHECK(c.east == doctest::Approx(6.5 * 0.25).epsilon(1e-12));
}

TEST_CASE("projection round-trip stays within one pixel") {
  const GridSpec grid = test_grid();
  Rng rng(99);
  for (int k = 0; k < 1000; ++k) {
    const PlanarPoint m{rng.uniform(0.0, grid.extent_east_m() - 1e-6),
                        rng.uniform(0.0, grid.extent_north_m() - 1e-6)};
    const GeoPoint g = planar_to_geo(m, grid);
    const Pixel p1 = project(g, grid);
    const Pixel p2 = project(unproject(p1, grid), grid);
    CHECK(std::abs(p1.i - p2.i) <= 1);
    CHECK(std::abs(p1.j - p2.j) <= 1);
  }
}

TEST_CASE("projection rejects points outside the footprint") {
  const GridSpec grid = test_grid();
  const GeoPoint west = planar_to_geo({-1.0, 50.0}, grid);
  const GeoPoint north = planar_to_geo({50.0, grid.extent_north_m() + 1.0},
                                       grid);
  CHECK_THROWS_AS(project(west, grid), std::out_of_range);
  CHECK_THROWS_AS(project(north, grid), std::out_of_range);
  // The error names the offending axis so the caller can diagnose data.
  try {
    project(west, grid);
  } catch (const std::out_of_range& e) {
    CHECK(std::string(e.what()).find("east") != std::string::npos);
  }
}

TEST_CASE("destination / distance / bearing are mutually consistent") {
  const GeoPoint a{53.35, -6.26};
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const double brg = rng.uniform(0.0, 360.0);
    const double dist = rng.uniform(1.0, 500.0);
    const GeoPoint b = destination(a, brg, dist);
    CHECK(distance_m(a, b) == doctest::Approx(dist).epsilon(1e-9));
    const double w = wrap_bearing_deg(bearing_deg(a, b) - brg);
    CHECK(std::min(w, 360.0 - w) == doctest::Approx(0.0).epsilon(1e-6));
  }
  CHECK(wrap_bearing_deg(-90.0) == doctest::Approx(270.0));
  CHECK(wrap_bearing_deg(725.0) == doctest::Approx(5.0));
  CHECK(wrap_bearing_deg(360.0) == doctest::Approx(0.0));
}

TEST_CASE("axis-aligned rays cross where plane geometry says") {
  // Ray a heads due east from (0,0); ray b heads due south from (5,5). They
  // cross at (5,0) with both along-ray distances equal to 5.
  const Ray a = make_ray("c1", 0.0, 0.0, 90.0, 0.8, 4.0);
  const Ray b = make_ray("c2", 5.0, 5.0, 180.0, 0.7, 6.0);
  const auto hit = ray_pair_intersection(a, b);
  REQUIRE(hit.has_value());
  CHECK(hit->point.east == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(hit->point.north == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(hit->delta1 == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(hit->delta2 == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(hit->c1 == doctest::Approx(0.8));
  CHECK(hit->c2 == doctest::Approx(0.7));
  CHECK(hit->d1 == doctest::Approx(4.0));
  CHECK(hit->d2 == doctest::Approx(6.0));
}

TEST_CASE("crossings beyond the range gate are rejected") {
  // Same geometry stretched: crossing at (30,0), 30 m along ray a.
  const Ray a = make_ray("c1", 0.0, 0.0, 90.0);
  const Ray b = make_ray("c2", 30.0, 5.0, 180.0);
  CHECK_FALSE(ray_pair_intersection(a, b).has_value());
  // A generous gate accepts it again.
  CHECK(ray_pair_intersection(a, b, 35.0).has_value());
}

TEST_CASE("parallel and backward crossings yield nullopt") {
  CHECK_FALSE(ray_pair_intersection(make_ray("c1", 0, 0, 90),
                                    make_ray("c2", 0, 5, 90))
                  .has_value());
  // Anti-parallel on the same line is still parallel in direction space.
  CHECK_FALSE(ray_pair_intersection(make_ray("c1", 0, 0, 0),
                                    make_ray("c2", 0, 5, 180))
                  .has_value());
  // The infinite lines cross behind ray a.
  CHECK_FALSE(ray_pair_intersection(make_ray("c1", 0, 0, 270),
                                    make_ray("c2", 5, 5, 180))
                  .has_value());
}

TEST_CASE("rays from one camera never self-intersect") {
  CHECK_THROWS_AS(ray_pair_intersection(make_ray("cam", 0, 0, 90),
                                        make_ray("cam", 0, 0, 180)),
                  std::invalid_argument);
}

TEST_CASE("swapping the rays swaps the paired fields") {
  Rng rng(17);
  for (int k = 0; k < 100; ++k) {
    const Ray a = make_ray("c1", rng.uniform(0, 40), rng.uniform(0, 40),
                           rng.uniform(0, 360), rng.uniform(0.5, 1.0),
                           rng.uniform(1.0, 20.0));
    const Ray b = make_ray("c2", rng.uniform(0, 40), rng.uniform(0, 40),
                           rng.uniform(0, 360), rng.uniform(0.5, 1.0),
                           rng.uniform(1.0, 20.0));
    const auto ab = ray_pair_intersection(a, b);
    const auto ba = ray_pair_intersection(b, a);
    CHECK(ab.has_value() == ba.has_value());
    if (ab && ba) {
      CHECK(ab->point.east == doctest::Approx(ba->point.east).epsilon(1e-9));
      CHECK(ab->point.north == doctest::Approx(ba->point.north).epsilon(1e-9));
      CHECK(ab->delta1 == doctest::Approx(ba->delta2).epsilon(1e-9));
      CHECK(ab->delta2 == doctest::Approx(ba->delta1).epsilon(1e-9));
      CHECK(ab->c1 == ba->c2);
      CHECK(ab->d1 == ba->d2);
    }
  }
}

TEST_CASE("all_intersections enumerates distinct-camera pairs") {
  const GridSpec grid = test_grid();
  CHECK(all_intersections({}, grid).empty());

  SUBCASE("two crossing rays give one intersection") {
    std::vector<Ray> rays{make_ray("c1", 0, 0, 90, 0.8, 4.0),
                          make_ray("c2", 5, 5, 180, 0.7, 6.0)};
    const auto isecs = all_intersections(rays, grid);
    REQUIRE(isecs.size() == 1);
    // (5, 0) lies in row 1, column 21 at 0.25 m resolution.
    CHECK(isecs[0].pixel == Pixel{1, 21});
    CHECK(isecs[0].c1 == doctest::Approx(0.8));
    CHECK(isecs[0].delta2 == doctest::Approx(5.0));
  }

  SUBCASE("five mutually crossing rays give C(5,2) = 10 intersections") {
    // Cameras on a circle of radius 10 m around (50, 50), all aimed at the
    // centre: every pair crosses there, within the 20 m gate.
    std::vector<Ray> rays;
    for (int k = 0; k < 5; ++k) {
      const double theta = 2.0 * kPi * k / 5.0;
      const double east = 50.0 + 10.0 * std::sin(theta);
      const double north = 50.0 + 10.0 * std::cos(theta);
      const double brg = wrap_bearing_deg(theta / kPi * 180.0 + 180.0);
      rays.push_back(make_ray(("c" + std::to_string(k)).c_str(), east, north,
                              brg, 0.9, 10.0));
    }
    const auto isecs = all_intersections(rays, grid);
    CHECK(isecs.size() == 10);
    for (const auto& isec : isecs) {
      CHECK(std::abs(isec.pixel.i - 201) <= 1);
      CHECK(std::abs(isec.pixel.j - 201) <= 1);
      CHECK(isec.delta1 == doctest::Approx(10.0).epsilon(1e-6));
    }
  }

  SUBCASE("same-camera rays are skipped, not fatal") {
    std::vector<Ray> rays{make_ray("c1", 0, 0, 90, 0.8, 4.0),
                          make_ray("c1", 0, 1, 90, 0.8, 4.0),
                          make_ray("c2", 5, 5, 180, 0.7, 6.0)};
    CHECK(all_intersections(rays, grid).size() == 2);
  }

  SUBCASE("crossings outside the grid are dropped") {
    // Crossing at (5, -2): south of the footprint.
    std::vector<Ray> rays{make_ray("c1", 0, -2, 90),
                          make_ray("c2", 5, 5, 180)};
    CHECK(all_intersections(rays, grid).empty());
  }
}

TEST_CASE("disc_pixels matches brute-force enumeration") {
  const GridSpec grid = test_grid(40, 40);

  SUBCASE("fixed counts") {
    CHECK(disc_pixels({20, 20}, 1, grid).size() == 5);
    CHECK(disc_pixels({20, 20}, 5, grid).size() == 81);
    // Clipped at the corner: only the in-grid quarter of the cross remains.
    CHECK(disc_pixels({1, 1}, 1, grid).size() == 3);
  }

  SUBCASE("equality with a direct double loop for all radii") {
    for (int r = 1; r <= 10; ++r) {
      const Pixel c{7, 35};
      const auto fast = disc_pixels(c, r, grid);
      std::vector<Pixel> slow;
      for (int i = 1; i <= grid.height; ++i) {
        for (int j = 1; j <= grid.width; ++j) {
          const int di = i - c.i, dj = j - c.j;
          if (di * di + dj * dj <= r * r) slow.push_back({i, j});
        }
      }
      CHECK(fast == slow);
    }
  }

  SUBCASE("discs are nested in the radius") {
    for (int r = 1; r < 10; ++r) {
      const auto small = disc_pixels({20, 20}, r, grid);
      const auto big = disc_pixels({20, 20}, r + 1, grid);
      CHECK(std::includes(big.begin(), big.end(), small.begin(), small.end()));
    }
  }
}

TEST_CASE("disc overlap area agrees with closed-form geometry") {
  const double kLens111 = 1.228369698608757;  // lens area for r1=r2=1, d=1

  CHECK(disc_overlap_area(0.0, 2.0, 2.0) ==
        doctest::Approx(4.0 * kPi).epsilon(1e-12));
  CHECK(disc_overlap_area(10.0, 3.0, 3.0) == 0.0);
  CHECK(disc_overlap_area(6.0, 3.0, 3.0) == 0.0);  // exactly tangent
  CHECK(disc_overlap_area(1.0, 1.0, 1.0) ==
        doctest::Approx(kLens111).epsilon(1e-12));
  // Containment: the small disc is swallowed whole.
  CHECK(disc_overlap_area(0.5, 1.0, 3.0) ==
        doctest::Approx(kPi).epsilon(1e-12));
  CHECK(disc_overlap_area(2.0, 3.0, 1.0) ==
        doctest::Approx(kPi).epsilon(1e-12));  // internally tangent

  SUBCASE("symmetry, monotonicity, and bounds") {
    Rng rng(23);
    for (int k = 0; k < 500; ++k) {
      const double r1 = rng.uniform(0.5, 10.0);
      const double r2 = rng.uniform(0.5, 10.0);
      const double d = rng.uniform(0.0, r1 + r2 + 2.0);
      const double a = disc_overlap_area(d, r1, r2);
      CHECK(a == disc_overlap_area(d, r2, r1));
      CHECK(a >= 0.0);
      CHECK(a <= kPi * std::min(r1, r2) * std::min(r1, r2) + 1e-12);
      CHECK(disc_overlap_area(d + 0.1, r1, r2) <= a + 1e-12);
    }
  }

  SUBCASE("pixel overload uses the centre distance") {
    CHECK(disc_overlap_area({10, 10}, 1.0, {10, 11}, 1.0) ==
          doctest::Approx(kLens111).epsilon(1e-12));
    // Translation invariance.
    CHECK(disc_overlap_area({200, 300}, 4.0, {203, 304}, 5.0) ==
          doctest::Approx(disc_overlap_area(5.0, 4.0, 5.0)).epsilon(1e-12));
  }

  CHECK_THROWS_AS(disc_overlap_area(1.0, 0.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(disc_overlap_area(1.0, 2.0, -1.0), std::invalid_argument);
}
