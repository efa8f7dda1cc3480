#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "beamlab/errors.hpp"
#include "beamlab/geodesy.hpp"
#include "beamlab/rng.hpp"
#include "oracles.hpp"

using namespace beamlab;
using geodesy::GeoPosition;
using geodesy::PlanarXY;
using geodesy::UtmCoordinate;

TEST_CASE("equator on the central meridian maps to the false origin exactly") {
  const UtmCoordinate utm = geodesy::latlon_to_utm({0.0, -75.0});
  CHECK(utm.easting_m == 500000.0);
  CHECK(utm.northing_m == 0.0);
  CHECK(utm.zone == 18);
  CHECK(utm.is_north);
}

TEST_CASE("central meridian northing equals the scaled meridian arc") {
  for (double lat : {12.0, 45.0, 63.5}) {
    const UtmCoordinate utm = geodesy::latlon_to_utm({lat, -75.0});
    CHECK(utm.easting_m == 500000.0);
    const double arc = oracles::meridian_arc_quadrature(lat);
    CHECK(utm.northing_m == doctest::Approx(0.9996 * arc).epsilon(1e-9));
  }
}

// Reference eastings/northings frozen from two independent transverse
// Mercator implementations (classic NGA series and the Krueger n-series)
// that agree with each other below 1e-6 m on these points.
TEST_CASE("frozen reference points match within 1 cm") {
  struct Reference {
    GeoPosition position;
    int zone;
    bool north;
    double easting;
    double northing;
  };
  const Reference references[] = {
      {{40.0, -75.5}, 18, true, 457320.054973, 4427876.924419},
      {{33.3, 44.4}, 38, true, 444140.544918, 3684706.355550},
      {{-33.9, 18.5}, 34, false, 268832.299584, 10000000.0 - 3753882.211949},
  };
  for (const Reference& ref : references) {
    const UtmCoordinate utm = geodesy::latlon_to_utm(ref.position);
    CHECK(utm.zone == ref.zone);
    CHECK(utm.is_north == ref.north);
    CHECK(std::abs(utm.easting_m - ref.easting) < 0.01);
    CHECK(std::abs(utm.northing_m - ref.northing) < 0.01);
  }
}

TEST_CASE("one-meter displacements survive projection within 1 cm") {
  // Small-angle construction: degree offsets equivalent to 1 m east / north.
  const double lat = 40.0;
  const double lat_rad = lat * M_PI / 180.0;
  const double a = 6378137.0;
  const double f = 1.0 / 298.257223563;
  const double es = f * (2.0 - f);
  const double meridian_radius =
      a * (1.0 - es) / std::pow(1.0 - es * std::sin(lat_rad) * std::sin(lat_rad), 1.5);
  const double prime_radius = a / std::sqrt(1.0 - es * std::sin(lat_rad) * std::sin(lat_rad));
  const double dlat_per_m = 180.0 / (M_PI * meridian_radius);
  const double dlon_per_m = 180.0 / (M_PI * prime_radius * std::cos(lat_rad));

  for (double lon : {-75.2, -74.0, -72.4}) {
    const UtmCoordinate base = geodesy::latlon_to_utm({lat, lon});
    const UtmCoordinate north = geodesy::latlon_to_utm({lat + dlat_per_m, lon});
    const UtmCoordinate east = geodesy::latlon_to_utm({lat, lon + dlon_per_m});
    const double north_dist = std::hypot(north.easting_m - base.easting_m,
                                         north.northing_m - base.northing_m);
    const double east_dist = std::hypot(east.easting_m - base.easting_m,
                                        east.northing_m - base.northing_m);
    CHECK(std::abs(north_dist - 1.0) < 0.01);
    CHECK(std::abs(east_dist - 1.0) < 0.01);
  }
}

TEST_CASE("forward/inverse projection round-trips") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    GeoPosition pos{rng.uniform(-79.0, 83.0), rng.uniform(-179.5, 179.5)};
    const UtmCoordinate utm = geodesy::latlon_to_utm(pos);
    const GeoPosition back = geodesy::utm_to_latlon(utm);
    CHECK(std::abs(back.latitude_deg - pos.latitude_deg) < 1e-9);
    CHECK(std::abs(back.longitude_deg - pos.longitude_deg) < 1e-9);
  }
}

TEST_CASE("projection is deterministic") {
  const GeoPosition pos{33.42, -111.93};
  const UtmCoordinate first = geodesy::latlon_to_utm(pos);
  const UtmCoordinate second = geodesy::latlon_to_utm(pos);
  CHECK(first.easting_m == second.easting_m);
  CHECK(first.northing_m == second.northing_m);
}

TEST_CASE("latitudes outside the UTM band are rejected") {
  CHECK_THROWS_AS(geodesy::latlon_to_utm({-81.0, 10.0}), ContractError);
  CHECK_THROWS_AS(geodesy::latlon_to_utm({85.0, 10.0}), ContractError);
  CHECK_THROWS_AS(geodesy::latlon_to_utm({91.0, 10.0}), ContractError);
  CHECK_THROWS_AS(geodesy::latlon_to_utm({10.0, 181.0}), ContractError);
}

TEST_CASE("relative_position subtracts and guards zones") {
  UtmCoordinate bs{500000.0, 4000000.0, 12, true};
  SUBCASE("user at bs") {
    const PlanarXY rel = geodesy::relative_position(bs, bs);
    CHECK(rel.x == 0.0);
    CHECK(rel.y == 0.0);
  }
  SUBCASE("user east of bs") {
    UtmCoordinate user = bs;
    user.easting_m += 10.0;
    const PlanarXY rel = geodesy::relative_position(user, bs);
    CHECK(rel.x == 10.0);
    CHECK(rel.y == 0.0);
  }
  SUBCASE("random pairs match plain subtraction") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
      UtmCoordinate user = bs;
      user.easting_m = rng.uniform(400000.0, 600000.0);
      user.northing_m = rng.uniform(3900000.0, 4100000.0);
      const PlanarXY rel = geodesy::relative_position(user, bs);
      CHECK(rel.x == user.easting_m - bs.easting_m);
      CHECK(rel.y == user.northing_m - bs.northing_m);
    }
  }
  SUBCASE("zone mismatch is an error") {
    UtmCoordinate user = bs;
    user.zone = 13;
    CHECK_THROWS_AS(geodesy::relative_position(user, bs), ContractError);
  }
  SUBCASE("hemisphere mismatch is an error") {
    UtmCoordinate user = bs;
    user.is_north = false;
    CHECK_THROWS_AS(geodesy::relative_position(user, bs), ContractError);
  }
}

TEST_CASE("fit_minmax basics") {
  SUBCASE("two points") {
    const PlanarXY pts[] = {{0.0, 0.0}, {2.0, 4.0}};
    const geodesy::NormalizationStats stats = geodesy::fit_minmax(pts);
    CHECK(stats.min_x == 0.0);
    CHECK(stats.max_x == 2.0);
    CHECK(stats.min_y == 0.0);
    CHECK(stats.max_y == 4.0);
  }
  SUBCASE("single point degenerates") {
    const PlanarXY pts[] = {{3.0, -1.0}};
    const geodesy::NormalizationStats stats = geodesy::fit_minmax(pts);
    CHECK(stats.min_x == stats.max_x);
    CHECK(stats.min_y == stats.max_y);
  }
  SUBCASE("empty list is an error") {
    CHECK_THROWS_AS(geodesy::fit_minmax({}), ContractError);
  }
  SUBCASE("1000 random points match a linear scan") {
    Rng rng(17);
    std::vector<PlanarXY> pts;
    double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
    for (int i = 0; i < 1000; ++i) {
      PlanarXY p{rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0)};
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
      pts.push_back(p);
    }
    const geodesy::NormalizationStats stats = geodesy::fit_minmax(pts);
    CHECK(stats.min_x == min_x);
    CHECK(stats.max_x == max_x);
    CHECK(stats.min_y == min_y);
    CHECK(stats.max_y == max_y);
  }
}

TEST_CASE("apply_minmax maps the fitted range onto [0, 1]") {
  const geodesy::NormalizationStats stats{-10.0, 30.0, 5.0, 5.0};  // y degenerate
  const PlanarXY at_min = geodesy::apply_minmax({-10.0, 5.0}, stats);
  CHECK(at_min.x == 0.0);
  CHECK(at_min.y == 0.5);
  const PlanarXY at_max = geodesy::apply_minmax({30.0, 5.0}, stats);
  CHECK(at_max.x == 1.0);
  const PlanarXY mid = geodesy::apply_minmax({10.0, 5.0}, stats);
  CHECK(mid.x == doctest::Approx(0.5));
  // outside the fitted range maps outside [0,1], unclipped
  CHECK(geodesy::apply_minmax({40.0, 5.0}, stats).x > 1.0);
  CHECK(geodesy::apply_minmax({-20.0, 5.0}, stats).x < 0.0);
}

TEST_CASE("apply_minmax preserves per-axis ordering") {
  Rng rng(23);
  std::vector<PlanarXY> pts;
  for (int i = 0; i < 300; ++i) {
    pts.push_back({rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0)});
  }
  const geodesy::NormalizationStats stats = geodesy::fit_minmax(pts);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const PlanarXY a = geodesy::apply_minmax(pts[i - 1], stats);
    const PlanarXY b = geodesy::apply_minmax(pts[i], stats);
    CHECK((pts[i - 1].x < pts[i].x) == (a.x < b.x));
    CHECK((pts[i - 1].y < pts[i].y) == (a.y < b.y));
  }
}

TEST_CASE("normalization maps fitted min to 0 and max to 1 per axis") {
  Rng rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PlanarXY> pts;
    const int count = 1 + static_cast<int>(rng.uniform_int(40));
    for (int i = 0; i < count; ++i) {
      pts.push_back({rng.uniform(-1e4, 1e4), rng.uniform(-1e4, 1e4)});
    }
    const geodesy::NormalizationStats stats = geodesy::fit_minmax(pts);
    if (stats.max_x > stats.min_x) {
      CHECK(geodesy::apply_minmax({stats.min_x, stats.min_y}, stats).x == 0.0);
      CHECK(geodesy::apply_minmax({stats.max_x, stats.min_y}, stats).x == 1.0);
    } else {
      CHECK(geodesy::apply_minmax({stats.min_x, stats.min_y}, stats).x == 0.5);
    }
    if (stats.max_y > stats.min_y) {
      CHECK(geodesy::apply_minmax({stats.min_x, stats.min_y}, stats).y == 0.0);
      CHECK(geodesy::apply_minmax({stats.min_x, stats.max_y}, stats).y == 1.0);
    }
  }
}

TEST_CASE("stats files round-trip byte-exactly") {
  geodesy::StatsFile file;
  file.zone = 12;
  file.is_north = true;
  file.stats = {-123.456789012345, 98.7654321098765, -0.5, 1234.0};
  file.references = {{31, 412345.678901234, 3698765.43210987},
                     {32, 412745.1, 3698765.0}};
  std::ostringstream first;
  geodesy::write_stats(first, file);
  std::istringstream in(first.str());
  const geodesy::StatsFile reread = geodesy::read_stats(in);
  std::ostringstream second;
  geodesy::write_stats(second, reread);
  CHECK(first.str() == second.str());
  CHECK(reread.stats.min_x == file.stats.min_x);
  CHECK(reread.references.size() == 2);
  CHECK(reread.references[1].scenario_id == 32);
}

TEST_CASE("malformed stats files are rejected") {
  std::istringstream bad_header("nonsense\nzone 12\n");
  CHECK_THROWS_AS(geodesy::read_stats(bad_header), IoError);
  std::istringstream bad_line("beamlab_norm_stats v1\nzone twelve\n");
  CHECK_THROWS_AS(geodesy::read_stats(bad_line), IoError);
}
