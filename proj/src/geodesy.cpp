#include "beamlab/geodesy.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "beamlab/errors.hpp"

namespace beamlab::geodesy {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kSemiMajorAxis = 6378137.0;       // WGS-84 a
constexpr double kFlattening = 1.0 / 298.257223563;  // WGS-84 f
constexpr double kScale = 0.9996;
constexpr double kFalseEasting = 500000.0;
constexpr double kFalseNorthingSouth = 10000000.0;
constexpr double kMinUtmLatDeg = -80.0;
constexpr double kMaxUtmLatDeg = 84.0;

double deg2rad(double deg) { return deg * kPi / 180.0; }
double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Kruger series constants in the third flattening n (Karney 2011 ordering).
struct TmConstants {
  double rectifying_radius;       // A
  std::array<double, 6> alpha;    // forward series
  std::array<double, 6> beta;     // inverse series
  double eccentricity;            // e
};

const TmConstants& tm_constants() {
  static const TmConstants k = [] {
    TmConstants c{};
    const double f = kFlattening;
    const double n = f / (2.0 - f);
    const double n2 = n * n, n3 = n2 * n, n4 = n3 * n, n5 = n4 * n, n6 = n5 * n;
    c.rectifying_radius =
        kSemiMajorAxis / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
    c.alpha = {
        n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0 -
            127.0 * n5 / 288.0 + 7891.0 * n6 / 37800.0,
        13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0 +
            281.0 * n5 / 630.0 - 1983433.0 * n6 / 1935360.0,
        61.0 * n3 / 240.0 - 103.0 * n4 / 140.0 + 15061.0 * n5 / 26880.0 +
            167603.0 * n6 / 181440.0,
        49561.0 * n4 / 161280.0 - 179.0 * n5 / 168.0 + 6601661.0 * n6 / 7257600.0,
        34729.0 * n5 / 80640.0 - 3418889.0 * n6 / 1995840.0,
        212378941.0 * n6 / 319334400.0,
    };
    c.beta = {
        n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0 - n4 / 360.0 -
            81.0 * n5 / 512.0 + 96199.0 * n6 / 604800.0,
        n2 / 48.0 + n3 / 15.0 - 437.0 * n4 / 1440.0 + 46.0 * n5 / 105.0 -
            1118711.0 * n6 / 3870720.0,
        17.0 * n3 / 480.0 - 37.0 * n4 / 840.0 - 209.0 * n5 / 4480.0 +
            5569.0 * n6 / 90720.0,
        4397.0 * n4 / 161280.0 - 11.0 * n5 / 504.0 - 830251.0 * n6 / 7257600.0,
        4583.0 * n5 / 161280.0 - 108847.0 * n6 / 3991680.0,
        20648693.0 * n6 / 638668800.0,
    };
    c.eccentricity = std::sqrt(f * (2.0 - f));
    return c;
  }();
  return k;
}

// tau' = conformal-latitude tangent as a function of tau = tan(phi).
double conformal_tangent(double tau) {
  const double e = tm_constants().eccentricity;
  const double sin_phi = tau / std::sqrt(1.0 + tau * tau);
  return std::sinh(std::asinh(tau) - e * std::atanh(e * sin_phi));
}

// Inverts conformal_tangent by bisection; monotone increasing, so a doubling
// bracket always closes.
double invert_conformal_tangent(double tau_prime) {
  if (tau_prime == 0.0) return 0.0;
  double lo = tau_prime;
  double hi = tau_prime / (1.0 - kFlattening * (2.0 - kFlattening));
  if (lo > hi) std::swap(lo, hi);
  while (conformal_tangent(lo) > tau_prime) lo -= std::abs(lo) + 1.0;
  while (conformal_tangent(hi) < tau_prime) hi += std::abs(hi) + 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (conformal_tangent(mid) < tau_prime) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void GeoPosition::validate() const {
  if (!std::isfinite(latitude_deg) || !std::isfinite(longitude_deg)) {
    throw ContractError("geoposition has non-finite coordinates");
  }
  if (latitude_deg < -90.0 || latitude_deg > 90.0) {
    throw ContractError("latitude " + std::to_string(latitude_deg) +
                        " outside [-90, 90]");
  }
  if (longitude_deg < -180.0 || longitude_deg > 180.0) {
    throw ContractError("longitude " + std::to_string(longitude_deg) +
                        " outside [-180, 180]");
  }
}

int utm_zone_for(double longitude_deg) {
  int zone = static_cast<int>(std::floor((longitude_deg + 180.0) / 6.0)) + 1;
  if (zone < 1) zone = 1;
  if (zone > 60) zone = 60;  // longitude 180 folds into zone 60
  return zone;
}

double utm_central_meridian_deg(int zone) {
  if (zone < 1 || zone > 60) {
    throw ContractError("UTM zone " + std::to_string(zone) + " outside 1..60");
  }
  return zone * 6.0 - 183.0;
}

UtmCoordinate latlon_to_utm(const GeoPosition& pos) {
  return latlon_to_utm(pos, utm_zone_for(pos.longitude_deg));
}

UtmCoordinate latlon_to_utm(const GeoPosition& pos, int zone) {
  pos.validate();
  if (pos.latitude_deg < kMinUtmLatDeg || pos.latitude_deg > kMaxUtmLatDeg) {
    throw ContractError("latitude " + std::to_string(pos.latitude_deg) +
                        " outside the UTM band [-80, 84]");
  }
  const TmConstants& tm = tm_constants();
  const double phi = deg2rad(pos.latitude_deg);
  const double dlon = deg2rad(pos.longitude_deg - utm_central_meridian_deg(zone));

  const double t = conformal_tangent(std::tan(phi));
  const double xi_p = std::atan2(t, std::cos(dlon));
  const double eta_p = std::atanh(std::sin(dlon) / std::sqrt(1.0 + t * t));

  double xi = xi_p;
  double eta = eta_p;
  for (int j = 1; j <= 6; ++j) {
    xi += tm.alpha[j - 1] * std::sin(2.0 * j * xi_p) * std::cosh(2.0 * j * eta_p);
    eta += tm.alpha[j - 1] * std::cos(2.0 * j * xi_p) * std::sinh(2.0 * j * eta_p);
  }

  UtmCoordinate out;
  out.zone = zone;
  out.is_north = pos.latitude_deg >= 0.0;
  out.easting_m = kFalseEasting + kScale * tm.rectifying_radius * eta;
  out.northing_m = kScale * tm.rectifying_radius * xi +
                   (out.is_north ? 0.0 : kFalseNorthingSouth);
  return out;
}

GeoPosition utm_to_latlon(const UtmCoordinate& coord) {
  if (coord.zone < 1 || coord.zone > 60) {
    throw ContractError("UTM zone " + std::to_string(coord.zone) + " outside 1..60");
  }
  const TmConstants& tm = tm_constants();
  const double northing =
      coord.northing_m - (coord.is_north ? 0.0 : kFalseNorthingSouth);
  const double xi = northing / (kScale * tm.rectifying_radius);
  const double eta = (coord.easting_m - kFalseEasting) / (kScale * tm.rectifying_radius);

  double xi_p = xi;
  double eta_p = eta;
  for (int j = 1; j <= 6; ++j) {
    xi_p -= tm.beta[j - 1] * std::sin(2.0 * j * xi) * std::cosh(2.0 * j * eta);
    eta_p -= tm.beta[j - 1] * std::cos(2.0 * j * xi) * std::sinh(2.0 * j * eta);
  }

  const double tau_prime =
      std::sin(xi_p) / std::sqrt(std::sinh(eta_p) * std::sinh(eta_p) +
                                 std::cos(xi_p) * std::cos(xi_p));
  const double tau = invert_conformal_tangent(tau_prime);

  GeoPosition out;
  out.latitude_deg = rad2deg(std::atan(tau));
  out.longitude_deg = utm_central_meridian_deg(coord.zone) +
                      rad2deg(std::atan2(std::sinh(eta_p), std::cos(xi_p)));
  return out;
}

PlanarXY relative_position(const UtmCoordinate& user, const UtmCoordinate& bs) {
  if (user.zone != bs.zone) {
    throw ContractError("UTM zone mismatch: user zone " + std::to_string(user.zone) +
                        " vs BS zone " + std::to_string(bs.zone));
  }
  if (user.is_north != bs.is_north) {
    throw ContractError("UTM hemisphere mismatch between user and BS");
  }
  return {user.easting_m - bs.easting_m, user.northing_m - bs.northing_m};
}

NormalizationStats fit_minmax(std::span<const PlanarXY> positions) {
  if (positions.empty()) {
    throw ContractError("fit_minmax requires at least one position");
  }
  NormalizationStats stats{positions[0].x, positions[0].x, positions[0].y,
                           positions[0].y};
  for (const PlanarXY& p : positions) {
    stats.min_x = std::min(stats.min_x, p.x);
    stats.max_x = std::max(stats.max_x, p.x);
    stats.min_y = std::min(stats.min_y, p.y);
    stats.max_y = std::max(stats.max_y, p.y);
  }
  return stats;
}

PlanarXY apply_minmax(const PlanarXY& pos, const NormalizationStats& stats) {
  auto scale = [](double v, double lo, double hi) {
    if (hi == lo) return 0.5;
    return (v - lo) / (hi - lo);
  };
  return {scale(pos.x, stats.min_x, stats.max_x),
          scale(pos.y, stats.min_y, stats.max_y)};
}

namespace {

void write_double(std::ostream& out, const char* key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  out << key << ' ' << buf << '\n';
}

}  // namespace

void write_stats(std::ostream& out, const StatsFile& file) {
  out << "beamlab_norm_stats v1\n";
  out << "zone " << file.zone << '\n';
  out << "hemisphere " << (file.is_north ? 'N' : 'S') << '\n';
  write_double(out, "min_x", file.stats.min_x);
  write_double(out, "max_x", file.stats.max_x);
  write_double(out, "min_y", file.stats.min_y);
  write_double(out, "max_y", file.stats.max_y);
  out << "num_references " << file.references.size() << '\n';
  for (const ScenarioReference& ref : file.references) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "bs %d %.17g %.17g", ref.scenario_id,
                  ref.bs_easting_m, ref.bs_northing_m);
    out << buf << '\n';
  }
}

StatsFile read_stats(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header != "beamlab_norm_stats v1") {
    throw IoError("normalization stats: bad or missing header");
  }
  StatsFile file;
  std::string line;
  std::size_t expected_refs = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string key;
    row >> key;
    if (key == "zone") {
      row >> file.zone;
    } else if (key == "hemisphere") {
      char h = 'N';
      row >> h;
      file.is_north = (h == 'N');
    } else if (key == "min_x") {
      row >> file.stats.min_x;
    } else if (key == "max_x") {
      row >> file.stats.max_x;
    } else if (key == "min_y") {
      row >> file.stats.min_y;
    } else if (key == "max_y") {
      row >> file.stats.max_y;
    } else if (key == "num_references") {
      row >> expected_refs;
    } else if (key == "bs") {
      ScenarioReference ref;
      row >> ref.scenario_id >> ref.bs_easting_m >> ref.bs_northing_m;
      file.references.push_back(ref);
    } else {
      throw IoError("normalization stats: unknown key '" + key + "'");
    }
    if (row.fail()) {
      throw IoError("normalization stats: malformed line '" + line + "'");
    }
  }
  if (file.references.size() != expected_refs) {
    throw IoError("normalization stats: reference count mismatch");
  }
  return file;
}

void save_stats(const std::string& path, const StatsFile& file) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_stats(out, file);
  if (!out) throw IoError("write failed for '" + path + "'");
}

StatsFile load_stats(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_stats(in);
}

}  // namespace beamlab::geodesy
