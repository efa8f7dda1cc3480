#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace beamlab::geodesy {

struct GeoPosition {
  double latitude_deg = 0.0;   // [-90, 90]
  double longitude_deg = 0.0;  // [-180, 180]

  void validate() const;  // throws ContractError when out of range or non-finite
};

struct UtmCoordinate {
  double easting_m = 0.0;
  double northing_m = 0.0;
  int zone = 0;  // 1..60
  bool is_north = true;
};

struct PlanarXY {
  double x = 0.0;  // east offset, meters
  double y = 0.0;  // north offset, meters
};

// UTM zone for a longitude, standard 6-degree bands (no Norway/Svalbard
// exceptions; scenarios here are geographically compact).
int utm_zone_for(double longitude_deg);

// Central meridian of a zone in degrees.
double utm_central_meridian_deg(int zone);

// Forward WGS-84 UTM projection. Kruger series in the third flattening,
// order n^6: sub-millimeter accuracy across a zone. Scale 0.9996, false
// easting 500 km, false northing 10000 km in the south.
// Latitude must be inside the UTM band [-80, 84] degrees.
UtmCoordinate latlon_to_utm(const GeoPosition& pos);

// Same projection forced into a specific zone (for points near a zone edge
// that must share a scenario's zone).
UtmCoordinate latlon_to_utm(const GeoPosition& pos, int zone);

// Inverse projection. Series inverse for the complex argument, then Newton
// on the conformal-latitude tangent, so no inverse-series coefficients are
// needed for the latitude recovery.
GeoPosition utm_to_latlon(const UtmCoordinate& coord);

// (user - bs) in meters. Both coordinates must share zone and hemisphere.
PlanarXY relative_position(const UtmCoordinate& user, const UtmCoordinate& bs);

// Per-axis min/max over BS-relative planar positions.
struct NormalizationStats {
  double min_x = 0.0, max_x = 0.0;
  double min_y = 0.0, max_y = 0.0;
};

NormalizationStats fit_minmax(std::span<const PlanarXY> positions);

// (v - min)/(max - min) per axis. Inputs outside [min,max] map outside [0,1];
// a degenerate axis (max == min) maps to 0.5.
PlanarXY apply_minmax(const PlanarXY& pos, const NormalizationStats& stats);

// Key-value serialization of fitted stats plus the projection context they
// were fitted in (zone, hemisphere, per-scenario BS coordinates), so a
// trained model can be re-run bit-exactly.
struct ScenarioReference {
  int scenario_id = 0;
  double bs_easting_m = 0.0;
  double bs_northing_m = 0.0;
};

struct StatsFile {
  NormalizationStats stats;
  int zone = 0;
  bool is_north = true;
  std::vector<ScenarioReference> references;
};

void write_stats(std::ostream& out, const StatsFile& file);
StatsFile read_stats(std::istream& in);
void save_stats(const std::string& path, const StatsFile& file);
StatsFile load_stats(const std::string& path);

}  // namespace beamlab::geodesy
