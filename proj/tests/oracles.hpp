// Test-only reference implementations. Deliberately naive and written against
// the definitions directly, independent of the library code paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

namespace oracles {

// Per-beam receive power by scalar triple loop over beams, subcarriers and
// antennas, tracking real/imaginary parts by hand.
inline std::vector<double> naive_receive_power(
    const std::vector<std::vector<std::pair<double, double>>>& channel,  // [k][m] re/im
    const std::vector<std::vector<std::pair<double, double>>>& beams,    // [q][m] re/im
    double tx_power) {
  const std::size_t num_beams = beams.size();
  const std::size_t num_subcarriers = channel.size();
  std::vector<double> powers(num_beams, 0.0);
  for (std::size_t q = 0; q < num_beams; ++q) {
    double acc = 0.0;
    for (std::size_t k = 0; k < num_subcarriers; ++k) {
      double re = 0.0, im = 0.0;
      for (std::size_t m = 0; m < channel[k].size(); ++m) {
        const double hr = channel[k][m].first, hi = channel[k][m].second;
        const double fr = beams[q][m].first, fi = beams[q][m].second;
        re += hr * fr - hi * fi;
        im += hr * fi + hi * fr;
      }
      acc += re * re + im * im;
    }
    powers[q] = tx_power * acc / static_cast<double>(num_subcarriers);
  }
  return powers;
}

// Y_k and the DBA-Score computed exactly as the definitions read: for every k,
// collect the k leading distances, saturate, take the best.
inline std::vector<double> naive_dba_per_k(const std::vector<std::vector<int>>& predictions,
                                           const std::vector<int>& labels, int top_k,
                                           int delta) {
  std::vector<double> per_k;
  for (int k = 1; k <= top_k; ++k) {
    double total = 0.0;
    for (std::size_t n = 0; n < labels.size(); ++n) {
      std::vector<double> candidates;
      for (int rank = 0; rank < k; ++rank) {
        const double saturated = std::min(
            std::abs(predictions[n][rank] - labels[n]) / static_cast<double>(delta), 1.0);
        candidates.push_back(saturated);
      }
      total += *std::min_element(candidates.begin(), candidates.end());
    }
    per_k.push_back(1.0 - total / static_cast<double>(labels.size()));
  }
  return per_k;
}

inline double naive_dba_score(const std::vector<std::vector<int>>& predictions,
                              const std::vector<int>& labels, int top_k, int delta) {
  const std::vector<double> per_k = naive_dba_per_k(predictions, labels, top_k, delta);
  double total = 0.0;
  for (double y : per_k) total += y;
  return total / static_cast<double>(top_k);
}

inline double naive_top_k_accuracy(const std::vector<std::vector<int>>& predictions,
                                   const std::vector<int>& labels, int k) {
  int hits = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const auto begin = predictions[n].begin();
    if (std::find(begin, begin + k, labels[n]) != begin + k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

struct NaivePowerRatio {
  double value = 0.0;
  int excluded = 0;
};

inline NaivePowerRatio naive_power_ratio(
    const std::vector<std::vector<int>>& predictions, const std::vector<int>& labels,
    const std::vector<std::vector<double>>& power_vectors,
    const std::vector<int>& scenario_ids, int k) {
  std::map<int, double> floors;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    double low = power_vectors[n][0];
    for (double p : power_vectors[n]) low = std::min(low, p);
    if (floors.count(scenario_ids[n]) == 0 || low < floors[scenario_ids[n]]) {
      floors[scenario_ids[n]] = low;
    }
  }
  NaivePowerRatio out;
  double total = 0.0;
  int counted = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const double floor = floors[scenario_ids[n]];
    const double truth = power_vectors[n][labels[n]] - floor;
    if (truth == 0.0) {
      ++out.excluded;
      continue;
    }
    double best = power_vectors[n][predictions[n][0]];
    for (int rank = 1; rank < k; ++rank) {
      best = std::max(best, power_vectors[n][predictions[n][rank]]);
    }
    total += (best - floor) / truth;
    ++counted;
  }
  out.value = counted > 0 ? total / counted : 0.0;
  return out;
}

// Meridian arc length from the equator by Simpson quadrature of the meridional
// radius of curvature on the WGS-84 ellipsoid.
inline double meridian_arc_quadrature(double latitude_deg) {
  const double a = 6378137.0;
  const double f = 1.0 / 298.257223563;
  const double es = f * (2.0 - f);
  const double phi_end = latitude_deg * 3.141592653589793238462643383279502884 / 180.0;
  const int intervals = 20000;  // even
  const double h = phi_end / intervals;
  auto radius = [&](double phi) {
    const double s = std::sin(phi);
    return a * (1.0 - es) / std::pow(1.0 - es * s * s, 1.5);
  };
  double acc = radius(0.0) + radius(phi_end);
  for (int i = 1; i < intervals; ++i) {
    acc += (i % 2 == 1 ? 4.0 : 2.0) * radius(i * h);
  }
  return acc * h / 3.0;
}

// Grid point index nearest to a sine, for the centered uniform codebook grid.
inline int nearest_grid_beam(double sine, int num_beams) {
  int best = 0;
  double best_distance = 2.0;
  for (int q = 0; q < num_beams; ++q) {
    const double grid = -1.0 + (2.0 * q + 1.0) / num_beams;
    const double distance = std::abs(sine - grid);
    if (distance < best_distance) {
      best_distance = distance;
      best = q;
    }
  }
  return best;
}

}  // namespace oracles
