#include "beamlab/beamsim.hpp"

#include <cmath>
#include <string>

#include "beamlab/errors.hpp"

namespace beamlab::beamsim {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

void ArrayConfig::validate() const {
  if (num_antennas < 1) throw ConfigError("num_antennas must be positive");
  if (num_beams < 1) throw ConfigError("num_beams must be positive");
  if (num_beams < num_antennas) {
    throw ConfigError("codebook must be oversampled: num_beams " +
                      std::to_string(num_beams) + " < num_antennas " +
                      std::to_string(num_antennas));
  }
  if (num_subcarriers < 1) throw ConfigError("num_subcarriers must be positive");
  if (!(element_spacing > 0.0)) throw ConfigError("element_spacing must be > 0");
}

double BeamCodebook::beam_sine(int beam_index) const {
  return -1.0 + (2.0 * beam_index + 1.0) / config.num_beams;
}

void ChannelState::validate() const {
  if (!(tx_power > 0.0)) throw ContractError("tx_power must be positive");
  if (!(noise_power >= 0.0)) throw ContractError("noise_power must be >= 0");
  for (const ComplexVector& h : per_subcarrier) {
    for (const Complex& c : h) {
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
        throw ContractError("channel contains non-finite entries");
      }
    }
  }
}

ComplexVector steering_vector(double sin_angle, const ArrayConfig& config) {
  if (!(sin_angle >= -1.0 && sin_angle <= 1.0)) {
    throw ContractError("sin_angle " + std::to_string(sin_angle) +
                        " outside [-1, 1]");
  }
  ComplexVector response(config.num_antennas);
  for (int m = 0; m < config.num_antennas; ++m) {
    const double phase = 2.0 * kPi * config.element_spacing * m * sin_angle;
    response[m] = Complex{std::cos(phase), std::sin(phase)};
  }
  return response;
}

BeamCodebook build_codebook(const ArrayConfig& config) {
  config.validate();
  BeamCodebook codebook;
  codebook.config = config;
  codebook.beams.reserve(config.num_beams);
  const double norm = 1.0 / std::sqrt(static_cast<double>(config.num_antennas));
  for (int q = 0; q < config.num_beams; ++q) {
    const double grid_sine = -1.0 + (2.0 * q + 1.0) / config.num_beams;
    ComplexVector beam = steering_vector(grid_sine, config);
    for (Complex& w : beam) w = std::conj(w) * norm;
    codebook.beams.push_back(std::move(beam));
  }
  return codebook;
}

PowerVector receive_power(const ChannelState& channel, const BeamCodebook& codebook) {
  const int num_antennas = codebook.config.num_antennas;
  channel.validate();
  if (channel.per_subcarrier.empty()) {
    throw ContractError("channel has no subcarriers");
  }
  for (const ComplexVector& h : channel.per_subcarrier) {
    if (static_cast<int>(h.size()) != num_antennas) {
      throw ContractError("channel vector length " + std::to_string(h.size()) +
                          " does not match array size " +
                          std::to_string(num_antennas));
    }
  }
  const double subcarriers = static_cast<double>(channel.per_subcarrier.size());
  PowerVector out;
  out.powers.resize(codebook.beams.size(), 0.0);
  for (std::size_t q = 0; q < codebook.beams.size(); ++q) {
    const ComplexVector& beam = codebook.beams[q];
    double acc = 0.0;
    for (const ComplexVector& h : channel.per_subcarrier) {
      Complex dot{0.0, 0.0};
      for (int m = 0; m < num_antennas; ++m) dot += h[m] * beam[m];
      acc += std::norm(dot);
    }
    out.powers[q] = channel.tx_power * acc / subcarriers;
  }
  return out;
}

int optimal_beam(const PowerVector& powers) {
  if (powers.powers.empty()) {
    throw ContractError("optimal_beam on empty power vector");
  }
  int best = 0;
  for (int q = 1; q < static_cast<int>(powers.powers.size()); ++q) {
    if (powers.powers[q] > powers.powers[best]) best = q;
  }
  return best;
}

ChannelState synth_channel(std::span<const PathComponent> paths,
                           const ArrayConfig& config) {
  config.validate();
  for (const PathComponent& path : paths) {
    if (!std::isfinite(path.gain.real()) || !std::isfinite(path.gain.imag()) ||
        !std::isfinite(path.delay)) {
      throw ContractError("path has non-finite gain or delay");
    }
  }
  ChannelState channel;
  channel.per_subcarrier.assign(config.num_subcarriers,
                                ComplexVector(config.num_antennas, Complex{0.0, 0.0}));
  for (const PathComponent& path : paths) {
    const ComplexVector response = steering_vector(path.sin_angle, config);
    for (int k = 0; k < config.num_subcarriers; ++k) {
      const double phase = -2.0 * kPi * k * path.delay / config.num_subcarriers;
      const Complex tap = path.gain * Complex{std::cos(phase), std::sin(phase)};
      ComplexVector& h = channel.per_subcarrier[k];
      for (int m = 0; m < config.num_antennas; ++m) h[m] += tap * response[m];
    }
  }
  return channel;
}

PathComponent los_path(double x_m, double y_m) {
  const double distance = std::hypot(x_m, y_m);
  if (!(distance > 0.0)) {
    throw ContractError("user is at the BS origin; LOS geometry undefined");
  }
  PathComponent path;
  path.gain = Complex{1.0 / distance, 0.0};
  path.sin_angle = x_m / distance;
  path.delay = 0.0;
  return path;
}

ChannelState synth_channel(double x_m, double y_m,
                           std::span<const PathComponent> extra_paths,
                           const ArrayConfig& config) {
  std::vector<PathComponent> paths;
  paths.reserve(extra_paths.size() + 1);
  paths.push_back(los_path(x_m, y_m));
  paths.insert(paths.end(), extra_paths.begin(), extra_paths.end());
  return synth_channel(std::span<const PathComponent>(paths), config);
}

ChannelState synth_channel(double x_m, double y_m, const ArrayConfig& config) {
  return synth_channel(x_m, y_m, {}, config);
}

}  // namespace beamlab::beamsim
