#pragma once

#include <complex>
#include <span>
#include <vector>

namespace beamlab::beamsim {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

struct ArrayConfig {
  int num_antennas = 16;      // ULA elements
  int num_beams = 64;         // oversampled codebook size, >= num_antennas
  int num_subcarriers = 32;   // OFDM subcarriers
  double element_spacing = 0.5;  // fraction of wavelength

  void validate() const;  // throws ConfigError
};

// The candidate beamforming vectors the basestation searches over. Each beam
// is unit-norm; beam q points at sine s_q = -1 + (2q+1)/Q (uniform grid in
// sine space with half-step centering).
struct BeamCodebook {
  ArrayConfig config;
  std::vector<ComplexVector> beams;  // Q vectors of length M

  // Grid sine of beam q.
  double beam_sine(int beam_index) const;
};

// One user snapshot: per-subcarrier channel vectors plus link powers.
struct ChannelState {
  std::vector<ComplexVector> per_subcarrier;  // K vectors of length M
  double noise_power = 0.0;                   // linear, bookkeeping only
  double tx_power = 1.0;                      // linear

  // finite entries, noise_power >= 0, tx_power > 0
  void validate() const;
};

// Per-beam linear receive power, averaged over subcarriers.
struct PowerVector {
  std::vector<double> powers;
};

// One propagation path: complex gain, arrival sine, normalized delay in
// subcarrier-index units.
struct PathComponent {
  Complex gain{1.0, 0.0};
  double sin_angle = 0.0;
  double delay = 0.0;
};

// Unnormalized ULA response: element m = exp(j*2*pi*spacing*m*sin_angle).
ComplexVector steering_vector(double sin_angle, const ArrayConfig& config);

BeamCodebook build_codebook(const ArrayConfig& config);

// powers[q] = tx_power * (1/K) * sum_k |h_k^T f_q|^2.
PowerVector receive_power(const ChannelState& channel, const BeamCodebook& codebook);

// argmax of the power vector; ties break to the lowest index.
int optimal_beam(const PowerVector& powers);

// Geometric channel: h_k = sum_l gain_l * exp(-j*2*pi*k*delay_l/K) * steer(sin_l).
ChannelState synth_channel(std::span<const PathComponent> paths,
                           const ArrayConfig& config);

// Line-of-sight path for a user at planar (x, y) meters relative to the BS.
// Boresight is +y, so sin(angle) = x / distance; amplitude decays as
// 1/distance; delay is relative to first arrival, i.e. zero.
PathComponent los_path(double x_m, double y_m);

// Channel for a user position: the LOS path plus any extra paths.
ChannelState synth_channel(double x_m, double y_m,
                           std::span<const PathComponent> extra_paths,
                           const ArrayConfig& config);

// Convenience: single-LOS channel for a user position.
ChannelState synth_channel(double x_m, double y_m, const ArrayConfig& config);

}  // namespace beamlab::beamsim
