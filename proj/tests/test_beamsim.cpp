#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "beamlab/beamsim.hpp"
#include "beamlab/errors.hpp"
#include "beamlab/rng.hpp"
#include "oracles.hpp"

using namespace beamlab;
using beamsim::ArrayConfig;
using beamsim::BeamCodebook;
using beamsim::ChannelState;
using beamsim::Complex;
using beamsim::ComplexVector;
using beamsim::PathComponent;
using beamsim::PowerVector;

namespace {

ChannelState flat_channel(const ComplexVector& h, int num_subcarriers,
                          double tx_power = 1.0) {
  ChannelState channel;
  channel.per_subcarrier.assign(num_subcarriers, h);
  channel.tx_power = tx_power;
  return channel;
}

std::vector<std::vector<std::pair<double, double>>> to_pairs(
    const std::vector<ComplexVector>& vectors) {
  std::vector<std::vector<std::pair<double, double>>> out;
  for (const ComplexVector& v : vectors) {
    std::vector<std::pair<double, double>> row;
    for (const Complex& c : v) row.emplace_back(c.real(), c.imag());
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

TEST_CASE("steering vector phases") {
  ArrayConfig cfg;
  SUBCASE("broadside gives all ones") {
    const ComplexVector v = beamsim::steering_vector(0.0, cfg);
    REQUIRE(v.size() == 16);
    for (const Complex& c : v) {
      CHECK(c.real() == doctest::Approx(1.0));
      CHECK(c.imag() == doctest::Approx(0.0));
    }
  }
  SUBCASE("half-wavelength endfire alternates sign") {
    ArrayConfig two = cfg;
    two.num_antennas = 2;
    two.num_beams = 2;
    const ComplexVector v = beamsim::steering_vector(1.0, two);
    CHECK(v[0].real() == doctest::Approx(1.0));
    CHECK(v[1].real() == doctest::Approx(-1.0));
    CHECK(v[1].imag() == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("element 4 at sin 0.25 sits at phase pi") {
    const ComplexVector v = beamsim::steering_vector(0.25, cfg);
    // phase = 2*pi*0.5*4*0.25 = pi
    CHECK(v[4].real() == doctest::Approx(-1.0));
    CHECK(std::abs(v[4].imag()) < 1e-12);
  }
  SUBCASE("out-of-range sine rejected") {
    CHECK_THROWS_AS(beamsim::steering_vector(1.0001, cfg), ContractError);
    CHECK_THROWS_AS(beamsim::steering_vector(std::nan(""), cfg), ContractError);
  }
}

TEST_CASE("codebook construction") {
  ArrayConfig cfg;
  const BeamCodebook codebook = beamsim::build_codebook(cfg);
  REQUIRE(codebook.beams.size() == 64);

  SUBCASE("beams are unit norm") {
    for (const ComplexVector& beam : codebook.beams) {
      double norm = 0.0;
      for (const Complex& w : beam) norm += std::norm(w);
      CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-12);
    }
  }
  SUBCASE("grid is uniform in sine with half-step centering") {
    CHECK(codebook.beam_sine(0) == doctest::Approx(-1.0 + 1.0 / 64.0));
    for (int q = 1; q < 64; ++q) {
      CHECK(codebook.beam_sine(q) - codebook.beam_sine(q - 1) ==
            doctest::Approx(2.0 / 64.0));
    }
  }
  SUBCASE("beams are pairwise distinct") {
    for (std::size_t a = 0; a < codebook.beams.size(); ++a) {
      for (std::size_t b = a + 1; b < codebook.beams.size(); ++b) {
        double diff = 0.0;
        for (int m = 0; m < cfg.num_antennas; ++m) {
          diff += std::abs(codebook.beams[a][m] - codebook.beams[b][m]);
        }
        CHECK(diff > 1e-9);
      }
    }
  }
  SUBCASE("scalar array has the trivial codebook") {
    ArrayConfig one;
    one.num_antennas = 1;
    one.num_beams = 1;
    const BeamCodebook scalar = beamsim::build_codebook(one);
    REQUIRE(scalar.beams.size() == 1);
    CHECK(scalar.beams[0][0] == Complex{1.0, 0.0});
  }
  SUBCASE("undersampled codebook rejected") {
    ArrayConfig bad;
    bad.num_beams = 8;
    CHECK_THROWS_AS(beamsim::build_codebook(bad), ConfigError);
  }
}

TEST_CASE("receive power") {
  ArrayConfig cfg;
  const BeamCodebook codebook = beamsim::build_codebook(cfg);

  SUBCASE("matched beam collects power M") {
    const double sine = codebook.beam_sine(20);
    const ChannelState channel = flat_channel(beamsim::steering_vector(sine, cfg), 4);
    const PowerVector powers = beamsim::receive_power(channel, codebook);
    CHECK(std::abs(powers.powers[20] - 16.0) < 1e-9);
    CHECK(beamsim::optimal_beam(powers) == 20);
  }
  SUBCASE("zero channel gives zero power") {
    const ChannelState channel = flat_channel(ComplexVector(16, Complex{0.0, 0.0}), 2);
    const PowerVector powers = beamsim::receive_power(channel, codebook);
    for (double p : powers.powers) CHECK(p == 0.0);
  }
  SUBCASE("random channels match the scalar-loop oracle") {
    Rng rng(5);
    for (int trial = 0; trial < 60; ++trial) {
      ArrayConfig small;
      small.num_antennas = 1 + static_cast<int>(rng.uniform_int(8));
      small.num_beams =
          small.num_antennas + static_cast<int>(rng.uniform_int(
                                   static_cast<std::uint64_t>(17 - small.num_antennas)));
      small.num_subcarriers = 1 + static_cast<int>(rng.uniform_int(4));
      const BeamCodebook small_book = beamsim::build_codebook(small);
      ChannelState channel;
      channel.tx_power = rng.uniform(0.1, 4.0);
      for (int k = 0; k < small.num_subcarriers; ++k) {
        ComplexVector h(small.num_antennas);
        for (Complex& c : h) c = Complex{rng.normal(), rng.normal()};
        channel.per_subcarrier.push_back(std::move(h));
      }
      const PowerVector powers = beamsim::receive_power(channel, small_book);
      const std::vector<double> expected = oracles::naive_receive_power(
          to_pairs(channel.per_subcarrier), to_pairs(small_book.beams), channel.tx_power);
      REQUIRE(powers.powers.size() == expected.size());
      for (std::size_t q = 0; q < expected.size(); ++q) {
        CHECK(powers.powers[q] ==
              doctest::Approx(expected[q]).epsilon(1e-12).scale(expected[q]));
      }
    }
  }
  SUBCASE("shape mismatch rejected") {
    const ChannelState channel = flat_channel(ComplexVector(8, Complex{1.0, 0.0}), 2);
    CHECK_THROWS_AS(beamsim::receive_power(channel, codebook), ContractError);
  }
}

TEST_CASE("power scales with |c|^2 and argmax is invariant") {
  ArrayConfig cfg;
  const BeamCodebook codebook = beamsim::build_codebook(cfg);
  Rng rng(7);
  ChannelState channel;
  for (int k = 0; k < cfg.num_subcarriers; ++k) {
    ComplexVector h(cfg.num_antennas);
    for (Complex& c : h) c = Complex{rng.normal(), rng.normal()};
    channel.per_subcarrier.push_back(std::move(h));
  }
  const Complex scale{1.25, -2.0};
  ChannelState scaled = channel;
  for (ComplexVector& h : scaled.per_subcarrier) {
    for (Complex& c : h) c *= scale;
  }
  const PowerVector base = beamsim::receive_power(channel, codebook);
  const PowerVector boosted = beamsim::receive_power(scaled, codebook);
  for (std::size_t q = 0; q < base.powers.size(); ++q) {
    CHECK(boosted.powers[q] ==
          doctest::Approx(std::norm(scale) * base.powers[q]).epsilon(1e-12));
  }
  CHECK(beamsim::optimal_beam(base) == beamsim::optimal_beam(boosted));
}

TEST_CASE("optimal beam argmax and tie-breaking") {
  CHECK(beamsim::optimal_beam({{0.1, 0.9, 0.3}}) == 1);
  CHECK(beamsim::optimal_beam({{0.5, 0.5}}) == 0);
  CHECK_THROWS_AS(beamsim::optimal_beam({{}}), ContractError);
}

TEST_CASE("single-path optimal beam is the nearest grid point") {
  ArrayConfig cfg;
  const BeamCodebook codebook = beamsim::build_codebook(cfg);
  int checked = 0;
  for (double sine = -0.9995; sine <= 0.9995; sine += 1e-3) {
    // skip exact grid midpoints where the two neighbours tie
    const double cell = (sine + 1.0) * 32.0;
    if (std::abs(cell - std::round(cell)) < 1e-6) continue;
    const PathComponent path{Complex{1.0, 0.0}, sine, 0.0};
    const ChannelState channel =
        beamsim::synth_channel(std::span<const PathComponent>{&path, 1}, cfg);
    const PowerVector powers = beamsim::receive_power(channel, codebook);
    CHECK(beamsim::optimal_beam(powers) == oracles::nearest_grid_beam(sine, 64));
    ++checked;
  }
  CHECK(checked > 1900);
}

TEST_CASE("synthetic channels") {
  ArrayConfig cfg;
  const BeamCodebook codebook = beamsim::build_codebook(cfg);

  SUBCASE("matched LOS power reduces to M |alpha|^2") {
    // user straight down a grid direction at distance 5
    const double sine = codebook.beam_sine(40);
    const double distance = 5.0;
    const double x = sine * distance;
    const double y = std::sqrt(distance * distance - x * x);
    const ChannelState channel = beamsim::synth_channel(x, y, cfg);
    const PowerVector powers = beamsim::receive_power(channel, codebook);
    const double alpha = 1.0 / distance;
    CHECK(powers.powers[40] == doctest::Approx(16.0 * alpha * alpha).epsilon(1e-9));
  }
  SUBCASE("doubling distance quarters every beam power") {
    const PowerVector near =
        beamsim::receive_power(beamsim::synth_channel(12.0, 20.0, cfg), codebook);
    const PowerVector far =
        beamsim::receive_power(beamsim::synth_channel(24.0, 40.0, cfg), codebook);
    for (std::size_t q = 0; q < near.powers.size(); ++q) {
      CHECK(far.powers[q] == doctest::Approx(near.powers[q] / 4.0).epsilon(1e-9));
    }
  }
  SUBCASE("mirrored equal-gain paths give a symmetric power vector") {
    const PathComponent paths[] = {{Complex{0.7, 0.0}, 0.43, 0.0},
                                   {Complex{0.7, 0.0}, -0.43, 0.0}};
    const ChannelState channel = beamsim::synth_channel(paths, cfg);
    const PowerVector powers = beamsim::receive_power(channel, codebook);
    for (int q = 0; q < 64; ++q) {
      CHECK(std::abs(powers.powers[q] - powers.powers[63 - q]) < 1e-9);
    }
  }
  SUBCASE("a common delay ramp does not change single-path powers") {
    const PathComponent prompt{Complex{0.5, 0.0}, 0.31, 0.0};
    const PathComponent delayed{Complex{0.5, 0.0}, 0.31, 7.25};
    const PowerVector a = beamsim::receive_power(
        beamsim::synth_channel(std::span<const PathComponent>{&prompt, 1}, cfg), codebook);
    const PowerVector b = beamsim::receive_power(
        beamsim::synth_channel(std::span<const PathComponent>{&delayed, 1}, cfg), codebook);
    for (std::size_t q = 0; q < a.powers.size(); ++q) {
      CHECK(a.powers[q] == doctest::Approx(b.powers[q]).epsilon(1e-12));
    }
  }
  SUBCASE("distinct path delays make the channel frequency-selective") {
    const PathComponent paths[] = {{Complex{1.0, 0.0}, 0.2, 0.0},
                                   {Complex{1.0, 0.0}, 0.2, 16.0}};  // K/2 offset
    const ChannelState channel = beamsim::synth_channel(paths, cfg);
    // exp(-j*2*pi*k*16/32) alternates sign with k, so adjacent subcarriers
    // see constructive then destructive combining
    double even = 0.0, odd = 0.0;
    for (int m = 0; m < cfg.num_antennas; ++m) {
      even += std::norm(channel.per_subcarrier[0][m]);
      odd += std::norm(channel.per_subcarrier[1][m]);
    }
    CHECK(even > 1.0);
    CHECK(odd < 1e-20);
  }
  SUBCASE("extra paths augment the positional LOS channel") {
    // LOS plus a weak scatterer: powers differ from the pure LOS channel but
    // stay close, and removing the extra path recovers the LOS channel
    const PathComponent scatter{Complex{0.002, 0.001}, -0.5, 3.0};
    const PowerVector pure =
        beamsim::receive_power(beamsim::synth_channel(10.0, 40.0, cfg), codebook);
    const PowerVector mixed = beamsim::receive_power(
        beamsim::synth_channel(10.0, 40.0, std::span<const PathComponent>{&scatter, 1}, cfg),
        codebook);
    double largest_change = 0.0;
    for (std::size_t q = 0; q < pure.powers.size(); ++q) {
      largest_change =
          std::max(largest_change, std::abs(mixed.powers[q] - pure.powers[q]));
    }
    CHECK(largest_change > 0.0);
    CHECK(beamsim::optimal_beam(mixed) == beamsim::optimal_beam(pure));
    const PowerVector again = beamsim::receive_power(
        beamsim::synth_channel(10.0, 40.0, {}, cfg), codebook);
    CHECK(again.powers == pure.powers);
  }
  SUBCASE("user at the BS origin is rejected") {
    CHECK_THROWS_AS(beamsim::synth_channel(0.0, 0.0, cfg), ContractError);
  }
  SUBCASE("non-finite path gain is rejected") {
    const PathComponent bad{Complex{std::nan(""), 0.0}, 0.1, 0.0};
    CHECK_THROWS_AS(
        beamsim::synth_channel(std::span<const PathComponent>{&bad, 1}, cfg),
        ContractError);
  }
  SUBCASE("invalid channel states are rejected") {
    ChannelState channel = flat_channel(ComplexVector(16, Complex{1.0, 0.0}), 2);
    channel.tx_power = 0.0;
    CHECK_THROWS_AS(beamsim::receive_power(channel, codebook), ContractError);
    channel.tx_power = 1.0;
    channel.noise_power = -0.5;
    CHECK_THROWS_AS(beamsim::receive_power(channel, codebook), ContractError);
    channel.noise_power = 0.0;
    channel.per_subcarrier[1][3] = Complex{std::nan(""), 0.0};
    CHECK_THROWS_AS(beamsim::receive_power(channel, codebook), ContractError);
  }
}

// Wide-beam configuration for the near-optimal neighbourhood analysis. At
// quarter-wavelength spacing a 16-element / 64-beam profile keeps beams within
// +-3 indices of the peak above half power; at the default half-wavelength
// spacing the ideal Dirichlet profile is narrower (only +-1 stays above 50%).
TEST_CASE("near-optimal beams retain at least half the peak power") {
  ArrayConfig cfg;
  cfg.element_spacing = 0.25;
  const BeamCodebook codebook = beamsim::build_codebook(cfg);
  Rng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    const double sine = rng.uniform(-0.8, 0.8);
    const PathComponent path{Complex{1.0, 0.0}, sine, 0.0};
    const ChannelState channel =
        beamsim::synth_channel(std::span<const PathComponent>{&path, 1}, cfg);
    const PowerVector powers = beamsim::receive_power(channel, codebook);
    const int best = beamsim::optimal_beam(powers);
    const double peak = powers.powers[best];
    for (int offset = -3; offset <= 3; ++offset) {
      const int q = best + offset;
      if (q < 0 || q >= 64) continue;
      CHECK(powers.powers[q] >= 0.5 * peak);
    }
  }
}

TEST_CASE("single-LOS profile is unimodal inside the main lobe") {
  ArrayConfig cfg;  // default half-wavelength spacing
  const BeamCodebook codebook = beamsim::build_codebook(cfg);
  const ChannelState channel = beamsim::synth_channel(8.0, 30.0, cfg);
  const PowerVector powers = beamsim::receive_power(channel, codebook);
  const int best = beamsim::optimal_beam(powers);
  // power decreases monotonically for the first few beams on each side
  for (int step = 1; step <= 3; ++step) {
    if (best - step >= 0) CHECK(powers.powers[best - step] < powers.powers[best - step + 1]);
    if (best + step < 64) CHECK(powers.powers[best + step] < powers.powers[best + step - 1]);
  }
}
