#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beamlab/beamsim.hpp"
#include "beamlab/geodesy.hpp"

namespace beamlab::dataset {

struct ScenarioConfig {
  int scenario_id = 0;
  geodesy::GeoPosition bs_position;
  geodesy::GeoPosition road_start;
  geodesy::GeoPosition road_end;
  int num_trajectories = 6;
  double speed_mps = 10.0;
  double sample_rate_hz = 10.0;  // GPS-rate sampling
  double gps_noise_std_m = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// One simulated time step of one trajectory.
struct StepRecord {
  int scenario_id = 0;
  int trajectory_id = 0;
  int step = 0;
  geodesy::GeoPosition true_position;
  geodesy::GeoPosition gps_position;  // noisy observation fed to models
  beamsim::PowerVector powers;        // computed on the true position
  int label = 0;                      // argmax of powers
};

// Observation window lengths: `window` basestation-side steps per sample with
// positions for the first `position_steps` of them.
struct SequenceSpec {
  int window = 5;
  int position_steps = 2;
};

struct ChallengeSample {
  long sample_id = 0;
  int scenario_id = 0;
  std::array<geodesy::GeoPosition, 2> positions;  // window steps 1 and 2
  std::array<std::string, 5> image_refs;
  std::array<std::string, 5> lidar_refs;
  std::array<std::string, 5> radar_refs;
  std::optional<beamsim::PowerVector> powers;  // training samples only
  std::optional<int> label;                    // 0-based beam index
};

struct DatasetSplit {
  std::vector<long> train;
  std::vector<long> validation;
  std::vector<long> test;
};

// Walks trajectories along the scenario road at speed/sample_rate spacing,
// labels each step from the true position (GPS noise only perturbs the
// observation), deterministic per seed. The whole scenario must project into
// the BS's UTM zone.
std::vector<StepRecord> generate_scenario(const ScenarioConfig& config,
                                          const beamsim::ArrayConfig& array);

// Sliding windows of length spec.window, stride 1, over one time-ordered
// trajectory. Positions come from the first spec.position_steps records of
// the window, powers and label from the last. Fewer records than the window
// give an empty result. sample_id is local to the call (0-based).
std::vector<ChallengeSample> assemble_sequences(std::span<const StepRecord> records,
                                                const SequenceSpec& spec = {});

// Seeded random permutation cut at the ratio boundaries.
DatasetSplit split_dataset(std::span<const ChallengeSample> samples,
                           const std::array<double, 3>& ratios, std::uint64_t seed);

struct HiddenLabelRow {
  long sample_id = 0;
  int scenario_id = 0;
  int label = 0;
  beamsim::PowerVector powers;
};

struct ChallengeBuild {
  std::vector<ChallengeSample> train;        // labels and powers present
  std::vector<ChallengeSample> test;         // labels and powers stripped
  std::vector<HiddenLabelRow> hidden_labels; // ground truth for the test set
};

// Challenge composition: the training set draws only from the seen scenarios;
// the test set is half held-out seen samples, half unseen-scenario samples,
// with the unseen scenario entirely absent from training. seen_holdout_fraction
// bounds the seen half of the test set.
ChallengeBuild build_challenge(std::span<const std::vector<ChallengeSample>> seen_scenarios,
                               std::span<const ChallengeSample> unseen_scenario,
                               std::uint64_t seed, double seen_holdout_fraction = 0.2);

// Challenge CSV schema. Sample rows:
//   sample_id,scenario_id,lat_1,lon_1,lat_2,lon_2,img_1..img_5,
//   lidar_1..lidar_5,radar_1..radar_5[,power_1..power_Q,beam_label]
// Test files omit the power and label columns. Beam labels are 1-based on
// disk, 0-based in memory. Floats carry 9 significant digits.
void write_samples_csv(const std::string& path,
                       std::span<const ChallengeSample> samples, bool with_labels);
std::vector<ChallengeSample> read_samples_csv(const std::string& path);

// Hidden-label sidecar: sample_id,scenario_id,beam_label,power_1..power_Q.
void write_hidden_csv(const std::string& path, std::span<const HiddenLabelRow> rows);
std::vector<HiddenLabelRow> read_hidden_csv(const std::string& path);

}  // namespace beamlab::dataset
