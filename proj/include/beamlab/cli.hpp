#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "beamlab/beamsim.hpp"
#include "beamlab/dataset.hpp"
#include "beamlab/metrics.hpp"
#include "beamlab/model.hpp"

namespace beamlab::cli {

// Fully resolved experiment description. Serialized as JSON; the manifest
// written next to every generated dataset is exactly this structure, so any
// artifact can be regenerated from its manifest alone.
struct ExperimentConfig {
  std::uint64_t seed = 20260808;
  beamsim::ArrayConfig array;
  metrics::MetricConfig metric;
  model::ModelConfig model;
  std::array<double, 3> split_ratios{0.7, 0.2, 0.1};
  double seen_holdout_fraction = 0.2;
  int unseen_scenario_id = 31;
  std::vector<dataset::ScenarioConfig> scenarios;

  void validate() const;
};

// Built-in four-site experiment: three seen scenarios plus one unseen, roads
// at different standoff distances from their basestations.
ExperimentConfig default_config();

// JSON round trip. load merges file values over the defaults and rejects
// unknown keys.
ExperimentConfig load_config_file(const std::string& path);
void write_manifest(const std::string& path, const ExperimentConfig& config);

struct PredictionRow {
  long sample_id = 0;
  std::vector<int> beams;  // 0-based in memory, 1-based on disk
};

void write_predictions_csv(const std::string& path,
                           const std::vector<PredictionRow>& rows);
std::vector<PredictionRow> read_predictions_csv(const std::string& path);

struct GenerateOptions {
  ExperimentConfig config;
  std::string out_dir;
  bool force = false;  // allow overwriting existing outputs
};
void cmd_generate(const GenerateOptions& options);

struct TrainOptions {
  std::string data_dir;
  std::string out_dir;
  bool force = false;
  int snapshot_every = 0;  // dump a checkpoint every N epochs when > 0
  std::optional<std::uint64_t> seed_override;
  std::optional<int> epochs_override;
};
void cmd_train(const TrainOptions& options);

struct PredictOptions {
  std::string checkpoint_path;
  std::string test_csv;
  std::string out_csv;
  int top_k = 3;
  bool force = false;
};
void cmd_predict(const PredictOptions& options);

struct ScoreOptions {
  std::string predictions_csv;
  std::string hidden_csv;
  std::string out_csv;
  metrics::MetricConfig metric;
  std::optional<int> unseen_scenario_id;
  bool force = false;
};
struct ScoreOutcome {
  metrics::MetricReport overall;
  std::optional<metrics::MetricReport> seen;
  std::optional<metrics::MetricReport> unseen;
  std::optional<double> generalization_gap;  // seen DBA - unseen DBA
};
ScoreOutcome cmd_score(const ScoreOptions& options);

struct CorrelateOptions {
  std::string checkpoint_dir;
  std::string test_csv;
  std::string hidden_csv;
  std::string out_dir;
  metrics::MetricConfig metric;
  bool force = false;
};
metrics::CorrelationTable cmd_correlate(const CorrelateOptions& options);

}  // namespace beamlab::cli
