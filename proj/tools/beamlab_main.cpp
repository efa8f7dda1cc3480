// beamlab: synthetic mmWave beam-prediction toolkit.
// Subcommands: generate, train, predict, score, correlate.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "beamlab/cli.hpp"
#include "beamlab/errors.hpp"

namespace {

struct GenerateCliArgs {
  std::string config_path;
  std::string out_dir = "dataset";
  std::optional<std::uint64_t> seed;
  bool force = false;
};

struct TrainCliArgs {
  std::string data_dir;
  std::string out_dir = "run";
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  int snapshot_every = 0;
  bool force = false;
};

struct PredictCliArgs {
  std::string checkpoint;
  std::string test_csv;
  std::string out_csv = "predictions.csv";
  int top_k = 3;
  bool force = false;
};

struct ScoreCliArgs {
  std::string predictions_csv;
  std::string hidden_csv;
  std::string out_csv;
  int top_k = 3;
  int delta = 5;
  std::optional<int> unseen_id;
  bool force = false;
};

struct CorrelateCliArgs {
  std::string checkpoint_dir;
  std::string test_csv;
  std::string hidden_csv;
  std::string out_dir = "correlation";
  int top_k = 3;
  int delta = 5;
  bool force = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beamlab: simulate, train and score mmWave beam prediction"};
  app.require_subcommand(1);

  GenerateCliArgs generate_args;
  CLI::App* generate = app.add_subcommand(
      "generate", "Generate a synthetic challenge dataset (train/test CSVs)");
  generate->add_option("--config", generate_args.config_path,
                       "Experiment config JSON (defaults used when omitted)");
  generate->add_option("--out", generate_args.out_dir, "Output directory");
  generate->add_option("--seed", generate_args.seed, "Master seed override");
  generate->add_flag("--force", generate_args.force, "Overwrite existing outputs");

  TrainCliArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train the position-only GRU baseline");
  train->add_option("--data", train_args.data_dir, "Dataset directory from generate")
      ->required();
  train->add_option("--out", train_args.out_dir, "Output directory");
  train->add_option("--seed", train_args.seed, "Master seed override");
  train->add_option("--epochs", train_args.epochs, "Epoch count override");
  train->add_option("--snapshot-every", train_args.snapshot_every,
                    "Dump a checkpoint every N epochs (for correlate)");
  train->add_flag("--force", train_args.force, "Overwrite existing outputs");

  PredictCliArgs predict_args;
  CLI::App* predict = app.add_subcommand("predict", "Rank beams for a test CSV");
  predict->add_option("--checkpoint", predict_args.checkpoint, "Checkpoint file")
      ->required();
  predict->add_option("--test", predict_args.test_csv, "Test CSV")->required();
  predict->add_option("--out", predict_args.out_csv, "Predictions CSV");
  predict->add_option("--topk", predict_args.top_k, "Beams per sample");
  predict->add_flag("--force", predict_args.force, "Overwrite existing outputs");

  ScoreCliArgs score_args;
  CLI::App* score = app.add_subcommand("score", "Score predictions against hidden labels");
  score->add_option("--predictions", score_args.predictions_csv, "Predictions CSV")
      ->required();
  score->add_option("--labels", score_args.hidden_csv, "Hidden-label CSV")->required();
  score->add_option("--out", score_args.out_csv, "Report CSV (optional)");
  score->add_option("--topk", score_args.top_k, "Top-K for accuracy and DBA");
  score->add_option("--delta", score_args.delta, "DBA distance saturation");
  score->add_option("--unseen-id", score_args.unseen_id,
                    "Scenario id of the unseen half (enables the seen/unseen report)");
  score->add_flag("--force", score_args.force, "Overwrite existing outputs");

  CorrelateCliArgs correlate_args;
  CLI::App* correlate = app.add_subcommand(
      "correlate", "Correlate DBA and top-K accuracy with the power ratio");
  correlate->add_option("--checkpoints", correlate_args.checkpoint_dir,
                        "Directory of checkpoint files")
      ->required();
  correlate->add_option("--test", correlate_args.test_csv, "Test CSV")->required();
  correlate->add_option("--labels", correlate_args.hidden_csv, "Hidden-label CSV")
      ->required();
  correlate->add_option("--out", correlate_args.out_dir, "Output directory");
  correlate->add_option("--topk", correlate_args.top_k, "Top-K for accuracy and DBA");
  correlate->add_option("--delta", correlate_args.delta, "DBA distance saturation");
  correlate->add_flag("--force", correlate_args.force, "Overwrite existing outputs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      beamlab::cli::GenerateOptions options;
      options.config = generate_args.config_path.empty()
                           ? beamlab::cli::default_config()
                           : beamlab::cli::load_config_file(generate_args.config_path);
      if (generate_args.seed) options.config.seed = *generate_args.seed;
      options.out_dir = generate_args.out_dir;
      options.force = generate_args.force;
      beamlab::cli::cmd_generate(options);
    } else if (train->parsed()) {
      beamlab::cli::TrainOptions options;
      options.data_dir = train_args.data_dir;
      options.out_dir = train_args.out_dir;
      options.seed_override = train_args.seed;
      options.epochs_override = train_args.epochs;
      options.snapshot_every = train_args.snapshot_every;
      options.force = train_args.force;
      beamlab::cli::cmd_train(options);
    } else if (predict->parsed()) {
      beamlab::cli::PredictOptions options;
      options.checkpoint_path = predict_args.checkpoint;
      options.test_csv = predict_args.test_csv;
      options.out_csv = predict_args.out_csv;
      options.top_k = predict_args.top_k;
      options.force = predict_args.force;
      beamlab::cli::cmd_predict(options);
    } else if (score->parsed()) {
      beamlab::cli::ScoreOptions options;
      options.predictions_csv = score_args.predictions_csv;
      options.hidden_csv = score_args.hidden_csv;
      options.out_csv = score_args.out_csv;
      options.metric.top_k = score_args.top_k;
      options.metric.delta = score_args.delta;
      options.unseen_scenario_id = score_args.unseen_id;
      options.force = score_args.force;
      beamlab::cli::cmd_score(options);
    } else if (correlate->parsed()) {
      beamlab::cli::CorrelateOptions options;
      options.checkpoint_dir = correlate_args.checkpoint_dir;
      options.test_csv = correlate_args.test_csv;
      options.hidden_csv = correlate_args.hidden_csv;
      options.out_dir = correlate_args.out_dir;
      options.metric.top_k = correlate_args.top_k;
      options.metric.delta = correlate_args.delta;
      options.force = correlate_args.force;
      beamlab::cli::cmd_correlate(options);
    }
  } catch (const beamlab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
