#include "beamlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "beamlab/errors.hpp"
#include "beamlab/geodesy.hpp"
#include "beamlab/rng.hpp"

namespace beamlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

void ExperimentConfig::validate() const {
  array.validate();
  metric.validate();
  model.validate();
  double total = 0.0;
  for (double r : split_ratios) {
    if (r < 0.0) throw ConfigError("split ratios must be non-negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  if (!(seen_holdout_fraction > 0.0 && seen_holdout_fraction < 1.0)) {
    throw ConfigError("seen_holdout_fraction must lie in (0, 1)");
  }
  if (scenarios.empty()) throw ConfigError("no scenarios configured");
  std::set<int> ids;
  bool have_unseen = false;
  for (const dataset::ScenarioConfig& scenario : scenarios) {
    scenario.validate();
    if (!ids.insert(scenario.scenario_id).second) {
      throw ConfigError("duplicate scenario id " + std::to_string(scenario.scenario_id));
    }
    if (scenario.scenario_id == unseen_scenario_id) have_unseen = true;
  }
  if (!have_unseen) {
    throw ConfigError("unseen_scenario_id " + std::to_string(unseen_scenario_id) +
                      " is not among the configured scenarios");
  }
  if (ids.size() < 2) throw ConfigError("need at least one seen and one unseen scenario");
  if (model.num_classes != array.num_beams) {
    throw ConfigError("model num_classes must equal the codebook size");
  }
}

namespace {

// Geo point at a local east/north offset (meters) from an anchor.
geodesy::GeoPosition offset_geo(const geodesy::GeoPosition& anchor, double east_m,
                                double north_m) {
  geodesy::UtmCoordinate utm = geodesy::latlon_to_utm(anchor);
  utm.easting_m += east_m;
  utm.northing_m += north_m;
  return geodesy::utm_to_latlon(utm);
}

dataset::ScenarioConfig make_scenario(int id, const geodesy::GeoPosition& site,
                                      double road_standoff_m, double half_span_m,
                                      double speed_mps) {
  dataset::ScenarioConfig scenario;
  scenario.scenario_id = id;
  scenario.bs_position = site;
  scenario.road_start = offset_geo(site, -half_span_m, road_standoff_m);
  scenario.road_end = offset_geo(site, half_span_m, road_standoff_m);
  scenario.speed_mps = speed_mps;
  return scenario;
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig config;
  const geodesy::GeoPosition base{33.42, -111.93};
  // Sites a few hundred meters apart; roads run east-west past each BS at
  // different standoff distances, the unseen site clearly off the seen range.
  config.scenarios = {
      make_scenario(31, offset_geo(base, 0.0, 0.0), 40.0, 90.0, 10.0),
      make_scenario(32, offset_geo(base, 400.0, 0.0), 55.0, 100.0, 9.0),
      make_scenario(33, offset_geo(base, 800.0, 0.0), 62.0, 110.0, 11.0),
      make_scenario(34, offset_geo(base, 1200.0, 0.0), 70.0, 120.0, 10.0),
  };
  for (dataset::ScenarioConfig& scenario : config.scenarios) {
    scenario.num_trajectories = 4;
  }
  config.unseen_scenario_id = 31;
  config.model.num_classes = config.array.num_beams;
  return config;
}

namespace {

void require_keys(const json& object, const std::set<std::string>& allowed,
                  const std::string& context) {
  for (const auto& [key, value] : object.items()) {
    if (allowed.count(key) == 0) {
      throw ConfigError("unknown config key '" + key + "' in " + context);
    }
  }
}

geodesy::GeoPosition geo_from_json(const json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 2) {
    throw ConfigError(context + " must be a [lat, lon] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig config = default_config();
  require_keys(j, {"seed", "array", "metrics", "model", "dataset",
                   "unseen_scenario_id", "scenarios"},
               "top level");
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("array")) {
    const json& a = j.at("array");
    require_keys(a, {"num_antennas", "num_beams", "num_subcarriers", "element_spacing"},
                 "array");
    if (a.contains("num_antennas")) config.array.num_antennas = a.at("num_antennas");
    if (a.contains("num_beams")) config.array.num_beams = a.at("num_beams");
    if (a.contains("num_subcarriers"))
      config.array.num_subcarriers = a.at("num_subcarriers");
    if (a.contains("element_spacing"))
      config.array.element_spacing = a.at("element_spacing");
  }
  if (j.contains("metrics")) {
    const json& m = j.at("metrics");
    require_keys(m, {"top_k", "delta"}, "metrics");
    if (m.contains("top_k")) config.metric.top_k = m.at("top_k");
    if (m.contains("delta")) config.metric.delta = m.at("delta");
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    require_keys(m,
                 {"hidden_dim", "num_gru_layers", "learning_rate", "batch_size",
                  "epochs", "adam_beta1", "adam_beta2", "adam_eps"},
                 "model");
    if (m.contains("hidden_dim")) config.model.hidden_dim = m.at("hidden_dim");
    if (m.contains("num_gru_layers")) config.model.num_gru_layers = m.at("num_gru_layers");
    if (m.contains("learning_rate")) config.model.learning_rate = m.at("learning_rate");
    if (m.contains("batch_size")) config.model.batch_size = m.at("batch_size");
    if (m.contains("epochs")) config.model.epochs = m.at("epochs");
    if (m.contains("adam_beta1")) config.model.adam_beta1 = m.at("adam_beta1");
    if (m.contains("adam_beta2")) config.model.adam_beta2 = m.at("adam_beta2");
    if (m.contains("adam_eps")) config.model.adam_eps = m.at("adam_eps");
  }
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    require_keys(d, {"split_ratios", "seen_holdout_fraction"}, "dataset");
    if (d.contains("split_ratios")) {
      const json& r = d.at("split_ratios");
      if (!r.is_array() || r.size() != 3) {
        throw ConfigError("dataset.split_ratios must be a 3-element array");
      }
      for (int i = 0; i < 3; ++i) config.split_ratios[i] = r[i].get<double>();
    }
    if (d.contains("seen_holdout_fraction")) {
      config.seen_holdout_fraction = d.at("seen_holdout_fraction");
    }
  }
  if (j.contains("unseen_scenario_id")) {
    config.unseen_scenario_id = j.at("unseen_scenario_id");
  }
  if (j.contains("scenarios")) {
    config.scenarios.clear();
    for (const json& s : j.at("scenarios")) {
      require_keys(s,
                   {"scenario_id", "bs", "road_start", "road_end", "num_trajectories",
                    "speed_mps", "sample_rate_hz", "gps_noise_std_m"},
                   "scenario");
      dataset::ScenarioConfig scenario;
      scenario.scenario_id = s.at("scenario_id");
      scenario.bs_position = geo_from_json(s.at("bs"), "scenario bs");
      scenario.road_start = geo_from_json(s.at("road_start"), "scenario road_start");
      scenario.road_end = geo_from_json(s.at("road_end"), "scenario road_end");
      if (s.contains("num_trajectories")) scenario.num_trajectories = s.at("num_trajectories");
      if (s.contains("speed_mps")) scenario.speed_mps = s.at("speed_mps");
      if (s.contains("sample_rate_hz")) scenario.sample_rate_hz = s.at("sample_rate_hz");
      if (s.contains("gps_noise_std_m")) scenario.gps_noise_std_m = s.at("gps_noise_std_m");
      config.scenarios.push_back(scenario);
    }
  }
  // the classifier width is always the codebook size, not a free knob
  config.model.num_classes = config.array.num_beams;
  return config;
}

ordered_json config_to_json(const ExperimentConfig& config) {
  ordered_json j;
  j["seed"] = config.seed;
  j["array"] = {{"num_antennas", config.array.num_antennas},
                {"num_beams", config.array.num_beams},
                {"num_subcarriers", config.array.num_subcarriers},
                {"element_spacing", config.array.element_spacing}};
  j["metrics"] = {{"top_k", config.metric.top_k}, {"delta", config.metric.delta}};
  j["model"] = {{"hidden_dim", config.model.hidden_dim},
                {"num_gru_layers", config.model.num_gru_layers},
                {"learning_rate", config.model.learning_rate},
                {"batch_size", config.model.batch_size},
                {"epochs", config.model.epochs},
                {"adam_beta1", config.model.adam_beta1},
                {"adam_beta2", config.model.adam_beta2},
                {"adam_eps", config.model.adam_eps}};
  j["dataset"] = {{"split_ratios", config.split_ratios},
                  {"seen_holdout_fraction", config.seen_holdout_fraction}};
  j["unseen_scenario_id"] = config.unseen_scenario_id;
  ordered_json scenarios = ordered_json::array();
  for (const dataset::ScenarioConfig& s : config.scenarios) {
    ordered_json entry;
    entry["scenario_id"] = s.scenario_id;
    entry["bs"] = {s.bs_position.latitude_deg, s.bs_position.longitude_deg};
    entry["road_start"] = {s.road_start.latitude_deg, s.road_start.longitude_deg};
    entry["road_end"] = {s.road_end.latitude_deg, s.road_end.longitude_deg};
    entry["num_trajectories"] = s.num_trajectories;
    entry["speed_mps"] = s.speed_mps;
    entry["sample_rate_hz"] = s.sample_rate_hz;
    entry["gps_noise_std_m"] = s.gps_noise_std_m;
    scenarios.push_back(entry);
  }
  j["scenarios"] = scenarios;
  return j;
}

void ensure_fresh(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw IoError("refusing to overwrite existing '" + path.string() +
                  "' (use --force)");
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "'");
}

// Commands never mutate their inputs, --force included.
void ensure_not_input(const std::string& out, std::initializer_list<std::string> inputs) {
  if (out.empty()) return;
  const fs::path target = fs::absolute(fs::path(out)).lexically_normal();
  for (const std::string& in : inputs) {
    if (!in.empty() && fs::absolute(fs::path(in)).lexically_normal() == target) {
      throw ContractError("output path '" + out + "' would overwrite an input file");
    }
  }
}

// Seeds the per-scenario generators from the master seed by scenario id.
std::uint64_t scenario_seed(std::uint64_t master, int scenario_id) {
  return derive_seed(master, 0x5C000000ULL + static_cast<std::uint64_t>(scenario_id));
}

}  // namespace

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json j;
  ExperimentConfig config;
  try {
    j = json::parse(in);
    config = config_from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  config.validate();
  return config;
}

void write_manifest(const std::string& path, const ExperimentConfig& config) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << config_to_json(config).dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_predictions_csv(const std::string& path,
                           const std::vector<PredictionRow>& rows) {
  if (rows.empty()) throw ContractError("no prediction rows to write");
  const std::size_t k = rows[0].beams.size();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "sample_id";
  for (std::size_t i = 1; i <= k; ++i) out << ",beam_" << i;
  out << '\n';
  for (const PredictionRow& row : rows) {
    if (row.beams.size() != k) {
      throw ContractError("prediction rows have inconsistent beam counts");
    }
    out << row.sample_id;
    for (int beam : row.beams) out << ',' << (beam + 1);
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<PredictionRow> read_predictions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path + "' is empty");
  std::istringstream header(line);
  std::string column;
  std::vector<std::string> columns;
  while (std::getline(header, column, ',')) columns.push_back(column);
  if (columns.empty() || columns[0] != "sample_id") {
    throw IoError("'" + path + "': expected sample_id as the first column");
  }
  for (std::size_t i = 1; i < columns.size(); ++i) {
    if (columns[i] != "beam_" + std::to_string(i)) {
      throw IoError("'" + path + "': expected column beam_" + std::to_string(i));
    }
  }
  const std::size_t k = columns.size() - 1;
  if (k == 0) throw IoError("'" + path + "': no beam columns");

  auto parse_int = [](const std::string& text, std::size_t line_no,
                      const char* what) -> long {
    char* end = nullptr;
    const long value = std::strtol(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0') {
      throw IoError("row " + std::to_string(line_no) + ": cannot parse '" + text +
                    "' as " + what);
    }
    return value;
  };

  std::vector<PredictionRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string field;
    PredictionRow row;
    if (!std::getline(fields, field, ',')) {
      throw IoError("row " + std::to_string(line_no) + ": missing sample_id");
    }
    row.sample_id = parse_int(field, line_no, "a sample_id");
    while (std::getline(fields, field, ',')) {
      const long beam = parse_int(field, line_no, "a beam index");
      if (beam < 1) {
        throw IoError("row " + std::to_string(line_no) + ": beam index " +
                      std::to_string(beam) + " is not 1-based");
      }
      row.beams.push_back(static_cast<int>(beam - 1));
    }
    if (row.beams.size() != k) {
      throw IoError("row " + std::to_string(line_no) + ": expected " +
                    std::to_string(k) + " beams");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void cmd_generate(const GenerateOptions& options) {
  ExperimentConfig config = options.config;
  config.validate();
  ensure_dir(options.out_dir);
  const fs::path out_dir(options.out_dir);
  const fs::path train_path = out_dir / "train.csv";
  const fs::path test_path = out_dir / "test.csv";
  const fs::path hidden_path = out_dir / "test_labels.csv";
  const fs::path manifest_path = out_dir / "manifest.json";
  for (const fs::path& p : {train_path, test_path, hidden_path, manifest_path}) {
    ensure_fresh(p, options.force);
  }

  std::vector<std::vector<dataset::ChallengeSample>> seen;
  std::vector<dataset::ChallengeSample> unseen;
  for (const dataset::ScenarioConfig& base : config.scenarios) {
    dataset::ScenarioConfig scenario = base;
    scenario.seed = scenario_seed(config.seed, scenario.scenario_id);
    const std::vector<dataset::StepRecord> records =
        dataset::generate_scenario(scenario, config.array);

    // Per-trajectory windows, then scenario-unique sample ids.
    std::vector<dataset::ChallengeSample> samples;
    std::size_t begin = 0;
    while (begin < records.size()) {
      std::size_t end = begin + 1;
      while (end < records.size() &&
             records[end].trajectory_id == records[begin].trajectory_id) {
        ++end;
      }
      std::vector<dataset::ChallengeSample> windowed = dataset::assemble_sequences(
          std::span<const dataset::StepRecord>(records.data() + begin, end - begin));
      for (dataset::ChallengeSample& sample : windowed) {
        sample.sample_id = static_cast<long>(samples.size());
        samples.push_back(std::move(sample));
      }
      begin = end;
    }
    if (scenario.scenario_id == config.unseen_scenario_id) {
      unseen = std::move(samples);
    } else {
      seen.push_back(std::move(samples));
    }
  }

  const dataset::ChallengeBuild build = dataset::build_challenge(
      seen, unseen, derive_seed(config.seed, 0xC4A11E46E), config.seen_holdout_fraction);

  dataset::write_samples_csv(train_path.string(), build.train, /*with_labels=*/true);
  dataset::write_samples_csv(test_path.string(), build.test, /*with_labels=*/false);
  dataset::write_hidden_csv(hidden_path.string(), build.hidden_labels);
  write_manifest(manifest_path.string(), config);

  std::size_t unseen_test = 0;
  for (const dataset::HiddenLabelRow& row : build.hidden_labels) {
    if (row.scenario_id == config.unseen_scenario_id) ++unseen_test;
  }
  std::cout << "generated " << build.train.size() << " training samples, "
            << build.test.size() << " test samples (" << unseen_test
            << " from unseen scenario " << config.unseen_scenario_id << ") in "
            << out_dir.string() << '\n';
}

namespace {

struct FeatureContext {
  geodesy::StatsFile stats;
};

// Projects one sample's positions against its scenario BS and normalizes.
std::vector<double> sample_features(const dataset::ChallengeSample& sample,
                                    const FeatureContext& context) {
  const geodesy::ScenarioReference* reference = nullptr;
  for (const geodesy::ScenarioReference& ref : context.stats.references) {
    if (ref.scenario_id == sample.scenario_id) {
      reference = &ref;
      break;
    }
  }
  if (reference == nullptr) {
    throw ContractError("normalization stats carry no BS reference for scenario " +
                        std::to_string(sample.scenario_id));
  }
  geodesy::UtmCoordinate bs;
  bs.easting_m = reference->bs_easting_m;
  bs.northing_m = reference->bs_northing_m;
  bs.zone = context.stats.zone;
  bs.is_north = context.stats.is_north;

  std::vector<double> features;
  features.reserve(4);
  for (const geodesy::GeoPosition& pos : sample.positions) {
    if (geodesy::utm_zone_for(pos.longitude_deg) != context.stats.zone) {
      throw ContractError(
          "sample position falls outside the normalization stats UTM zone " +
          std::to_string(context.stats.zone) + "; refusing to run");
    }
    const geodesy::UtmCoordinate utm = geodesy::latlon_to_utm(pos, context.stats.zone);
    if (utm.is_north != context.stats.is_north) {
      throw ContractError("sample hemisphere does not match normalization stats");
    }
    const geodesy::PlanarXY rel = geodesy::relative_position(utm, bs);
    const geodesy::PlanarXY norm = geodesy::apply_minmax(rel, context.stats.stats);
    features.push_back(norm.x);
    features.push_back(norm.y);
  }
  return features;
}

std::map<long, const dataset::ChallengeSample*> index_by_id(
    const std::vector<dataset::ChallengeSample>& samples) {
  std::map<long, const dataset::ChallengeSample*> index;
  for (const dataset::ChallengeSample& sample : samples) {
    if (!index.emplace(sample.sample_id, &sample).second) {
      throw ContractError("duplicate sample_id " + std::to_string(sample.sample_id));
    }
  }
  return index;
}

std::string format_float9(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

void print_report_table(std::ostream& out, const std::string& title,
                        const metrics::MetricReport& report) {
  out << title << " (" << report.num_samples << " samples)\n";
  out << "  accuracy:";
  for (std::size_t k = 0; k < report.top_k_accuracy.size(); ++k) {
    out << "  top-" << (k + 1) << " " << format_float9(report.top_k_accuracy[k]);
  }
  out << "\n  dba:     ";
  for (std::size_t k = 0; k < report.dba_per_k.size(); ++k) {
    out << "  K=" << (k + 1) << " " << format_float9(report.dba_per_k[k]);
  }
  out << "\n  dba_score " << format_float9(report.dba_score) << "  power_ratio "
      << format_float9(report.power_ratio);
  if (report.power_ratio_excluded > 0) {
    out << "  (excluded " << report.power_ratio_excluded << " floor-power samples)";
  }
  out << '\n';
}

}  // namespace

void cmd_train(const TrainOptions& options) {
  const fs::path data_dir(options.data_dir);
  const ExperimentConfig manifest =
      load_config_file((data_dir / "manifest.json").string());
  ExperimentConfig config = manifest;
  if (options.seed_override) config.seed = *options.seed_override;
  if (options.epochs_override) config.model.epochs = *options.epochs_override;
  config.validate();

  ensure_dir(options.out_dir);
  const fs::path out_dir(options.out_dir);
  const fs::path checkpoint_path = out_dir / "checkpoint.txt";
  const fs::path log_path = out_dir / "train_log.csv";
  const fs::path stats_path = out_dir / "norm_stats.txt";
  for (const fs::path& p : {checkpoint_path, log_path, stats_path}) {
    ensure_fresh(p, options.force);
  }

  const std::vector<dataset::ChallengeSample> samples =
      dataset::read_samples_csv((data_dir / "train.csv").string());
  if (samples.empty()) throw IoError("train.csv contains no samples");
  for (const dataset::ChallengeSample& sample : samples) {
    if (!sample.label || !sample.powers) {
      throw ContractError("training sample " + std::to_string(sample.sample_id) +
                          " lacks label or powers");
    }
  }

  // Projection context: one shared UTM zone, BS references for every
  // scenario in the manifest (deployment constants, not fitted statistics).
  geodesy::StatsFile stats_file;
  for (std::size_t i = 0; i < config.scenarios.size(); ++i) {
    const dataset::ScenarioConfig& scenario = config.scenarios[i];
    const geodesy::UtmCoordinate bs = geodesy::latlon_to_utm(scenario.bs_position);
    if (i == 0) {
      stats_file.zone = bs.zone;
      stats_file.is_north = bs.is_north;
    } else if (bs.zone != stats_file.zone || bs.is_north != stats_file.is_north) {
      throw ConfigError("scenario basestations span multiple UTM zones");
    }
    stats_file.references.push_back(
        {scenario.scenario_id, bs.easting_m, bs.northing_m});
  }

  const dataset::DatasetSplit split = dataset::split_dataset(
      samples, config.split_ratios, derive_seed(config.seed, 0x59117));
  if (split.train.empty() || split.validation.empty()) {
    throw ConfigError("train/validation split is empty; need more samples");
  }
  const std::map<long, const dataset::ChallengeSample*> by_id = index_by_id(samples);

  // Min-max statistics come from the training split only.
  std::vector<geodesy::PlanarXY> train_positions;
  for (long id : split.train) {
    const dataset::ChallengeSample& sample = *by_id.at(id);
    for (const geodesy::GeoPosition& pos : sample.positions) {
      const geodesy::UtmCoordinate utm = geodesy::latlon_to_utm(pos, stats_file.zone);
      geodesy::UtmCoordinate bs;
      for (const geodesy::ScenarioReference& ref : stats_file.references) {
        if (ref.scenario_id == sample.scenario_id) {
          bs.easting_m = ref.bs_easting_m;
          bs.northing_m = ref.bs_northing_m;
          bs.zone = stats_file.zone;
          bs.is_north = stats_file.is_north;
        }
      }
      train_positions.push_back(geodesy::relative_position(utm, bs));
    }
  }
  stats_file.stats = geodesy::fit_minmax(train_positions);
  geodesy::save_stats(stats_path.string(), stats_file);

  FeatureContext context{stats_file};
  auto build_set = [&](const std::vector<long>& ids) {
    model::SampleSet set;
    for (long id : ids) {
      const dataset::ChallengeSample& sample = *by_id.at(id);
      set.inputs.push_back(sample_features(sample, context));
      set.labels.push_back(*sample.label);
    }
    return set;
  };
  const model::SampleSet train_set = build_set(split.train);
  const model::SampleSet val_set = build_set(split.validation);

  model::ModelConfig model_cfg = config.model;
  model_cfg.num_classes = config.array.num_beams;
  model_cfg.seed = derive_seed(config.seed, 0x6D0DE1);

  fs::path snapshot_dir = out_dir / "snapshots";
  if (options.snapshot_every > 0) ensure_dir(snapshot_dir);
  model::EpochCallback on_epoch;
  if (options.snapshot_every > 0) {
    on_epoch = [&](int epoch, const model::ModelParams& params,
                   const model::EpochStats&) {
      if (epoch % options.snapshot_every != 0 && epoch != model_cfg.epochs) return;
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04d.txt", epoch);
      model::Checkpoint snapshot{params, stats_file, epoch};
      model::save_checkpoint((snapshot_dir / name).string(), snapshot);
    };
  }

  std::cout << "training on " << train_set.inputs.size() << " samples, validating on "
            << val_set.inputs.size() << " (" << model_cfg.epochs << " epochs)\n";
  const model::TrainResult result =
      model::train(train_set, val_set, model_cfg, config.metric, on_epoch);

  model::Checkpoint checkpoint{result.params, stats_file, result.log.selected_epoch};
  model::save_checkpoint(checkpoint_path.string(), checkpoint);

  std::ofstream log(log_path);
  if (!log) throw IoError("cannot open '" + log_path.string() + "' for writing");
  log << "epoch,train_loss,val_loss,val_top1,val_dba\n";
  for (std::size_t e = 0; e < result.log.epochs.size(); ++e) {
    const model::EpochStats& stats = result.log.epochs[e];
    log << (e + 1) << ',' << format_float9(stats.train_loss) << ','
        << format_float9(stats.val_loss) << ',' << format_float9(stats.val_top1)
        << ',' << format_float9(stats.val_dba) << '\n';
  }
  if (!log) throw IoError("write failed for '" + log_path.string() + "'");

  std::cout << "selected epoch " << result.log.selected_epoch << " (val DBA "
            << format_float9(result.log.epochs[result.log.selected_epoch - 1].val_dba)
            << "), checkpoint at " << checkpoint_path.string() << '\n';

  // Local evaluation on the held-back 10% of the training data.
  if (!split.test.empty()) {
    std::vector<metrics::PredictionSet> predictions;
    std::vector<int> labels;
    std::vector<beamsim::PowerVector> powers;
    std::vector<int> scenario_ids;
    const int eval_k = std::min(config.metric.top_k, model_cfg.num_classes);
    for (long id : split.test) {
      const dataset::ChallengeSample& sample = *by_id.at(id);
      predictions.push_back(model::predict_topk(
          result.params, sample_features(sample, context), eval_k));
      labels.push_back(*sample.label);
      powers.push_back(*sample.powers);
      scenario_ids.push_back(sample.scenario_id);
    }
    metrics::MetricConfig eval_cfg = config.metric;
    eval_cfg.top_k = eval_k;
    const metrics::MetricReport report =
        metrics::evaluate(predictions, labels, powers, scenario_ids, eval_cfg);
    print_report_table(std::cout, "local 10% test split", report);
  }
}

void cmd_predict(const PredictOptions& options) {
  if (options.top_k < 1) throw ConfigError("topk must be >= 1");
  ensure_not_input(options.out_csv, {options.checkpoint_path, options.test_csv});
  ensure_fresh(options.out_csv, options.force);
  const model::Checkpoint checkpoint = model::load_checkpoint(options.checkpoint_path);
  if (options.top_k > checkpoint.params.config.num_classes) {
    throw ContractError("topk exceeds the checkpoint's number of beams");
  }
  const std::vector<dataset::ChallengeSample> samples =
      dataset::read_samples_csv(options.test_csv);
  if (samples.empty()) throw IoError("test file contains no samples");

  FeatureContext context{checkpoint.stats};
  std::vector<PredictionRow> rows;
  rows.reserve(samples.size());
  for (const dataset::ChallengeSample& sample : samples) {
    const metrics::PredictionSet prediction = model::predict_topk(
        checkpoint.params, sample_features(sample, context), options.top_k);
    rows.push_back({sample.sample_id, prediction.ranked()});
  }
  write_predictions_csv(options.out_csv, rows);
  std::cout << "wrote " << rows.size() << " predictions to " << options.out_csv << '\n';
}

ScoreOutcome cmd_score(const ScoreOptions& options) {
  options.metric.validate();
  ensure_not_input(options.out_csv, {options.predictions_csv, options.hidden_csv});
  if (!options.out_csv.empty()) ensure_fresh(options.out_csv, options.force);
  const std::vector<PredictionRow> rows = read_predictions_csv(options.predictions_csv);
  const std::vector<dataset::HiddenLabelRow> hidden =
      dataset::read_hidden_csv(options.hidden_csv);

  std::map<long, const dataset::HiddenLabelRow*> truth;
  for (const dataset::HiddenLabelRow& row : hidden) truth.emplace(row.sample_id, &row);

  std::vector<long> missing;
  std::set<long> predicted_ids;
  for (const PredictionRow& row : rows) {
    predicted_ids.insert(row.sample_id);
    if (truth.count(row.sample_id) == 0) missing.push_back(row.sample_id);
  }
  for (const dataset::HiddenLabelRow& row : hidden) {
    if (predicted_ids.count(row.sample_id) == 0) missing.push_back(row.sample_id);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 16; ++i) {
      list += (i ? ", " : "") + std::to_string(missing[i]);
    }
    if (missing.size() > 16) list += ", ...";
    throw ContractError("sample_ids do not align between predictions and labels: " + list);
  }

  const int num_beams = static_cast<int>(hidden[0].powers.powers.size());
  std::vector<metrics::PredictionSet> predictions;
  std::vector<int> labels;
  std::vector<beamsim::PowerVector> powers;
  std::vector<int> scenario_ids;
  for (const PredictionRow& row : rows) {
    const dataset::HiddenLabelRow& row_truth = *truth.at(row.sample_id);
    predictions.emplace_back(row.beams, num_beams);
    labels.push_back(row_truth.label);
    powers.push_back(row_truth.powers);
    scenario_ids.push_back(row_truth.scenario_id);
  }

  ScoreOutcome outcome;
  outcome.overall =
      metrics::evaluate(predictions, labels, powers, scenario_ids, options.metric);
  print_report_table(std::cout, "overall", outcome.overall);

  std::vector<std::pair<std::string, const metrics::MetricReport*>> csv_rows;
  csv_rows.emplace_back("overall", &outcome.overall);

  if (options.unseen_scenario_id) {
    const int unseen_id = *options.unseen_scenario_id;
    auto subset = [&](bool want_unseen) {
      std::vector<metrics::PredictionSet> p;
      std::vector<int> l, s;
      std::vector<beamsim::PowerVector> w;
      for (std::size_t n = 0; n < labels.size(); ++n) {
        if ((scenario_ids[n] == unseen_id) != want_unseen) continue;
        p.push_back(predictions[n]);
        l.push_back(labels[n]);
        w.push_back(powers[n]);
        s.push_back(scenario_ids[n]);
      }
      if (p.empty()) {
        throw ContractError(want_unseen ? "no unseen-scenario samples in the test set"
                                        : "no seen-scenario samples in the test set");
      }
      return metrics::evaluate(p, l, w, s, options.metric);
    };
    outcome.seen = subset(false);
    outcome.unseen = subset(true);
    outcome.generalization_gap = outcome.seen->dba_score - outcome.unseen->dba_score;
    print_report_table(std::cout, "seen scenarios", *outcome.seen);
    print_report_table(std::cout, "unseen scenario " + std::to_string(unseen_id),
                       *outcome.unseen);
    std::cout << "generalization_gap " << format_float9(*outcome.generalization_gap)
              << '\n';
    csv_rows.emplace_back("seen", &*outcome.seen);
    csv_rows.emplace_back("unseen", &*outcome.unseen);
  }
  for (const auto& [scenario, sub] : outcome.overall.per_scenario) {
    csv_rows.emplace_back("scenario_" + std::to_string(scenario), &sub);
  }

  if (!options.out_csv.empty()) {
    std::ofstream out(options.out_csv);
    if (!out) throw IoError("cannot open '" + options.out_csv + "' for writing");
    out << metrics::report_csv_header(options.metric.top_k) << '\n';
    for (const auto& [name, report] : csv_rows) {
      out << metrics::report_csv_row(name, *report) << '\n';
    }
    if (outcome.generalization_gap) {
      out << "generalization_gap," << format_float9(*outcome.generalization_gap);
      for (int i = 0; i < 2 * options.metric.top_k + 3; ++i) out << ',';
      out << '\n';
    }
    if (!out) throw IoError("write failed for '" + options.out_csv + "'");
  }
  return outcome;
}

metrics::CorrelationTable cmd_correlate(const CorrelateOptions& options) {
  options.metric.validate();
  std::vector<fs::path> checkpoint_paths;
  if (!fs::is_directory(options.checkpoint_dir)) {
    throw IoError("'" + options.checkpoint_dir + "' is not a directory");
  }
  for (const fs::directory_entry& entry :
       fs::directory_iterator(options.checkpoint_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      checkpoint_paths.push_back(entry.path());
    }
  }
  std::sort(checkpoint_paths.begin(), checkpoint_paths.end());
  if (checkpoint_paths.size() < 3) {
    throw ContractError("correlate needs at least 3 checkpoints, found " +
                        std::to_string(checkpoint_paths.size()));
  }

  ensure_dir(options.out_dir);
  const fs::path points_path = fs::path(options.out_dir) / "corr_points.csv";
  const fs::path summary_path = fs::path(options.out_dir) / "corr_summary.txt";
  ensure_fresh(points_path, options.force);
  ensure_fresh(summary_path, options.force);

  const std::vector<dataset::ChallengeSample> samples =
      dataset::read_samples_csv(options.test_csv);
  const std::vector<dataset::HiddenLabelRow> hidden =
      dataset::read_hidden_csv(options.hidden_csv);
  std::map<long, const dataset::HiddenLabelRow*> truth;
  for (const dataset::HiddenLabelRow& row : hidden) truth.emplace(row.sample_id, &row);

  std::vector<metrics::MetricReport> reports;
  std::ofstream points(points_path);
  if (!points) throw IoError("cannot open '" + points_path.string() + "' for writing");
  points << "checkpoint,selected_epoch";
  for (int k = 1; k <= options.metric.top_k; ++k) points << ",top" << k << "_accuracy";
  points << ",dba_score,power_ratio\n";

  for (const fs::path& path : checkpoint_paths) {
    const model::Checkpoint checkpoint = model::load_checkpoint(path.string());
    FeatureContext context{checkpoint.stats};
    std::vector<metrics::PredictionSet> predictions;
    std::vector<int> labels;
    std::vector<beamsim::PowerVector> powers;
    std::vector<int> scenario_ids;
    const int num_beams = checkpoint.params.config.num_classes;
    for (const dataset::ChallengeSample& sample : samples) {
      const auto it = truth.find(sample.sample_id);
      if (it == truth.end()) {
        throw ContractError("test sample " + std::to_string(sample.sample_id) +
                            " missing from hidden labels");
      }
      predictions.push_back(model::predict_topk(
          checkpoint.params, sample_features(sample, context),
          std::min(options.metric.top_k, num_beams)));
      labels.push_back(it->second->label);
      powers.push_back(it->second->powers);
      scenario_ids.push_back(it->second->scenario_id);
    }
    metrics::MetricReport report =
        metrics::evaluate(predictions, labels, powers, scenario_ids, options.metric);
    points << path.filename().string() << ',' << checkpoint.selected_epoch;
    for (double v : report.top_k_accuracy) points << ',' << format_float9(v);
    points << ',' << format_float9(report.dba_score) << ','
           << format_float9(report.power_ratio) << '\n';
    reports.push_back(std::move(report));
  }
  if (!points) throw IoError("write failed for '" + points_path.string() + "'");
  points.close();

  const metrics::CorrelationTable table = metrics::metric_correlation(reports);
  std::ofstream summary(summary_path);
  if (!summary) throw IoError("cannot open '" + summary_path.string() + "' for writing");
  summary << "num_points " << table.num_points << '\n';
  summary << "corr_dba_power_ratio " << format_float9(table.dba_vs_power_ratio) << '\n';
  for (std::size_t k = 0; k < table.topk_vs_power_ratio.size(); ++k) {
    summary << "corr_top" << (k + 1) << "_power_ratio "
            << format_float9(table.topk_vs_power_ratio[k]) << '\n';
  }
  summary << "zero_variance " << (table.zero_variance ? 1 : 0) << '\n';
  if (!summary) throw IoError("write failed for '" + summary_path.string() + "'");

  std::cout << "correlation over " << table.num_points << " checkpoints: "
            << "corr(DBA, P_R) = " << format_float9(table.dba_vs_power_ratio)
            << ", corr(top-1, P_R) = "
            << format_float9(table.topk_vs_power_ratio.empty()
                                 ? std::numeric_limits<double>::quiet_NaN()
                                 : table.topk_vs_power_ratio[0]);
  if (table.zero_variance) std::cout << " [zero-variance inputs]";
  std::cout << '\n';
  return table;
}

}  // namespace beamlab::cli
