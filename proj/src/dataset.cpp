#include "beamlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "beamlab/errors.hpp"
#include "beamlab/rng.hpp"

namespace beamlab::dataset {

void ScenarioConfig::validate() const {
  bs_position.validate();
  road_start.validate();
  road_end.validate();
  if (num_trajectories < 1) throw ConfigError("num_trajectories must be >= 1");
  if (!(speed_mps > 0.0)) throw ConfigError("speed must be positive");
  if (!(sample_rate_hz > 0.0)) throw ConfigError("sample_rate must be positive");
  if (!(gps_noise_std_m >= 0.0)) throw ConfigError("gps_noise_std must be >= 0");
}

namespace {

std::string modality_ref(const char* sensor, const char* ext, int scenario_id,
                         int trajectory_id, int step) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "scenario%d/%s/traj%03d_t%05d.%s", scenario_id,
                sensor, trajectory_id, step, ext);
  return buf;
}

}  // namespace

std::vector<StepRecord> generate_scenario(const ScenarioConfig& config,
                                          const beamsim::ArrayConfig& array) {
  config.validate();
  array.validate();

  const geodesy::UtmCoordinate bs = geodesy::latlon_to_utm(config.bs_position);
  const geodesy::UtmCoordinate start =
      geodesy::latlon_to_utm(config.road_start, bs.zone);
  const geodesy::UtmCoordinate end = geodesy::latlon_to_utm(config.road_end, bs.zone);
  if (geodesy::utm_zone_for(config.road_start.longitude_deg) != bs.zone ||
      geodesy::utm_zone_for(config.road_end.longitude_deg) != bs.zone) {
    throw ConfigError("scenario " + std::to_string(config.scenario_id) +
                      " spans a UTM zone boundary");
  }

  const double road_dx = end.easting_m - start.easting_m;
  const double road_dy = end.northing_m - start.northing_m;
  const double road_length = std::hypot(road_dx, road_dy);
  if (!(road_length > 0.0)) {
    throw ConfigError("scenario " + std::to_string(config.scenario_id) +
                      " has a zero-length road segment");
  }
  const double step_m = config.speed_mps / config.sample_rate_hz;
  if (road_length < step_m) {
    throw ConfigError("road shorter than one sampling step");
  }
  const double ux = road_dx / road_length;
  const double uy = road_dy / road_length;

  const beamsim::BeamCodebook codebook = beamsim::build_codebook(array);

  std::vector<StepRecord> records;
  for (int traj = 0; traj < config.num_trajectories; ++traj) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(traj)));
    const double phase = rng.uniform() * step_m;  // start offset along the road
    const int steps = static_cast<int>((road_length - phase) / step_m) + 1;
    for (int s = 0; s < steps; ++s) {
      const double along = phase + s * step_m;
      geodesy::UtmCoordinate true_utm = bs;
      true_utm.easting_m = start.easting_m + ux * along;
      true_utm.northing_m = start.northing_m + uy * along;

      geodesy::UtmCoordinate gps_utm = true_utm;
      gps_utm.easting_m += config.gps_noise_std_m * rng.normal();
      gps_utm.northing_m += config.gps_noise_std_m * rng.normal();

      const geodesy::PlanarXY rel = geodesy::relative_position(true_utm, bs);
      const beamsim::ChannelState channel = beamsim::synth_channel(rel.x, rel.y, array);
      StepRecord record;
      record.scenario_id = config.scenario_id;
      record.trajectory_id = traj;
      record.step = s;
      record.true_position = geodesy::utm_to_latlon(true_utm);
      record.gps_position = geodesy::utm_to_latlon(gps_utm);
      record.powers = beamsim::receive_power(channel, codebook);
      record.label = beamsim::optimal_beam(record.powers);
      records.push_back(std::move(record));
    }
  }
  return records;
}

std::vector<ChallengeSample> assemble_sequences(std::span<const StepRecord> records,
                                                const SequenceSpec& spec) {
  if (spec.window < 1 || spec.position_steps < 1 || spec.position_steps > spec.window) {
    throw ConfigError("invalid sequence spec");
  }
  if (spec.position_steps != 2 || spec.window != 5) {
    // The sample layout (2 positions, 5 refs per modality) is part of the
    // schema; other window shapes are not representable.
    throw ConfigError("sequence spec must be window=5, position_steps=2");
  }
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].scenario_id != records[0].scenario_id ||
        records[i].trajectory_id != records[0].trajectory_id) {
      throw ContractError("assemble_sequences needs records from a single trajectory");
    }
    if (records[i].step <= records[i - 1].step) {
      throw ContractError("assemble_sequences needs time-ordered records");
    }
  }

  std::vector<ChallengeSample> samples;
  if (records.size() < static_cast<std::size_t>(spec.window)) return samples;
  for (std::size_t begin = 0; begin + spec.window <= records.size(); ++begin) {
    const StepRecord& tail = records[begin + spec.window - 1];
    ChallengeSample sample;
    sample.sample_id = static_cast<long>(samples.size());
    sample.scenario_id = tail.scenario_id;
    sample.positions[0] = records[begin].gps_position;
    sample.positions[1] = records[begin + 1].gps_position;
    for (int w = 0; w < spec.window; ++w) {
      const StepRecord& rec = records[begin + w];
      sample.image_refs[w] =
          modality_ref("camera", "jpg", rec.scenario_id, rec.trajectory_id, rec.step);
      sample.lidar_refs[w] =
          modality_ref("lidar", "pcd", rec.scenario_id, rec.trajectory_id, rec.step);
      sample.radar_refs[w] =
          modality_ref("radar", "npy", rec.scenario_id, rec.trajectory_id, rec.step);
    }
    sample.powers = tail.powers;
    sample.label = tail.label;
    samples.push_back(std::move(sample));
  }
  return samples;
}

DatasetSplit split_dataset(std::span<const ChallengeSample> samples,
                           const std::array<double, 3>& ratios, std::uint64_t seed) {
  if (samples.empty()) throw ContractError("split_dataset on empty sample list");
  double total = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw ConfigError("split ratios must be non-negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1, got " + std::to_string(total));
  }

  std::vector<long> ids;
  ids.reserve(samples.size());
  for (const ChallengeSample& s : samples) ids.push_back(s.sample_id);
  Rng rng(seed);
  rng.shuffle(ids);

  const auto count = static_cast<double>(ids.size());
  const std::size_t cut1 = static_cast<std::size_t>(std::llround(ratios[0] * count));
  const std::size_t cut2 =
      static_cast<std::size_t>(std::llround((ratios[0] + ratios[1]) * count));
  DatasetSplit split;
  split.train.assign(ids.begin(), ids.begin() + cut1);
  split.validation.assign(ids.begin() + cut1, ids.begin() + cut2);
  split.test.assign(ids.begin() + cut2, ids.end());
  return split;
}

ChallengeBuild build_challenge(std::span<const std::vector<ChallengeSample>> seen_scenarios,
                               std::span<const ChallengeSample> unseen_scenario,
                               std::uint64_t seed, double seen_holdout_fraction) {
  if (seen_scenarios.empty()) throw ConfigError("need at least one seen scenario");
  if (unseen_scenario.empty()) throw ConfigError("unseen scenario has no samples");
  if (!(seen_holdout_fraction > 0.0 && seen_holdout_fraction < 1.0)) {
    throw ConfigError("seen_holdout_fraction must lie in (0, 1)");
  }

  std::set<int> seen_ids;
  std::vector<ChallengeSample> pool;
  for (const std::vector<ChallengeSample>& scenario : seen_scenarios) {
    for (const ChallengeSample& sample : scenario) {
      seen_ids.insert(sample.scenario_id);
      if (!sample.label || !sample.powers) {
        throw ContractError("seen-scenario sample lacks label or power vector");
      }
      pool.push_back(sample);
    }
  }
  if (pool.empty()) throw ConfigError("seen scenarios contain no samples");
  for (const ChallengeSample& sample : unseen_scenario) {
    if (seen_ids.count(sample.scenario_id) != 0) {
      throw ConfigError("unseen scenario id " + std::to_string(sample.scenario_id) +
                        " overlaps a training scenario");
    }
    if (!sample.label || !sample.powers) {
      throw ContractError("unseen-scenario sample lacks label or power vector");
    }
  }

  const std::size_t holdout = static_cast<std::size_t>(
      std::llround(seen_holdout_fraction * static_cast<double>(pool.size())));
  const std::size_t half = std::min(holdout, unseen_scenario.size());
  if (half == 0) throw ConfigError("challenge test set would be empty");
  if (half >= pool.size()) throw ConfigError("challenge training set would be empty");

  std::vector<std::size_t> seen_order(pool.size());
  std::iota(seen_order.begin(), seen_order.end(), 0);
  Rng rng(derive_seed(seed, 0));
  rng.shuffle(seen_order);

  std::vector<std::size_t> unseen_order(unseen_scenario.size());
  std::iota(unseen_order.begin(), unseen_order.end(), 0);
  Rng unseen_rng(derive_seed(seed, 1));
  unseen_rng.shuffle(unseen_order);

  ChallengeBuild build;
  std::vector<ChallengeSample> test_full;
  for (std::size_t i = 0; i < half; ++i) {
    test_full.push_back(pool[seen_order[i]]);
    test_full.push_back(unseen_scenario[unseen_order[i]]);
  }
  for (std::size_t i = half; i < pool.size(); ++i) {
    build.train.push_back(pool[seen_order[i]]);
  }
  std::sort(build.train.begin(), build.train.end(),
            [](const ChallengeSample& a, const ChallengeSample& b) {
              if (a.scenario_id != b.scenario_id) return a.scenario_id < b.scenario_id;
              return a.sample_id < b.sample_id;
            });

  // Shuffle the interleaved test rows so sample ids do not leak which half a
  // row belongs to, then assign fresh sequential ids.
  Rng order_rng(derive_seed(seed, 2));
  order_rng.shuffle(test_full);
  long next_id = 0;
  for (ChallengeSample& sample : build.train) sample.sample_id = next_id++;
  for (ChallengeSample& sample : test_full) {
    sample.sample_id = next_id++;
    HiddenLabelRow hidden;
    hidden.sample_id = sample.sample_id;
    hidden.scenario_id = sample.scenario_id;
    hidden.label = *sample.label;
    hidden.powers = *sample.powers;
    build.hidden_labels.push_back(std::move(hidden));
    sample.label.reset();
    sample.powers.reset();
    build.test.push_back(std::move(sample));
  }
  return build;
}

namespace {

std::string format_float(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, std::size_t row, const std::string& column) {
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || !std::isfinite(value)) {
    throw IoError("row " + std::to_string(row) + ", column " + column +
                  ": cannot parse '" + text + "' as a number");
  }
  return value;
}

long parse_long(const std::string& text, std::size_t row, const std::string& column) {
  char* end = nullptr;
  const long value = std::strtol(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0') {
    throw IoError("row " + std::to_string(row) + ", column " + column +
                  ": cannot parse '" + text + "' as an integer");
  }
  return value;
}

std::vector<std::string> sample_header(bool with_labels, int num_beams) {
  std::vector<std::string> header = {"sample_id", "scenario_id", "lat_1",
                                     "lon_1",     "lat_2",       "lon_2"};
  for (int i = 1; i <= 5; ++i) header.push_back("img_" + std::to_string(i));
  for (int i = 1; i <= 5; ++i) header.push_back("lidar_" + std::to_string(i));
  for (int i = 1; i <= 5; ++i) header.push_back("radar_" + std::to_string(i));
  if (with_labels) {
    for (int q = 1; q <= num_beams; ++q) header.push_back("power_" + std::to_string(q));
    header.push_back("beam_label");
  }
  return header;
}

std::string join(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) line += ',';
    line += fields[i];
  }
  return line;
}

}  // namespace

void write_samples_csv(const std::string& path,
                       std::span<const ChallengeSample> samples, bool with_labels) {
  int num_beams = 0;
  if (with_labels) {
    for (const ChallengeSample& sample : samples) {
      if (!sample.powers || !sample.label) {
        throw ContractError("sample " + std::to_string(sample.sample_id) +
                            " lacks label/powers for a labeled CSV");
      }
      const int q = static_cast<int>(sample.powers->powers.size());
      if (num_beams == 0) num_beams = q;
      if (q != num_beams) throw ContractError("inconsistent power vector lengths");
    }
    if (num_beams == 0) throw ContractError("cannot infer power vector length");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << join(sample_header(with_labels, num_beams)) << '\n';
  for (const ChallengeSample& sample : samples) {
    std::vector<std::string> fields;
    fields.push_back(std::to_string(sample.sample_id));
    fields.push_back(std::to_string(sample.scenario_id));
    for (const geodesy::GeoPosition& pos : sample.positions) {
      fields.push_back(format_float(pos.latitude_deg));
      fields.push_back(format_float(pos.longitude_deg));
    }
    for (const std::string& ref : sample.image_refs) fields.push_back(ref);
    for (const std::string& ref : sample.lidar_refs) fields.push_back(ref);
    for (const std::string& ref : sample.radar_refs) fields.push_back(ref);
    if (with_labels) {
      for (double p : sample.powers->powers) fields.push_back(format_float(p));
      fields.push_back(std::to_string(*sample.label + 1));  // 1-based on disk
    }
    out << join(fields) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<ChallengeSample> read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path + "' is empty");
  const std::vector<std::string> header = split_line(line);

  const std::vector<std::string> base = sample_header(false, 0);
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (i >= header.size() || header[i] != base[i]) {
      throw IoError("'" + path + "': missing or misplaced column '" + base[i] + "'");
    }
  }
  bool with_labels = header.size() > base.size();
  int num_beams = 0;
  if (with_labels) {
    num_beams = static_cast<int>(header.size() - base.size()) - 1;
    const std::vector<std::string> labeled = sample_header(true, num_beams);
    if (num_beams < 1 || header != labeled) {
      throw IoError("'" + path + "': malformed power/label columns");
    }
  }

  std::vector<ChallengeSample> samples;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size()) {
      throw IoError("row " + std::to_string(row) + ": has " +
                    std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(header.size()));
    }
    ChallengeSample sample;
    std::size_t col = 0;
    sample.sample_id = parse_long(fields[col], row, header[col]);
    ++col;
    sample.scenario_id = static_cast<int>(parse_long(fields[col], row, header[col]));
    ++col;
    for (int p = 0; p < 2; ++p) {
      sample.positions[p].latitude_deg = parse_double(fields[col], row, header[col]);
      ++col;
      sample.positions[p].longitude_deg = parse_double(fields[col], row, header[col]);
      ++col;
    }
    for (int i = 0; i < 5; ++i) sample.image_refs[i] = fields[col++];
    for (int i = 0; i < 5; ++i) sample.lidar_refs[i] = fields[col++];
    for (int i = 0; i < 5; ++i) sample.radar_refs[i] = fields[col++];
    if (with_labels) {
      beamsim::PowerVector powers;
      powers.powers.reserve(num_beams);
      for (int q = 0; q < num_beams; ++q) {
        powers.powers.push_back(parse_double(fields[col], row, header[col]));
        ++col;
      }
      const long label = parse_long(fields[col], row, header[col]);
      ++col;
      if (label < 1 || label > num_beams) {
        throw IoError("row " + std::to_string(row) + ": beam_label " +
                      std::to_string(label) + " outside [1, " +
                      std::to_string(num_beams) + "]");
      }
      sample.powers = std::move(powers);
      sample.label = static_cast<int>(label - 1);
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

void write_hidden_csv(const std::string& path, std::span<const HiddenLabelRow> rows) {
  int num_beams = 0;
  for (const HiddenLabelRow& row : rows) {
    const int q = static_cast<int>(row.powers.powers.size());
    if (num_beams == 0) num_beams = q;
    if (q != num_beams || q == 0) {
      throw ContractError("hidden rows need consistent non-empty power vectors");
    }
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "sample_id,scenario_id,beam_label";
  for (int q = 1; q <= num_beams; ++q) out << ",power_" << q;
  out << '\n';
  for (const HiddenLabelRow& row : rows) {
    out << row.sample_id << ',' << row.scenario_id << ',' << (row.label + 1);
    for (double p : row.powers.powers) out << ',' << format_float(p);
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<HiddenLabelRow> read_hidden_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path + "' is empty");
  const std::vector<std::string> header = split_line(line);
  if (header.size() < 4 || header[0] != "sample_id" || header[1] != "scenario_id" ||
      header[2] != "beam_label") {
    throw IoError("'" + path + "': malformed hidden-label header");
  }
  const int num_beams = static_cast<int>(header.size()) - 3;
  for (int q = 1; q <= num_beams; ++q) {
    if (header[2 + q] != "power_" + std::to_string(q)) {
      throw IoError("'" + path + "': missing column power_" + std::to_string(q));
    }
  }

  std::vector<HiddenLabelRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size()) {
      throw IoError("row " + std::to_string(line_no) + ": has " +
                    std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(header.size()));
    }
    HiddenLabelRow row;
    row.sample_id = parse_long(fields[0], line_no, "sample_id");
    row.scenario_id = static_cast<int>(parse_long(fields[1], line_no, "scenario_id"));
    const long label = parse_long(fields[2], line_no, "beam_label");
    if (label < 1 || label > num_beams) {
      throw IoError("row " + std::to_string(line_no) + ": beam_label " +
                    std::to_string(label) + " outside [1, " +
                    std::to_string(num_beams) + "]");
    }
    row.label = static_cast<int>(label - 1);
    row.powers.powers.reserve(num_beams);
    for (int q = 0; q < num_beams; ++q) {
      row.powers.powers.push_back(parse_double(fields[3 + q], line_no, header[3 + q]));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace beamlab::dataset
