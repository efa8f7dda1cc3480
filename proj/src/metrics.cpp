#include "beamlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "beamlab/errors.hpp"

namespace beamlab::metrics {

PredictionSet::PredictionSet(std::vector<int> ranked_beams, int num_beams)
    : ranked_(std::move(ranked_beams)) {
  if (ranked_.empty()) throw ContractError("prediction set is empty");
  std::set<int> seen;
  for (int beam : ranked_) {
    if (beam < 0 || beam >= num_beams) {
      throw ContractError("predicted beam " + std::to_string(beam) +
                          " outside [0, " + std::to_string(num_beams) + ")");
    }
    if (!seen.insert(beam).second) {
      throw ContractError("duplicate beam " + std::to_string(beam) +
                          " in prediction set");
    }
  }
}

void MetricConfig::validate() const {
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  if (delta < 1) throw ConfigError("delta must be >= 1");
}

namespace {

void check_lengths(std::size_t predictions, std::size_t labels) {
  if (predictions != labels) {
    throw ContractError("prediction/label length mismatch: " +
                        std::to_string(predictions) + " vs " +
                        std::to_string(labels));
  }
  if (predictions == 0) throw ContractError("empty evaluation batch");
}

void check_rank_depth(std::span<const PredictionSet> predictions, int k) {
  for (const PredictionSet& p : predictions) {
    if (p.size() < k) {
      throw ContractError("prediction set has " + std::to_string(p.size()) +
                          " beams, need k = " + std::to_string(k));
    }
  }
}

}  // namespace

DbaResult dba_score(std::span<const PredictionSet> predictions,
                    std::span<const int> labels, const MetricConfig& cfg) {
  cfg.validate();
  check_lengths(predictions.size(), labels.size());
  check_rank_depth(predictions, cfg.top_k);

  const double count = static_cast<double>(labels.size());
  DbaResult result;
  result.per_k.resize(cfg.top_k, 0.0);
  for (int k = 1; k <= cfg.top_k; ++k) {
    double distance_sum = 0.0;
    for (std::size_t n = 0; n < labels.size(); ++n) {
      double best = 1.0;
      for (int rank = 0; rank < k; ++rank) {
        const double distance =
            std::abs(predictions[n].ranked()[rank] - labels[n]) /
            static_cast<double>(cfg.delta);
        best = std::min(best, std::min(distance, 1.0));
      }
      distance_sum += best;
    }
    // (count - sum)/count rather than 1 - sum/count: one rounding, so the
    // delta = 1 case collapses to top-k accuracy bit-exactly.
    result.per_k[k - 1] = (count - distance_sum) / count;
  }
  double total = 0.0;
  for (double y : result.per_k) total += y;
  result.dba_score = total / cfg.top_k;
  return result;
}

double top_k_accuracy(std::span<const PredictionSet> predictions,
                      std::span<const int> labels, int k) {
  if (k < 1) throw ContractError("top_k_accuracy needs k >= 1");
  check_lengths(predictions.size(), labels.size());
  check_rank_depth(predictions, k);

  int hits = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const std::vector<int>& ranked = predictions[n].ranked();
    for (int rank = 0; rank < k; ++rank) {
      if (ranked[rank] == labels[n]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

PowerRatioResult power_ratio(std::span<const PredictionSet> predictions,
                             std::span<const int> labels,
                             std::span<const beamsim::PowerVector> power_vectors,
                             std::span<const int> scenario_ids, int k,
                             const std::map<int, double>* noise_floor_override) {
  if (k < 1) throw ContractError("power_ratio needs k >= 1");
  check_lengths(predictions.size(), labels.size());
  check_rank_depth(predictions, k);
  if (power_vectors.size() != labels.size() || scenario_ids.size() != labels.size()) {
    throw ContractError("power_ratio requires a power vector and scenario id per sample");
  }

  std::map<int, double> noise_floor;
  if (noise_floor_override != nullptr) {
    noise_floor = *noise_floor_override;
  } else {
    for (std::size_t n = 0; n < labels.size(); ++n) {
      const std::vector<double>& powers = power_vectors[n].powers;
      if (powers.empty()) throw ContractError("empty power vector in power_ratio");
      const double local_min = *std::min_element(powers.begin(), powers.end());
      auto [it, inserted] = noise_floor.try_emplace(scenario_ids[n], local_min);
      if (!inserted) it->second = std::min(it->second, local_min);
    }
  }

  PowerRatioResult result;
  double total = 0.0;
  int counted = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const std::vector<double>& powers = power_vectors[n].powers;
    const auto floor_it = noise_floor.find(scenario_ids[n]);
    if (floor_it == noise_floor.end()) {
      throw ContractError("no noise floor for scenario " +
                          std::to_string(scenario_ids[n]));
    }
    const double floor = floor_it->second;
    if (labels[n] < 0 || labels[n] >= static_cast<int>(powers.size())) {
      throw ContractError("label " + std::to_string(labels[n]) +
                          " outside power vector of length " +
                          std::to_string(powers.size()));
    }
    const double truth_power = powers[labels[n]] - floor;
    if (truth_power == 0.0) {
      ++result.excluded;  // ground truth sits on the noise floor
      continue;
    }
    double predicted = -std::numeric_limits<double>::infinity();
    for (int rank = 0; rank < k; ++rank) {
      const int beam = predictions[n].ranked()[rank];
      if (beam >= static_cast<int>(powers.size())) {
        throw ContractError("predicted beam " + std::to_string(beam) +
                            " outside power vector");
      }
      predicted = std::max(predicted, powers[beam]);
    }
    total += (predicted - floor) / truth_power;
    ++counted;
  }
  result.value = counted > 0 ? total / counted : 0.0;
  return result;
}

MetricReport evaluate(std::span<const PredictionSet> predictions,
                      std::span<const int> labels,
                      std::span<const beamsim::PowerVector> power_vectors,
                      std::span<const int> scenario_ids, const MetricConfig& cfg) {
  cfg.validate();
  MetricReport report;
  report.num_samples = static_cast<int>(labels.size());
  const DbaResult dba = dba_score(predictions, labels, cfg);
  report.dba_per_k = dba.per_k;
  report.dba_score = dba.dba_score;
  for (int k = 1; k <= cfg.top_k; ++k) {
    report.top_k_accuracy.push_back(top_k_accuracy(predictions, labels, k));
  }
  // The noise floor is always computed over the full evaluated set, so
  // per-scenario sub-reports stay comparable with the overall report.
  std::map<int, double> noise_floor;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const std::vector<double>& powers = power_vectors[n].powers;
    if (powers.empty()) throw ContractError("empty power vector in evaluate");
    const double local_min = *std::min_element(powers.begin(), powers.end());
    auto [it, inserted] = noise_floor.try_emplace(scenario_ids[n], local_min);
    if (!inserted) it->second = std::min(it->second, local_min);
  }
  const PowerRatioResult ratio = power_ratio(predictions, labels, power_vectors,
                                             scenario_ids, cfg.top_k, &noise_floor);
  report.power_ratio = ratio.value;
  report.power_ratio_excluded = ratio.excluded;

  std::set<int> scenarios(scenario_ids.begin(), scenario_ids.end());
  if (scenarios.size() > 1) {
    for (int scenario : scenarios) {
      std::vector<PredictionSet> sub_predictions;
      std::vector<int> sub_labels;
      std::vector<beamsim::PowerVector> sub_powers;
      std::vector<int> sub_scenarios;
      for (std::size_t n = 0; n < labels.size(); ++n) {
        if (scenario_ids[n] != scenario) continue;
        sub_predictions.push_back(predictions[n]);
        sub_labels.push_back(labels[n]);
        sub_powers.push_back(power_vectors[n]);
        sub_scenarios.push_back(scenario);
      }
      MetricReport sub;
      sub.num_samples = static_cast<int>(sub_labels.size());
      const DbaResult sub_dba = dba_score(sub_predictions, sub_labels, cfg);
      sub.dba_per_k = sub_dba.per_k;
      sub.dba_score = sub_dba.dba_score;
      for (int k = 1; k <= cfg.top_k; ++k) {
        sub.top_k_accuracy.push_back(top_k_accuracy(sub_predictions, sub_labels, k));
      }
      const PowerRatioResult sub_ratio = power_ratio(
          sub_predictions, sub_labels, sub_powers, sub_scenarios, cfg.top_k,
          &noise_floor);
      sub.power_ratio = sub_ratio.value;
      sub.power_ratio_excluded = sub_ratio.excluded;
      report.per_scenario.emplace(scenario, std::move(sub));
    }
  }
  return report;
}

namespace {

std::string format_metric(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

}  // namespace

void write_report_keyvalue(std::ostream& out, const MetricReport& report,
                           const std::string& prefix) {
  out << prefix << "samples " << report.num_samples << '\n';
  for (std::size_t k = 0; k < report.top_k_accuracy.size(); ++k) {
    out << prefix << "top" << (k + 1) << "_accuracy "
        << format_metric(report.top_k_accuracy[k]) << '\n';
  }
  for (std::size_t k = 0; k < report.dba_per_k.size(); ++k) {
    out << prefix << "dba_k" << (k + 1) << ' ' << format_metric(report.dba_per_k[k])
        << '\n';
  }
  out << prefix << "dba_score " << format_metric(report.dba_score) << '\n';
  out << prefix << "power_ratio " << format_metric(report.power_ratio) << '\n';
  out << prefix << "power_ratio_excluded " << report.power_ratio_excluded << '\n';
  for (const auto& [scenario, sub] : report.per_scenario) {
    write_report_keyvalue(out, sub, prefix + "scenario" + std::to_string(scenario) + ".");
  }
}

std::string report_csv_header(int top_k) {
  std::ostringstream out;
  out << "subset,samples";
  for (int k = 1; k <= top_k; ++k) out << ",top" << k << "_accuracy";
  for (int k = 1; k <= top_k; ++k) out << ",dba_k" << k;
  out << ",dba_score,power_ratio,power_ratio_excluded";
  return out.str();
}

std::string report_csv_row(const std::string& subset, const MetricReport& report) {
  std::ostringstream out;
  out << subset << ',' << report.num_samples;
  for (double v : report.top_k_accuracy) out << ',' << format_metric(v);
  for (double v : report.dba_per_k) out << ',' << format_metric(v);
  out << ',' << format_metric(report.dba_score) << ','
      << format_metric(report.power_ratio) << ',' << report.power_ratio_excluded;
  return out.str();
}

namespace {

double pearson(std::span<const double> a, std::span<const double> b, bool* degenerate) {
  const double count = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= count;
  mean_b /= count;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) {
    *degenerate = true;
    return std::numeric_limits<double>::quiet_NaN();
  }
  return cov / std::sqrt(var_a * var_b);
}

}  // namespace

CorrelationTable metric_correlation(std::span<const MetricReport> reports) {
  if (reports.size() < 3) {
    throw ContractError("metric_correlation needs at least 3 reports, got " +
                        std::to_string(reports.size()));
  }
  std::size_t top_k = reports[0].top_k_accuracy.size();
  for (const MetricReport& r : reports) {
    top_k = std::min(top_k, r.top_k_accuracy.size());
  }

  std::vector<double> dba, ratio;
  for (const MetricReport& r : reports) {
    dba.push_back(r.dba_score);
    ratio.push_back(r.power_ratio);
  }

  CorrelationTable table;
  table.num_points = static_cast<int>(reports.size());
  table.dba_vs_power_ratio = pearson(dba, ratio, &table.zero_variance);
  for (std::size_t k = 0; k < top_k; ++k) {
    std::vector<double> accuracy;
    for (const MetricReport& r : reports) accuracy.push_back(r.top_k_accuracy[k]);
    table.topk_vs_power_ratio.push_back(pearson(accuracy, ratio, &table.zero_variance));
  }
  return table;
}

}  // namespace beamlab::metrics
