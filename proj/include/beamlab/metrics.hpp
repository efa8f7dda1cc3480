#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "beamlab/beamsim.hpp"

namespace beamlab::metrics {

// Ranked top-K beam indices for one sample, most likely first. Indices are
// validated at construction: distinct and inside [0, num_beams).
class PredictionSet {
 public:
  PredictionSet(std::vector<int> ranked_beams, int num_beams);

  const std::vector<int>& ranked() const { return ranked_; }
  int size() const { return static_cast<int>(ranked_.size()); }

 private:
  std::vector<int> ranked_;
};

struct MetricConfig {
  int top_k = 3;
  int delta = 5;  // distance saturation for the DBA-Score

  void validate() const;
};

struct DbaResult {
  double dba_score = 0.0;
  std::vector<double> per_k;  // Y_1..Y_K
};

// Distance-based accuracy. Y_k = 1 - mean_n min_{k'<=k} min(|pred - truth|/delta, 1);
// the score averages Y_1..Y_K. Beam distance is plain integer difference.
DbaResult dba_score(std::span<const PredictionSet> predictions,
                    std::span<const int> labels, const MetricConfig& cfg);

// Fraction of samples whose true beam appears in the first k predictions.
double top_k_accuracy(std::span<const PredictionSet> predictions,
                      std::span<const int> labels, int k);

struct PowerRatioResult {
  double value = 0.0;
  int excluded = 0;  // samples whose ground-truth power sat on the noise floor
};

// Noise-floor-referenced ratio of achieved to optimal receive power, averaged
// over samples. The predicted power is the best among the first k predicted
// beams; the noise floor is the per-scenario minimum power observed across the
// evaluated set (or taken from `noise_floor_override` when provided).
PowerRatioResult power_ratio(std::span<const PredictionSet> predictions,
                             std::span<const int> labels,
                             std::span<const beamsim::PowerVector> power_vectors,
                             std::span<const int> scenario_ids, int k,
                             const std::map<int, double>* noise_floor_override = nullptr);

// Scores in Table-style layout: accuracy and DBA for k = 1..top_k plus the
// power ratio over the same predictions.
struct MetricReport {
  std::vector<double> top_k_accuracy;  // index k-1
  std::vector<double> dba_per_k;       // Y_1..Y_K
  double dba_score = 0.0;
  double power_ratio = 0.0;
  int power_ratio_excluded = 0;
  int num_samples = 0;
  std::map<int, MetricReport> per_scenario;  // empty at leaf level
};

MetricReport evaluate(std::span<const PredictionSet> predictions,
                      std::span<const int> labels,
                      std::span<const beamsim::PowerVector> power_vectors,
                      std::span<const int> scenario_ids, const MetricConfig& cfg);

// Flat key-value rendering (one metric per line) and a CSV row mirroring the
// report table layout.
void write_report_keyvalue(std::ostream& out, const MetricReport& report,
                           const std::string& prefix);
std::string report_csv_header(int top_k);
std::string report_csv_row(const std::string& subset, const MetricReport& report);

struct CorrelationTable {
  double dba_vs_power_ratio = 0.0;
  std::vector<double> topk_vs_power_ratio;  // index k-1
  bool zero_variance = false;               // any input column constant
  int num_points = 0;
};

// Pearson correlations across checkpoints of varying quality. Constant columns
// make the correlation undefined; it is reported as NaN with the flag set.
CorrelationTable metric_correlation(std::span<const MetricReport> reports);

}  // namespace beamlab::metrics
