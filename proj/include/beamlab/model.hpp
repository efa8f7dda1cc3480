#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "beamlab/geodesy.hpp"
#include "beamlab/metrics.hpp"

namespace beamlab::model {

struct ModelConfig {
  int input_dim = 2;       // normalized XY
  int seq_len = 2;         // position sub-window length
  int hidden_dim = 64;
  int num_gru_layers = 2;
  int num_classes = 64;    // codebook size
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 32;
  int epochs = 100;
  std::uint64_t seed = 1;

  void validate() const;
};

// Dense row-major matrix; small enough here that plain loops beat any BLAS
// handoff and keep training bit-reproducible.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  static Matrix zeros(int rows, int cols) {
    return Matrix{rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0)};
  }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

struct GruLayerParams {
  Matrix update_w, update_u;  // z gate: input and recurrent weights
  Matrix reset_w, reset_u;    // r gate
  Matrix cand_w, cand_u;      // candidate state
  std::vector<double> update_b, reset_b, cand_b;
};

struct ModelParams {
  ModelConfig config;
  std::vector<GruLayerParams> layers;
  Matrix classifier_w;  // num_classes x hidden_dim
  std::vector<double> classifier_b;
};

// Zero-valued parameter container with the same shapes; doubles as the
// gradient/moment container.
ModelParams zeros_like(const ModelConfig& config);

// Named view over every tensor, used by the optimizer, the checkpoint format
// and the finite-difference harness. Biases appear as 1 x n tensors.
struct TensorRef {
  std::string name;
  double* data;
  int rows;
  int cols;
};
std::vector<TensorRef> tensor_refs(ModelParams& params);

struct GruOutput {
  // hidden[layer][t] is the hidden state after step t of that layer.
  std::vector<std::vector<std::vector<double>>> hidden;
  std::vector<double> logits;
};

// Gated recurrent forward pass over a seq_len x input_dim input (row-major,
// flattened). Gate convention: h' = (1-z) (.) h + z (.) h_cand. Layer 2
// consumes layer 1's hidden sequence; the classifier reads the final hidden
// state of the last layer.
GruOutput gru_forward(const ModelParams& params, std::span<const double> input);

// Mean cross-entropy over the batch plus gradients for every parameter,
// computed by backpropagation through time. `inputs[i]` is one flattened
// sequence. Throws NumericError if the loss is non-finite.
double loss_and_gradients(const ModelParams& params,
                          std::span<const std::vector<double>> inputs,
                          std::span<const int> labels, ModelParams& gradients);

struct AdamState {
  ModelParams first_moment;
  ModelParams second_moment;
  long timestep = 0;
};

AdamState make_adam_state(const ModelConfig& config);

// One bias-corrected Adam update.
void adam_step(ModelParams& params, const ModelParams& gradients, AdamState& state);

struct SampleSet {
  std::vector<std::vector<double>> inputs;  // flattened sequences
  std::vector<int> labels;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_top1 = 0.0;
  double val_dba = 0.0;
};

struct TrainLog {
  std::vector<EpochStats> epochs;
  int selected_epoch = 0;  // 1-based epoch whose parameters were returned
};

struct TrainResult {
  ModelParams params;
  TrainLog log;
};

// Deterministic training loop: seeded uniform init in +-1/sqrt(hidden_dim),
// seeded mini-batch shuffling, Adam updates, model selection by best
// validation DBA. Optional per-epoch callback receives a snapshot of the
// current parameters (used for checkpoint dumps).
using EpochCallback = std::function<void(int epoch, const ModelParams& params,
                                         const EpochStats& stats)>;
TrainResult train(const SampleSet& train_set, const SampleSet& val_set,
                  const ModelConfig& config, const metrics::MetricConfig& metric_cfg,
                  const EpochCallback& on_epoch = nullptr);

// Indices of the k largest logits, descending, ties to the lowest index.
metrics::PredictionSet predict_topk(const ModelParams& params,
                                    std::span<const double> input, int k);

// Text checkpoint: config echo, normalization stats block, every tensor in
// row-major order with declared shape. Load fails loudly on any mismatch.
struct Checkpoint {
  ModelParams params;
  geodesy::StatsFile stats;
  int selected_epoch = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace beamlab::model
