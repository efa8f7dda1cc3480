#include "beamlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "beamlab/errors.hpp"
#include "beamlab/rng.hpp"

namespace beamlab::model {

void ModelConfig::validate() const {
  if (input_dim < 1) throw ConfigError("input_dim must be positive");
  if (seq_len < 1) throw ConfigError("seq_len must be positive");
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be positive");
  if (num_gru_layers < 1) throw ConfigError("num_gru_layers must be positive");
  if (num_classes < 1) throw ConfigError("num_classes must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in (0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (epochs < 1) throw ConfigError("epochs must be positive");
}

ModelParams zeros_like(const ModelConfig& config) {
  config.validate();
  ModelParams params;
  params.config = config;
  for (int layer = 0; layer < config.num_gru_layers; ++layer) {
    const int in_dim = layer == 0 ? config.input_dim : config.hidden_dim;
    GruLayerParams p;
    p.update_w = Matrix::zeros(config.hidden_dim, in_dim);
    p.reset_w = Matrix::zeros(config.hidden_dim, in_dim);
    p.cand_w = Matrix::zeros(config.hidden_dim, in_dim);
    p.update_u = Matrix::zeros(config.hidden_dim, config.hidden_dim);
    p.reset_u = Matrix::zeros(config.hidden_dim, config.hidden_dim);
    p.cand_u = Matrix::zeros(config.hidden_dim, config.hidden_dim);
    p.update_b.assign(config.hidden_dim, 0.0);
    p.reset_b.assign(config.hidden_dim, 0.0);
    p.cand_b.assign(config.hidden_dim, 0.0);
    params.layers.push_back(std::move(p));
  }
  params.classifier_w = Matrix::zeros(config.num_classes, config.hidden_dim);
  params.classifier_b.assign(config.num_classes, 0.0);
  return params;
}

std::vector<TensorRef> tensor_refs(ModelParams& params) {
  std::vector<TensorRef> refs;
  auto add_matrix = [&refs](const std::string& name, Matrix& m) {
    refs.push_back({name, m.data.data(), m.rows, m.cols});
  };
  auto add_vector = [&refs](const std::string& name, std::vector<double>& v) {
    refs.push_back({name, v.data(), 1, static_cast<int>(v.size())});
  };
  for (std::size_t layer = 0; layer < params.layers.size(); ++layer) {
    const std::string base = "gru" + std::to_string(layer) + ".";
    GruLayerParams& p = params.layers[layer];
    add_matrix(base + "update_w", p.update_w);
    add_matrix(base + "update_u", p.update_u);
    add_vector(base + "update_b", p.update_b);
    add_matrix(base + "reset_w", p.reset_w);
    add_matrix(base + "reset_u", p.reset_u);
    add_vector(base + "reset_b", p.reset_b);
    add_matrix(base + "cand_w", p.cand_w);
    add_matrix(base + "cand_u", p.cand_u);
    add_vector(base + "cand_b", p.cand_b);
  }
  add_matrix("classifier.w", params.classifier_w);
  add_vector("classifier.b", params.classifier_b);
  return refs;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// out = M v + b
void affine(const Matrix& m, std::span<const double> v, std::span<const double> bias,
            std::span<double> out) {
  for (int r = 0; r < m.rows; ++r) {
    double acc = bias.empty() ? 0.0 : bias[r];
    const double* row = m.data.data() + static_cast<std::size_t>(r) * m.cols;
    for (int c = 0; c < m.cols; ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
}

// out += M v
void matvec_add(const Matrix& m, std::span<const double> v, std::span<double> out) {
  for (int r = 0; r < m.rows; ++r) {
    double acc = 0.0;
    const double* row = m.data.data() + static_cast<std::size_t>(r) * m.cols;
    for (int c = 0; c < m.cols; ++c) acc += row[c] * v[c];
    out[r] += acc;
  }
}

// out += M^T v
void matvec_transpose_add(const Matrix& m, std::span<const double> v,
                          std::span<double> out) {
  for (int r = 0; r < m.rows; ++r) {
    const double scale = v[r];
    const double* row = m.data.data() + static_cast<std::size_t>(r) * m.cols;
    for (int c = 0; c < m.cols; ++c) out[c] += scale * row[c];
  }
}

// grad += a b^T
void outer_add(Matrix& grad, std::span<const double> a, std::span<const double> b) {
  for (int r = 0; r < grad.rows; ++r) {
    double* row = grad.data.data() + static_cast<std::size_t>(r) * grad.cols;
    const double scale = a[r];
    for (int c = 0; c < grad.cols; ++c) row[c] += scale * b[c];
  }
}

void add_to(std::span<double> out, std::span<const double> v) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
}

// Per-step activations cached for backpropagation.
struct StepCache {
  std::vector<double> input;       // x_t as seen by this layer
  std::vector<double> h_prev;
  std::vector<double> update;      // z
  std::vector<double> reset;       // r
  std::vector<double> reset_h;     // r (.) h_prev
  std::vector<double> cand;        // h_cand
  std::vector<double> hidden;      // h'
};

struct ForwardTrace {
  std::vector<std::vector<StepCache>> steps;  // [layer][t]
  std::vector<double> logits;
};

ForwardTrace run_forward(const ModelParams& params, std::span<const double> input) {
  const ModelConfig& cfg = params.config;
  if (static_cast<int>(input.size()) != cfg.seq_len * cfg.input_dim) {
    throw ContractError("input length " + std::to_string(input.size()) +
                        " does not match seq_len*input_dim = " +
                        std::to_string(cfg.seq_len * cfg.input_dim));
  }
  for (double v : input) {
    if (!std::isfinite(v)) throw ContractError("non-finite model input");
  }

  ForwardTrace trace;
  trace.steps.resize(cfg.num_gru_layers);
  const int hidden_dim = cfg.hidden_dim;

  std::vector<std::vector<double>> layer_input(cfg.seq_len);
  for (int t = 0; t < cfg.seq_len; ++t) {
    layer_input[t].assign(input.begin() + static_cast<std::size_t>(t) * cfg.input_dim,
                          input.begin() + static_cast<std::size_t>(t + 1) * cfg.input_dim);
  }

  for (int layer = 0; layer < cfg.num_gru_layers; ++layer) {
    const GruLayerParams& p = params.layers[layer];
    std::vector<double> hidden(hidden_dim, 0.0);
    trace.steps[layer].resize(cfg.seq_len);
    for (int t = 0; t < cfg.seq_len; ++t) {
      StepCache& cache = trace.steps[layer][t];
      cache.input = layer_input[t];
      cache.h_prev = hidden;
      cache.update.resize(hidden_dim);
      cache.reset.resize(hidden_dim);
      cache.cand.resize(hidden_dim);
      cache.reset_h.resize(hidden_dim);

      affine(p.update_w, cache.input, p.update_b, cache.update);
      matvec_add(p.update_u, cache.h_prev, cache.update);
      affine(p.reset_w, cache.input, p.reset_b, cache.reset);
      matvec_add(p.reset_u, cache.h_prev, cache.reset);
      for (int i = 0; i < hidden_dim; ++i) {
        cache.update[i] = sigmoid(cache.update[i]);
        cache.reset[i] = sigmoid(cache.reset[i]);
        cache.reset_h[i] = cache.reset[i] * cache.h_prev[i];
      }
      affine(p.cand_w, cache.input, p.cand_b, cache.cand);
      matvec_add(p.cand_u, cache.reset_h, cache.cand);
      for (int i = 0; i < hidden_dim; ++i) {
        cache.cand[i] = std::tanh(cache.cand[i]);
        hidden[i] = (1.0 - cache.update[i]) * cache.h_prev[i] +
                    cache.update[i] * cache.cand[i];
      }
      cache.hidden = hidden;
    }
    for (int t = 0; t < cfg.seq_len; ++t) layer_input[t] = trace.steps[layer][t].hidden;
  }

  trace.logits.resize(cfg.num_classes);
  affine(params.classifier_w, trace.steps.back().back().hidden, params.classifier_b,
         trace.logits);
  return trace;
}

// log(sum(exp(logits))) with the max factored out.
double log_sum_exp(std::span<const double> logits) {
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double acc = 0.0;
  for (double v : logits) acc += std::exp(v - max_logit);
  return max_logit + std::log(acc);
}

// Accumulates one sample's gradients; dlogits must already carry the batch scale.
void backward_sample(const ModelParams& params, const ForwardTrace& trace,
                     std::span<const double> dlogits, ModelParams& grads) {
  const ModelConfig& cfg = params.config;
  const int hidden_dim = cfg.hidden_dim;
  const int seq_len = cfg.seq_len;

  outer_add(grads.classifier_w, dlogits, trace.steps.back().back().hidden);
  add_to(grads.classifier_b, dlogits);

  // dhidden[t]: gradient arriving at h[layer][t] from the layer above (or the
  // classifier); the recurrent contribution is carried separately.
  std::vector<std::vector<double>> dhidden(seq_len, std::vector<double>(hidden_dim, 0.0));
  matvec_transpose_add(params.classifier_w, dlogits, dhidden[seq_len - 1]);

  std::vector<double> d_update(hidden_dim), d_reset(hidden_dim), d_cand(hidden_dim);
  std::vector<double> d_reset_h(hidden_dim);

  for (int layer = cfg.num_gru_layers - 1; layer >= 0; --layer) {
    const GruLayerParams& p = params.layers[layer];
    GruLayerParams& g = grads.layers[layer];
    const int in_dim = layer == 0 ? cfg.input_dim : cfg.hidden_dim;
    std::vector<std::vector<double>> dinput(seq_len, std::vector<double>(in_dim, 0.0));
    std::vector<double> carry(hidden_dim, 0.0);

    for (int t = seq_len - 1; t >= 0; --t) {
      const StepCache& cache = trace.steps[layer][t];
      std::vector<double> dh = dhidden[t];
      add_to(dh, carry);

      for (int i = 0; i < hidden_dim; ++i) {
        const double z = cache.update[i];
        const double hc = cache.cand[i];
        d_update[i] = dh[i] * (hc - cache.h_prev[i]) * z * (1.0 - z);
        d_cand[i] = dh[i] * z * (1.0 - hc * hc);
      }
      std::fill(d_reset_h.begin(), d_reset_h.end(), 0.0);
      matvec_transpose_add(p.cand_u, d_cand, d_reset_h);
      for (int i = 0; i < hidden_dim; ++i) {
        const double r = cache.reset[i];
        d_reset[i] = d_reset_h[i] * cache.h_prev[i] * r * (1.0 - r);
      }

      outer_add(g.update_w, d_update, cache.input);
      outer_add(g.update_u, d_update, cache.h_prev);
      add_to(g.update_b, d_update);
      outer_add(g.reset_w, d_reset, cache.input);
      outer_add(g.reset_u, d_reset, cache.h_prev);
      add_to(g.reset_b, d_reset);
      outer_add(g.cand_w, d_cand, cache.input);
      outer_add(g.cand_u, d_cand, cache.reset_h);
      add_to(g.cand_b, d_cand);

      matvec_transpose_add(p.update_w, d_update, dinput[t]);
      matvec_transpose_add(p.reset_w, d_reset, dinput[t]);
      matvec_transpose_add(p.cand_w, d_cand, dinput[t]);

      for (int i = 0; i < hidden_dim; ++i) {
        carry[i] = dh[i] * (1.0 - cache.update[i]) + d_reset_h[i] * cache.reset[i];
      }
      matvec_transpose_add(p.update_u, d_update, carry);
      matvec_transpose_add(p.reset_u, d_reset, carry);
    }
    if (layer > 0) dhidden = std::move(dinput);
  }
}

}  // namespace

GruOutput gru_forward(const ModelParams& params, std::span<const double> input) {
  const ForwardTrace trace = run_forward(params, input);
  GruOutput out;
  out.hidden.resize(trace.steps.size());
  for (std::size_t layer = 0; layer < trace.steps.size(); ++layer) {
    for (const StepCache& cache : trace.steps[layer]) {
      out.hidden[layer].push_back(cache.hidden);
    }
  }
  out.logits = trace.logits;
  return out;
}

double loss_and_gradients(const ModelParams& params,
                          std::span<const std::vector<double>> inputs,
                          std::span<const int> labels, ModelParams& gradients) {
  if (inputs.size() != labels.size() || inputs.empty()) {
    throw ContractError("loss_and_gradients: batch inputs/labels mismatch or empty");
  }
  const ModelConfig& cfg = params.config;
  for (int label : labels) {
    if (label < 0 || label >= cfg.num_classes) {
      throw ContractError("label " + std::to_string(label) + " outside [0, " +
                          std::to_string(cfg.num_classes) + ")");
    }
  }

  gradients = zeros_like(cfg);
  const double batch_scale = 1.0 / static_cast<double>(inputs.size());
  double loss = 0.0;
  std::vector<double> dlogits(cfg.num_classes);
  for (std::size_t n = 0; n < inputs.size(); ++n) {
    const ForwardTrace trace = run_forward(params, inputs[n]);
    const double lse = log_sum_exp(trace.logits);
    loss += (lse - trace.logits[labels[n]]) * batch_scale;
    for (int c = 0; c < cfg.num_classes; ++c) {
      dlogits[c] = std::exp(trace.logits[c] - lse) * batch_scale;
    }
    dlogits[labels[n]] -= batch_scale;
    backward_sample(params, trace, dlogits, gradients);
  }
  if (!std::isfinite(loss)) {
    throw NumericError("non-finite training loss (" + std::to_string(loss) +
                       ") over batch of " + std::to_string(inputs.size()));
  }
  return loss;
}

AdamState make_adam_state(const ModelConfig& config) {
  return AdamState{zeros_like(config), zeros_like(config), 0};
}

void adam_step(ModelParams& params, const ModelParams& gradients, AdamState& state) {
  const ModelConfig& cfg = params.config;
  state.timestep += 1;
  const double beta1 = cfg.adam_beta1;
  const double beta2 = cfg.adam_beta2;
  const double correction1 = 1.0 - std::pow(beta1, static_cast<double>(state.timestep));
  const double correction2 = 1.0 - std::pow(beta2, static_cast<double>(state.timestep));

  std::vector<TensorRef> p = tensor_refs(params);
  std::vector<TensorRef> g = tensor_refs(const_cast<ModelParams&>(gradients));
  std::vector<TensorRef> m = tensor_refs(state.first_moment);
  std::vector<TensorRef> v = tensor_refs(state.second_moment);
  for (std::size_t tensor = 0; tensor < p.size(); ++tensor) {
    const std::size_t count =
        static_cast<std::size_t>(p[tensor].rows) * p[tensor].cols;
    for (std::size_t i = 0; i < count; ++i) {
      const double grad = g[tensor].data[i];
      double& m1 = m[tensor].data[i];
      double& m2 = v[tensor].data[i];
      m1 = beta1 * m1 + (1.0 - beta1) * grad;
      m2 = beta2 * m2 + (1.0 - beta2) * grad * grad;
      const double m1_hat = m1 / correction1;
      const double m2_hat = m2 / correction2;
      p[tensor].data[i] -= cfg.learning_rate * m1_hat / (std::sqrt(m2_hat) + cfg.adam_eps);
    }
  }
}

metrics::PredictionSet predict_topk(const ModelParams& params,
                                    std::span<const double> input, int k) {
  const ModelConfig& cfg = params.config;
  if (k < 1 || k > cfg.num_classes) {
    throw ContractError("predict_topk k = " + std::to_string(k) +
                        " outside [1, " + std::to_string(cfg.num_classes) + "]");
  }
  const ForwardTrace trace = run_forward(params, input);
  std::vector<int> order(cfg.num_classes);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&trace](int a, int b) {
    if (trace.logits[a] != trace.logits[b]) return trace.logits[a] > trace.logits[b];
    return a < b;
  });
  order.resize(k);
  return metrics::PredictionSet(std::move(order), cfg.num_classes);
}

namespace {

double evaluate_loss(const ModelParams& params, const SampleSet& set) {
  double loss = 0.0;
  for (std::size_t n = 0; n < set.inputs.size(); ++n) {
    const ForwardTrace trace = run_forward(params, set.inputs[n]);
    loss += log_sum_exp(trace.logits) - trace.logits[set.labels[n]];
  }
  return loss / static_cast<double>(set.inputs.size());
}

}  // namespace

TrainResult train(const SampleSet& train_set, const SampleSet& val_set,
                  const ModelConfig& config, const metrics::MetricConfig& metric_cfg,
                  const EpochCallback& on_epoch) {
  config.validate();
  metric_cfg.validate();
  if (train_set.inputs.empty() || val_set.inputs.empty()) {
    throw ConfigError("train/validation split is empty");
  }
  if (train_set.inputs.size() != train_set.labels.size() ||
      val_set.inputs.size() != val_set.labels.size()) {
    throw ContractError("sample set inputs/labels length mismatch");
  }

  ModelParams params = zeros_like(config);
  Rng init_rng(derive_seed(config.seed, 0));
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.hidden_dim));
  for (TensorRef& ref : tensor_refs(params)) {
    const std::size_t count = static_cast<std::size_t>(ref.rows) * ref.cols;
    for (std::size_t i = 0; i < count; ++i) ref.data[i] = init_rng.uniform(-bound, bound);
  }

  Rng shuffle_rng(derive_seed(config.seed, 1));
  AdamState adam = make_adam_state(config);
  ModelParams gradients = zeros_like(config);

  const int eval_k = std::min(metric_cfg.top_k, config.num_classes);
  metrics::MetricConfig eval_cfg = metric_cfg;
  eval_cfg.top_k = eval_k;

  TrainResult result;
  result.params = params;
  double best_dba = -1.0;

  std::vector<std::size_t> order(train_set.inputs.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<std::vector<double>> batch_inputs;
  std::vector<int> batch_labels;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch_inputs.clear();
      batch_labels.clear();
      for (std::size_t i = start; i < stop; ++i) {
        batch_inputs.push_back(train_set.inputs[order[i]]);
        batch_labels.push_back(train_set.labels[order[i]]);
      }
      const double batch_loss =
          loss_and_gradients(params, batch_inputs, batch_labels, gradients);
      adam_step(params, gradients, adam);
      epoch_loss += batch_loss * static_cast<double>(stop - start);
      seen += stop - start;
    }

    EpochStats stats;
    stats.train_loss = epoch_loss / static_cast<double>(seen);
    stats.val_loss = evaluate_loss(params, val_set);
    std::vector<metrics::PredictionSet> predictions;
    predictions.reserve(val_set.inputs.size());
    for (const std::vector<double>& input : val_set.inputs) {
      predictions.push_back(predict_topk(params, input, eval_k));
    }
    stats.val_top1 = metrics::top_k_accuracy(predictions, val_set.labels, 1);
    stats.val_dba = metrics::dba_score(predictions, val_set.labels, eval_cfg).dba_score;
    result.log.epochs.push_back(stats);

    if (stats.val_dba > best_dba) {
      best_dba = stats.val_dba;
      result.params = params;
      result.log.selected_epoch = epoch;
    }
    if (on_epoch) on_epoch(epoch, params, stats);
  }
  return result;
}

namespace {

void write_double_row(std::ostream& out, const double* row, int cols) {
  char buf[32];
  for (int c = 0; c < cols; ++c) {
    std::snprintf(buf, sizeof(buf), "%.17g", row[c]);
    out << (c == 0 ? "" : " ") << buf;
  }
  out << '\n';
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const ModelConfig& cfg = checkpoint.params.config;
  out << "beamlab_checkpoint v1\n";
  out << "config input_dim " << cfg.input_dim << '\n';
  out << "config seq_len " << cfg.seq_len << '\n';
  out << "config hidden_dim " << cfg.hidden_dim << '\n';
  out << "config num_gru_layers " << cfg.num_gru_layers << '\n';
  out << "config num_classes " << cfg.num_classes << '\n';
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.learning_rate);
  out << "config learning_rate " << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.adam_beta1);
  out << "config adam_beta1 " << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.adam_beta2);
  out << "config adam_beta2 " << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.adam_eps);
  out << "config adam_eps " << buf << '\n';
  out << "config batch_size " << cfg.batch_size << '\n';
  out << "config epochs " << cfg.epochs << '\n';
  out << "config seed " << cfg.seed << '\n';
  out << "meta selected_epoch " << checkpoint.selected_epoch << '\n';
  out << "stats_begin\n";
  geodesy::write_stats(out, checkpoint.stats);
  out << "stats_end\n";
  std::vector<TensorRef> refs = tensor_refs(const_cast<ModelParams&>(checkpoint.params));
  for (const TensorRef& ref : refs) {
    out << "tensor " << ref.name << ' ' << ref.rows << ' ' << ref.cols << '\n';
    for (int r = 0; r < ref.rows; ++r) {
      write_double_row(out, ref.data + static_cast<std::size_t>(r) * ref.cols, ref.cols);
    }
  }
  out << "end\n";
  if (!out) throw IoError("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "beamlab_checkpoint v1") {
    throw IoError("checkpoint '" + path + "': bad or missing header");
  }

  ModelConfig cfg;
  Checkpoint checkpoint;
  std::ostringstream stats_text;
  bool have_stats = false;
  std::string first_tensor_header;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string key;
    row >> key;
    if (key == "config") {
      std::string field;
      row >> field;
      if (field == "input_dim") row >> cfg.input_dim;
      else if (field == "seq_len") row >> cfg.seq_len;
      else if (field == "hidden_dim") row >> cfg.hidden_dim;
      else if (field == "num_gru_layers") row >> cfg.num_gru_layers;
      else if (field == "num_classes") row >> cfg.num_classes;
      else if (field == "learning_rate") row >> cfg.learning_rate;
      else if (field == "adam_beta1") row >> cfg.adam_beta1;
      else if (field == "adam_beta2") row >> cfg.adam_beta2;
      else if (field == "adam_eps") row >> cfg.adam_eps;
      else if (field == "batch_size") row >> cfg.batch_size;
      else if (field == "epochs") row >> cfg.epochs;
      else if (field == "seed") row >> cfg.seed;
      else throw IoError("checkpoint: unknown config field '" + field + "'");
      if (row.fail()) throw IoError("checkpoint: malformed config line '" + line + "'");
    } else if (key == "meta") {
      std::string field;
      row >> field >> checkpoint.selected_epoch;
    } else if (key == "stats_begin") {
      while (std::getline(in, line) && line != "stats_end") {
        stats_text << line << '\n';
      }
      if (line != "stats_end") throw IoError("checkpoint: unterminated stats block");
      have_stats = true;
    } else if (key == "tensor") {
      first_tensor_header = line;
      break;
    } else {
      throw IoError("checkpoint: unexpected line '" + line + "'");
    }
  }
  if (!have_stats) throw IoError("checkpoint: missing normalization stats block");
  if (first_tensor_header.empty()) throw IoError("checkpoint: no tensors found");

  {
    std::istringstream stats_in(stats_text.str());
    checkpoint.stats = geodesy::read_stats(stats_in);
  }

  checkpoint.params = zeros_like(cfg);
  std::vector<TensorRef> refs = tensor_refs(checkpoint.params);
  bool first = true;
  for (TensorRef& ref : refs) {
    std::string name;
    int rows = 0, cols = 0;
    if (first) {
      std::istringstream header(first_tensor_header);
      std::string word;
      if (!(header >> word >> name >> rows >> cols)) {
        throw IoError("checkpoint: malformed tensor header");
      }
      first = false;
    } else {
      std::string word;
      if (!(in >> word) || word != "tensor") {
        throw IoError("checkpoint: expected tensor '" + ref.name + "'");
      }
      if (!(in >> name >> rows >> cols)) {
        throw IoError("checkpoint: malformed tensor header");
      }
    }
    if (name != ref.name || rows != ref.rows || cols != ref.cols) {
      throw ContractError("checkpoint: tensor mismatch, expected " + ref.name + " " +
                          std::to_string(ref.rows) + "x" + std::to_string(ref.cols) +
                          ", found " + name + " " + std::to_string(rows) + "x" +
                          std::to_string(cols));
    }
    const std::size_t count = static_cast<std::size_t>(rows) * cols;
    for (std::size_t i = 0; i < count; ++i) {
      if (!(in >> ref.data[i])) {
        throw IoError("checkpoint: truncated tensor data in " + ref.name);
      }
    }
  }
  std::string tail;
  if (!(in >> tail) || tail != "end") {
    throw IoError("checkpoint: missing end marker");
  }
  return checkpoint;
}

}  // namespace beamlab::model
