#pragma once

// Frozen-feature probe head:
//   LayerNorm(d) -> Linear(d, 256) -> ReLU -> Dropout(p) -> Linear(256, C)
// with hand-written gradients, AdamW, and a per-epoch cosine learning-rate
// schedule.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "ssmlab/dataset.hpp"
#include "ssmlab/tensor.hpp"

namespace ssmlab {

inline constexpr std::size_t kProbeHidden = 256;
inline constexpr double kLayerNormEps = 1e-5;

struct ProbeParams {
  std::size_t input_dim = 0;
  std::size_t hidden = kProbeHidden;
  std::size_t num_classes = 0;
  Vector ln_gain;  // d
  Vector ln_bias;  // d
  Matrix w1;       // hidden x d
  Vector b1;       // hidden
  Matrix w2;       // C x hidden
  Vector b2;       // C

  static ProbeParams zeros(std::size_t input_dim, std::size_t num_classes,
                           std::size_t hidden = kProbeHidden);
  void validate() const;

  // Every tensor in a fixed order: ln_gain, ln_bias, w1, b1, w2, b2.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;

  bool operator==(const ProbeParams&) const = default;
};

// Uniform in +-1/sqrt(fan_in) for both linear layers (weights and biases),
// LayerNorm gain 1 and bias 0.
ProbeParams init_probe_params(std::size_t input_dim, std::size_t num_classes,
                              std::uint64_t seed, std::size_t hidden = kProbeHidden);

struct DropoutMask {
  Vector keep;  // 0 or 1 per hidden unit
  double p = 0.1;
};

struct ProbeCache {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  std::size_t num_classes = 0;
  Vector xhat;     // normalized input
  double rstd = 0;
  Vector ln_out;   // gain * xhat + bias
  Vector pre_act;  // w1 ln_out + b1
  Vector scale;    // per-unit dropout multiplier (1 at evaluation)
  Vector act;      // relu(pre_act) * scale
};

struct ProbeForward {
  Vector logits;
  ProbeCache cache;
};

// Evaluation mode when `dropout` is null.
ProbeForward probe_forward(const ProbeParams& p, std::span<const double> x,
                           const DropoutMask* dropout = nullptr);

struct ProbeGradients {
  ProbeParams params;  // same shapes as the forward parameters
  Vector input;
};

// Gradients of <grad_logits, logits> with respect to every parameter and the
// input. UsageError if the cache shapes do not match `p`.
ProbeGradients probe_backward(const ProbeParams& p, const ProbeCache& cache,
                              std::span<const double> grad_logits);

// Adds the parameter gradients into `accum` without touching the input
// gradient.
void probe_backward_accumulate(const ProbeParams& p, const ProbeCache& cache,
                               std::span<const double> grad_logits, ProbeParams& accum);

struct LossAndGrad {
  double loss = 0.0;
  Vector grad;  // d loss / d logits
};

LossAndGrad softmax_cross_entropy(std::span<const double> logits, int label);

enum class TaskMetric { accuracy, mcc };

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double lr = 2e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double dropout_p = 0.1;
  std::size_t max_seq_len = 128;
  std::vector<std::int64_t> seeds{42, 43, 44};
  std::size_t hidden = kProbeHidden;
  std::size_t num_classes = 0;  // 0: infer from labels (at least 2)
  std::size_t threads = 1;      // seeds trained in parallel up to this many

  void validate() const;
};

// Learning rate used throughout epoch `epoch` (0-based):
// lr * (1 + cos(pi * epoch / epochs)) / 2.
double cosine_lr(double base_lr, std::size_t epoch, std::size_t epochs);

struct AdamState {
  ProbeParams m;
  ProbeParams v;
  std::uint64_t step = 0;
};

struct Checkpoint {
  ProbeParams params;
  std::size_t epoch = 0;  // 1-based
  double val_metric = 0.0;
  std::int64_t seed = 0;
  std::optional<AdamState> optimizer;
};

// One AdamW update with decoupled weight decay.
void adamw_step(ProbeParams& params, const ProbeParams& grads, AdamState& state,
                const TrainConfig& cfg, double lr);

double task_metric_value(TaskMetric metric, std::span<const int> truth,
                         std::span<const int> predicted, std::size_t num_classes);

// Trains one probe per seed and returns each seed's best validation
// checkpoint (ties keep the earlier epoch), in seed order.
std::vector<Checkpoint> train_probe(const LabeledVectorSet& train, const LabeledVectorSet& val,
                                    const TrainConfig& cfg, TaskMetric metric);

struct SeedRun {
  Checkpoint best;
  Checkpoint last;                  // parameters after the final epoch
  std::vector<double> val_history;  // validation metric after each epoch
};

// train_probe with the full per-seed record.
std::vector<SeedRun> train_probe_runs(const LabeledVectorSet& train,
                                      const LabeledVectorSet& val, const TrainConfig& cfg,
                                      TaskMetric metric);

struct ProbeEvaluation {
  std::vector<int> predictions;
  std::vector<Vector> logits;
};

// Dropout-free argmax; ties resolve to the lowest class index.
ProbeEvaluation evaluate_probe(const Checkpoint& ckpt, const std::vector<Vector>& data);

int argmax(std::span<const double> logits);

nlohmann::json to_json(const ProbeParams& p);
ProbeParams probe_params_from_json(const nlohmann::json& j);
// Versioned document {"format": "ssm-probe-checkpoint", "version": 1, ...}.
nlohmann::json to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ssmlab
