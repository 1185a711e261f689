#include "ssmlab/probe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "ssmlab/metrics.hpp"
#include "ssmlab/parallel.hpp"

namespace ssmlab {
namespace {

constexpr const char* kCheckpointFormat = "ssm-probe-checkpoint";
constexpr int kCheckpointVersion = 1;

std::mt19937_64 stream(std::int64_t seed, std::uint32_t purpose) {
  const auto s = static_cast<std::uint64_t>(seed);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32), purpose};
  return std::mt19937_64(seq);
}

void check_cache(const ProbeParams& p, const ProbeCache& c, std::span<const double> grad_logits) {
  if (c.input_dim != p.input_dim || c.hidden != p.hidden || c.num_classes != p.num_classes ||
      c.xhat.size() != p.input_dim || c.act.size() != p.hidden) {
    throw UsageError("probe_backward: cache does not match probe parameters");
  }
  if (grad_logits.size() != p.num_classes) {
    throw UsageError("probe_backward: grad_logits has length " +
                     std::to_string(grad_logits.size()) + ", expected " +
                     std::to_string(p.num_classes));
  }
}

// Shared backward; `dx` may be null when the input gradient is not needed.
void backward_into(const ProbeParams& p, const ProbeCache& c, std::span<const double> g,
                   ProbeParams& acc, Vector* dx) {
  const std::size_t d = p.input_dim;
  const std::size_t hdim = p.hidden;
  const std::size_t C = p.num_classes;

  Vector d_act(hdim, 0.0);
  for (std::size_t k = 0; k < C; ++k) {
    acc.b2[k] += g[k];
    auto w2_row = p.w2.row(k);
    auto dw2_row = acc.w2.row(k);
    for (std::size_t j = 0; j < hdim; ++j) {
      dw2_row[j] += g[k] * c.act[j];
      d_act[j] += g[k] * w2_row[j];
    }
  }

  Vector d_ln(d, 0.0);
  for (std::size_t j = 0; j < hdim; ++j) {
    const double d_pre = c.pre_act[j] > 0.0 ? d_act[j] * c.scale[j] : 0.0;
    if (d_pre == 0.0) continue;
    acc.b1[j] += d_pre;
    auto w1_row = p.w1.row(j);
    auto dw1_row = acc.w1.row(j);
    for (std::size_t i = 0; i < d; ++i) {
      dw1_row[i] += d_pre * c.ln_out[i];
      d_ln[i] += d_pre * w1_row[i];
    }
  }

  double mean_dxhat = 0.0;
  double mean_dxhat_xhat = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    acc.ln_gain[i] += d_ln[i] * c.xhat[i];
    acc.ln_bias[i] += d_ln[i];
    const double dxhat = d_ln[i] * p.ln_gain[i];
    mean_dxhat += dxhat;
    mean_dxhat_xhat += dxhat * c.xhat[i];
  }
  if (dx == nullptr) return;
  mean_dxhat /= static_cast<double>(d);
  mean_dxhat_xhat /= static_cast<double>(d);
  dx->assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double dxhat = d_ln[i] * p.ln_gain[i];
    (*dx)[i] = c.rstd * (dxhat - mean_dxhat - c.xhat[i] * mean_dxhat_xhat);
  }
}

void zero(ProbeParams& p) {
  for (auto t : p.tensors()) std::fill(t.begin(), t.end(), 0.0);
}

std::size_t infer_classes(const LabeledVectorSet& train, const LabeledVectorSet& val) {
  int max_label = 1;
  for (int l : train.labels) max_label = std::max(max_label, l);
  for (int l : val.labels) max_label = std::max(max_label, l);
  return static_cast<std::size_t>(max_label) + 1;
}

std::vector<int> predict_all(const ProbeParams& p, const std::vector<Vector>& data) {
  std::vector<int> out;
  out.reserve(data.size());
  for (const auto& x : data) out.push_back(argmax(probe_forward(p, x).logits));
  return out;
}

SeedRun train_one_seed(const LabeledVectorSet& train, const LabeledVectorSet& val,
                          const TrainConfig& cfg, TaskMetric metric, std::size_t num_classes,
                          std::int64_t seed) {
  std::mt19937_64 init_rng = stream(seed, 0);
  std::mt19937_64 shuffle_rng = stream(seed, 1);
  std::mt19937_64 dropout_rng = stream(seed, 2);
  std::bernoulli_distribution keep_unit(1.0 - cfg.dropout_p);

  ProbeParams params = init_probe_params(train.dim(), num_classes, init_rng(), cfg.hidden);
  AdamState adam{ProbeParams::zeros(train.dim(), num_classes, cfg.hidden),
                 ProbeParams::zeros(train.dim(), num_classes, cfg.hidden), 0};
  ProbeParams grads = ProbeParams::zeros(train.dim(), num_classes, cfg.hidden);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  DropoutMask mask{Vector(cfg.hidden, 1.0), cfg.dropout_p};

  std::optional<Checkpoint> best;
  std::vector<double> history;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cosine_lr(cfg.lr, epoch, cfg.epochs);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      zero(grads);
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t idx = order[b];
        for (double& k : mask.keep) k = keep_unit(dropout_rng) ? 1.0 : 0.0;
        const auto fwd = probe_forward(params, train.vectors[idx],
                                       cfg.dropout_p > 0.0 ? &mask : nullptr);
        const auto loss = softmax_cross_entropy(fwd.logits, train.labels[idx]);
        backward_into(params, fwd.cache, loss.grad, grads, nullptr);
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (auto t : grads.tensors())
        for (double& v : t) v *= inv;
      adamw_step(params, grads, adam, cfg, lr);
    }

    const auto predicted = predict_all(params, val.vectors);
    const double value = task_metric_value(metric, val.labels, predicted, num_classes);
    if (!std::isfinite(value)) {
      throw NumericError("non-finite validation metric at epoch " + std::to_string(epoch + 1));
    }
    history.push_back(value);
    if (!best || value > best->val_metric) {
      best = Checkpoint{params, epoch + 1, value, seed, adam};
    }
  }
  Checkpoint last{params, cfg.epochs, history.back(), seed, adam};
  return SeedRun{std::move(*best), std::move(last), std::move(history)};
}

nlohmann::json matrix_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  if (j.size() != rows) throw ConfigError("probe parameter matrix has wrong row count");
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = j.at(r).get<Vector>();
    if (row.size() != cols) throw ConfigError("probe parameter matrix has wrong column count");
    std::copy(row.begin(), row.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

ProbeParams ProbeParams::zeros(std::size_t input_dim, std::size_t num_classes,
                               std::size_t hidden) {
  ProbeParams p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  p.num_classes = num_classes;
  p.ln_gain = Vector(input_dim, 0.0);
  p.ln_bias = Vector(input_dim, 0.0);
  p.w1 = Matrix(hidden, input_dim);
  p.b1 = Vector(hidden, 0.0);
  p.w2 = Matrix(num_classes, hidden);
  p.b2 = Vector(num_classes, 0.0);
  return p;
}

void ProbeParams::validate() const {
  if (input_dim == 0 || hidden == 0 || num_classes == 0) {
    throw ConfigError("probe dimensions must be positive");
  }
  require_size(ln_gain, input_dim, "ln_gain");
  require_size(ln_bias, input_dim, "ln_bias");
  require_shape(w1, hidden, input_dim, "w1");
  require_size(b1, hidden, "b1");
  require_shape(w2, num_classes, hidden, "w2");
  require_size(b2, num_classes, "b2");
  for (auto t : tensors())
    if (!all_finite(t)) throw NumericError("probe parameters contain non-finite values");
}

std::vector<std::span<double>> ProbeParams::tensors() {
  return {ln_gain, ln_bias, w1.data(), b1, w2.data(), b2};
}

std::vector<std::span<const double>> ProbeParams::tensors() const {
  return {ln_gain, ln_bias, w1.data(), b1, w2.data(), b2};
}

ProbeParams init_probe_params(std::size_t input_dim, std::size_t num_classes,
                              std::uint64_t seed, std::size_t hidden) {
  ProbeParams p = ProbeParams::zeros(input_dim, num_classes, hidden);
  std::fill(p.ln_gain.begin(), p.ln_gain.end(), 1.0);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](std::span<double> t, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t) v = dist(rng);
  };
  fill(p.w1.data(), input_dim);
  fill(p.b1, input_dim);
  fill(p.w2.data(), hidden);
  fill(p.b2, hidden);
  return p;
}

ProbeForward probe_forward(const ProbeParams& p, std::span<const double> x,
                           const DropoutMask* dropout) {
  const std::size_t d = p.input_dim;
  if (x.size() != d) {
    throw UsageError("probe input has dimension " + std::to_string(x.size()) + ", expected " +
                     std::to_string(d));
  }
  if (!all_finite(x)) throw NumericError("probe input contains non-finite values");

  ProbeForward out;
  ProbeCache& c = out.cache;
  c.input_dim = d;
  c.hidden = p.hidden;
  c.num_classes = p.num_classes;

  // Mean shifted by x[0]: exact for constant inputs, so c * 1 normalizes to 0.
  double shift_sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) shift_sum += x[i] - x[0];
  const double mean = x[0] + shift_sum / static_cast<double>(d);
  double var = 0.0;
  for (std::size_t i = 0; i < d; ++i) var += (x[i] - mean) * (x[i] - mean);
  var /= static_cast<double>(d);
  c.rstd = 1.0 / std::sqrt(var + kLayerNormEps);

  c.xhat.resize(d);
  c.ln_out.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    c.xhat[i] = (x[i] - mean) * c.rstd;
    c.ln_out[i] = p.ln_gain[i] * c.xhat[i] + p.ln_bias[i];
  }

  c.pre_act = matvec(p.w1, c.ln_out);
  c.scale.assign(p.hidden, 1.0);
  if (dropout != nullptr) {
    if (dropout->keep.size() != p.hidden) throw UsageError("dropout mask has wrong length");
    const double inv_keep = 1.0 / (1.0 - dropout->p);
    for (std::size_t j = 0; j < p.hidden; ++j) c.scale[j] = dropout->keep[j] * inv_keep;
  }
  c.act.resize(p.hidden);
  for (std::size_t j = 0; j < p.hidden; ++j) {
    c.pre_act[j] += p.b1[j];
    c.act[j] = (c.pre_act[j] > 0.0 ? c.pre_act[j] : 0.0) * c.scale[j];
  }

  out.logits = matvec(p.w2, c.act);
  for (std::size_t k = 0; k < p.num_classes; ++k) out.logits[k] += p.b2[k];
  if (!all_finite(out.logits)) throw NumericError("probe produced non-finite logits");
  return out;
}

ProbeGradients probe_backward(const ProbeParams& p, const ProbeCache& cache,
                              std::span<const double> grad_logits) {
  check_cache(p, cache, grad_logits);
  ProbeGradients g{ProbeParams::zeros(p.input_dim, p.num_classes, p.hidden), {}};
  backward_into(p, cache, grad_logits, g.params, &g.input);
  return g;
}

void probe_backward_accumulate(const ProbeParams& p, const ProbeCache& cache,
                               std::span<const double> grad_logits, ProbeParams& accum) {
  check_cache(p, cache, grad_logits);
  if (accum.input_dim != p.input_dim || accum.hidden != p.hidden ||
      accum.num_classes != p.num_classes) {
    throw UsageError("gradient accumulator does not match probe parameters");
  }
  backward_into(p, cache, grad_logits, accum, nullptr);
}

LossAndGrad softmax_cross_entropy(std::span<const double> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw InputError("label " + std::to_string(label) + " out of range");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - peak);
  const double log_z = std::log(z) + peak;
  LossAndGrad r;
  r.loss = log_z - logits[static_cast<std::size_t>(label)];
  r.grad.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) r.grad[k] = std::exp(logits[k] - log_z);
  r.grad[static_cast<std::size_t>(label)] -= 1.0;
  return r;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("dropout_p must be in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (hidden < 1) throw ConfigError("hidden width must be >= 1");
}

double cosine_lr(double base_lr, std::size_t epoch, std::size_t epochs) {
  const double phase = std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(epochs);
  return 0.5 * base_lr * (1.0 + std::cos(phase));
}

void adamw_step(ProbeParams& params, const ProbeParams& grads, AdamState& state,
                const TrainConfig& cfg, double lr) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  auto p_t = params.tensors();
  auto g_t = grads.tensors();
  auto m_t = state.m.tensors();
  auto v_t = state.v.tensors();
  for (std::size_t k = 0; k < p_t.size(); ++k) {
    for (std::size_t i = 0; i < p_t[k].size(); ++i) {
      double& w = p_t[k][i];
      const double g = g_t[k][i];
      w -= lr * cfg.weight_decay * w;
      m_t[k][i] = cfg.beta1 * m_t[k][i] + (1.0 - cfg.beta1) * g;
      v_t[k][i] = cfg.beta2 * v_t[k][i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m_t[k][i] / bc1;
      const double v_hat = v_t[k][i] / bc2;
      w -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

double task_metric_value(TaskMetric metric, std::span<const int> truth,
                         std::span<const int> predicted, std::size_t num_classes) {
  const auto cm = confusion(truth, predicted, num_classes);
  return metric == TaskMetric::mcc ? mcc(cm) : accuracy(cm);
}

std::vector<SeedRun> train_probe_runs(const LabeledVectorSet& train,
                                     const LabeledVectorSet& val, const TrainConfig& cfg,
                                     TaskMetric metric) {
  cfg.validate();
  if (train.size() == 0 || val.size() == 0) {
    throw InputError("train_probe: train and validation sets must be non-empty");
  }
  if (train.dim() != val.dim()) {
    throw InputError("train_probe: train dim " + std::to_string(train.dim()) +
                     " differs from validation dim " + std::to_string(val.dim()));
  }
  const std::size_t num_classes = cfg.num_classes != 0 ? cfg.num_classes
                                                       : infer_classes(train, val);
  train.validate(num_classes);
  val.validate(num_classes);
  if (metric == TaskMetric::mcc && num_classes != 2) {
    throw ConfigError("mcc selection requires exactly two classes");
  }
  return parallel_map(cfg.seeds.size(), cfg.threads, [&](std::size_t i) {
    return train_one_seed(train, val, cfg, metric, num_classes, cfg.seeds[i]);
  });
}

std::vector<Checkpoint> train_probe(const LabeledVectorSet& train, const LabeledVectorSet& val,
                                    const TrainConfig& cfg, TaskMetric metric) {
  auto runs = train_probe_runs(train, val, cfg, metric);
  std::vector<Checkpoint> best;
  best.reserve(runs.size());
  for (auto& r : runs) best.push_back(std::move(r.best));
  return best;
}

int argmax(std::span<const double> logits) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < logits.size(); ++k)
    if (logits[k] > logits[best]) best = k;
  return static_cast<int>(best);
}

ProbeEvaluation evaluate_probe(const Checkpoint& ckpt, const std::vector<Vector>& data) {
  if (data.empty()) throw InputError("evaluate_probe: no samples");
  ProbeEvaluation eval;
  eval.predictions.reserve(data.size());
  eval.logits.reserve(data.size());
  for (const auto& x : data) {
    auto fwd = probe_forward(ckpt.params, x);
    eval.predictions.push_back(argmax(fwd.logits));
    eval.logits.push_back(std::move(fwd.logits));
  }
  return eval;
}

nlohmann::json to_json(const ProbeParams& p) {
  return {{"input_dim", p.input_dim}, {"hidden", p.hidden},   {"num_classes", p.num_classes},
          {"ln_gain", p.ln_gain},     {"ln_bias", p.ln_bias}, {"w1", matrix_json(p.w1)},
          {"b1", p.b1},               {"w2", matrix_json(p.w2)}, {"b2", p.b2}};
}

ProbeParams probe_params_from_json(const nlohmann::json& j) {
  ProbeParams p = ProbeParams::zeros(j.at("input_dim").get<std::size_t>(),
                                     j.at("num_classes").get<std::size_t>(),
                                     j.at("hidden").get<std::size_t>());
  p.ln_gain = j.at("ln_gain").get<Vector>();
  p.ln_bias = j.at("ln_bias").get<Vector>();
  p.w1 = matrix_from_json(j.at("w1"), p.hidden, p.input_dim);
  p.b1 = j.at("b1").get<Vector>();
  p.w2 = matrix_from_json(j.at("w2"), p.num_classes, p.hidden);
  p.b2 = j.at("b2").get<Vector>();
  p.validate();
  return p;
}

nlohmann::json to_json(const Checkpoint& ckpt) {
  nlohmann::json doc = {{"format", kCheckpointFormat},
                        {"version", kCheckpointVersion},
                        {"seed", ckpt.seed},
                        {"epoch", ckpt.epoch},
                        {"val_metric", ckpt.val_metric},
                        {"params", to_json(ckpt.params)}};
  if (ckpt.optimizer) {
    doc["optimizer"] = {{"step", ckpt.optimizer->step},
                        {"m", to_json(ckpt.optimizer->m)},
                        {"v", to_json(ckpt.optimizer->v)}};
  }
  return doc;
}

Checkpoint checkpoint_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format", std::string{}) != kCheckpointFormat) {
      throw ConfigError("not an ssm-probe-checkpoint document");
    }
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw ConfigError("unsupported checkpoint version " + doc.at("version").dump());
    }
    Checkpoint c;
    c.seed = doc.at("seed").get<std::int64_t>();
    c.epoch = doc.at("epoch").get<std::size_t>();
    c.val_metric = doc.at("val_metric").get<double>();
    c.params = probe_params_from_json(doc.at("params"));
    if (doc.contains("optimizer")) {
      const auto& o = doc.at("optimizer");
      c.optimizer = AdamState{probe_params_from_json(o.at("m")), probe_params_from_json(o.at("v")),
                              o.at("step").get<std::uint64_t>()};
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_json(ckpt).dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(doc);
}

}  // namespace ssmlab
