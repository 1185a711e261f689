#include "ssmlab/checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <utility>

#include "ssmlab/extraction.hpp"
#include "ssmlab/harness.hpp"
#include "ssmlab/probe.hpp"
#include "ssmlab/ssm.hpp"

namespace ssmlab {
namespace {

constexpr std::size_t kDModel = 8;
constexpr std::size_t kInner = 16;
constexpr std::size_t kState = 4;

std::vector<Vector> random_tokens(std::size_t len, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> seq(len, Vector(dim));
  for (auto& u : seq)
    for (double& v : u) v = normal(rng);
  return seq;
}

double max_abs_diff(const ScanResult& a, const ScanResult& b) {
  if (a.outputs.size() != b.outputs.size()) return INFINITY;
  double worst = 0.0;
  auto cmp = [&worst](std::span<const double> x, std::span<const double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
  };
  for (std::size_t t = 0; t < a.outputs.size(); ++t) {
    cmp(a.outputs[t].y, b.outputs[t].y);
    cmp(a.outputs[t].h_next.h.data(), b.outputs[t].h_next.h.data());
  }
  cmp(a.final_state.h.data(), b.final_state.h.data());
  return worst;
}

bool bit_identical(const ScanResult& a, const ScanResult& b) {
  if (a.outputs.size() != b.outputs.size() || !(a.final_state == b.final_state)) return false;
  for (std::size_t t = 0; t < a.outputs.size(); ++t) {
    if (a.outputs[t].y != b.outputs[t].y || !(a.outputs[t].h_next == b.outputs[t].h_next)) {
      return false;
    }
  }
  return true;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

CheckResult chunk_carry(const BatteryConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  const auto params = random_layer_params(kDModel, kInner, kState, rng());
  const auto seq = random_tokens(cfg.max_patch_len, kDModel, rng);
  const auto reference = full_scan(params, seq);
  double worst = 0.0;
  for (std::size_t p = 1; p <= cfg.max_patch_len; ++p) {
    worst = std::max(worst, max_abs_diff(reference,
                                         chunked_scan(params, seq, p, ScanState::zeros(kInner, kState))));
  }
  return {"chunk-carry equivalence", worst == 0.0, worst,
          "patch_len 1.." + std::to_string(cfg.max_patch_len) + ", max abs diff " + fmt(worst)};
}

CheckResult eta_zero(const BatteryConfig& cfg) {
  std::mt19937_64 rng(cfg.seed + 1);
  std::size_t mismatches = 0;
  for (int i = 0; i < 20; ++i) {
    const auto params = random_layer_params(kDModel, kInner, kState, rng());
    const auto seq = random_tokens(12, kDModel, rng);
    if (!bit_identical(full_scan(params, seq), ortho_full_scan(params, seq, {0.0, 1e-12}))) {
      ++mismatches;
    }
  }
  return {"eta=0 reduction", mismatches == 0, static_cast<double>(mismatches),
          std::to_string(mismatches) + " of 20 instances differ"};
}

CheckResult zero_state(const BatteryConfig& cfg) {
  std::mt19937_64 rng(cfg.seed + 2);
  const auto params = random_layer_params(kDModel, kInner, kState, rng());
  const auto u = random_tokens(1, kDModel, rng).front();
  const auto zero = ScanState::zeros(kInner, kState);
  const auto vanilla = scan_step(params, zero, u);
  bool ok = true;
  for (double eta : {0.25, 0.5, 1.0}) {
    const auto ortho = ortho_scan_step(params, zero, u, {eta, 1e-12});
    ok = ok && ortho.y == vanilla.y && ortho.h_next == vanilla.h_next;
  }
  return {"first-token vanishing", ok, ok ? 0.0 : 1.0, "eta in {0.25, 0.5, 1}"};
}

CheckResult eta_one(const BatteryConfig& cfg) {
  std::mt19937_64 rng(cfg.seed + 3);
  const auto params = random_layer_params(kDModel, kInner, kState, rng());
  const auto seq = random_tokens(16, kDModel, rng);
  OrthoAudit audit;
  ortho_full_scan(params, seq, {1.0, 1e-12}, &audit);
  const bool ok = audit.rows_checked > 0 && audit.max_relative_inner <= 1e-10;
  return {"eta=1 orthogonality", ok, audit.max_relative_inner,
          std::to_string(audit.rows_checked) + " rows, max |<h,w>|/(|h||w|) " +
              fmt(audit.max_relative_inner)};
}

CheckResult padding(const BatteryConfig& cfg) {
  const auto params = init_layer_params(kDModel, kInner, kState, cfg.seed + 4);
  const auto batch = gen_token_sequences(20, 6, {3, 11}, kDModel, cfg.seed + 4);
  std::size_t violations = 0;
  for (Strategy s : {Strategy::patched, Strategy::mean_pool, Strategy::final_state,
                     Strategy::ortho_patched}) {
    ExtractionConfig ec{s, 4, BoundaryPool::mean_of_boundaries, {0.5, 1e-12}};
    for (const auto& ids : batch.token_ids) {
      const auto base = extract(params, embed_tokens(batch.embedding, ids, ids.size()), ec);
      for (std::size_t pad = 1; pad <= 8; ++pad) {
        const auto padded = extract(params, embed_tokens(batch.embedding, ids, ids.size() + pad), ec);
        if (padded.values != base.values) ++violations;
      }
    }
  }
  return {"padding invariance", violations == 0, static_cast<double>(violations),
          "4 strategies x 6 sequences x 1..8 pads"};
}

CheckResult decay(const BatteryConfig& cfg) {
  std::mt19937_64 rng(cfg.seed + 5);
  const auto params = random_layer_params(kDModel, kInner, kState, rng());
  auto seq = random_tokens(6, kDModel, rng);
  const std::size_t active = seq.size();
  seq.resize(active + 20, Vector(kDModel, 0.0));
  const auto scan = full_scan(params, seq);
  bool ok = true;
  double prev = INFINITY;
  for (std::size_t t = active; t < seq.size(); ++t) {
    const double n = std::sqrt(squared_norm(scan.outputs[t].h_next.h.data()));
    ok = ok && n <= prev;
    prev = n;
  }
  return {"decay contraction", ok, prev, "20-step zero-input tail, final |h| " + fmt(prev)};
}

CheckResult determinism(const BatteryConfig& cfg) {
  std::mt19937_64 rng(cfg.seed + 6);
  const auto params = random_layer_params(kDModel, kInner, kState, rng());
  const auto seq = random_tokens(10, kDModel, rng);
  const bool ok = bit_identical(ortho_full_scan(params, seq, {0.5, 1e-12}),
                                ortho_full_scan(params, seq, {0.5, 1e-12})) &&
                  bit_identical(full_scan(params, seq), full_scan(params, seq));
  return {"determinism", ok, ok ? 0.0 : 1.0, "repeated scans bit-identical"};
}

CheckResult gradients(const BatteryConfig& cfg) {
  double worst = 0.0;
  for (std::size_t i = 0; i < cfg.gradient_instances; ++i) {
    worst = std::max(worst, probe_gradient_max_error(16, 2 + i % 2, cfg.seed + 100 + i));
  }
  return {"probe gradient exactness", worst <= 1e-5, worst,
          std::to_string(cfg.gradient_instances) + " instances, max relative error " + fmt(worst)};
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

namespace {

// Independent extended-precision evaluation of the probe loss; tensors are in
// ProbeParams::tensors() order.
long double reference_loss(const std::vector<std::vector<long double>>& t, std::size_t dim,
                           std::size_t hidden, std::size_t classes, const Vector& x,
                           const Vector& keep, double p_drop, int label) {
  const auto& gain = t[0];
  const auto& bias = t[1];
  const auto& w1 = t[2];
  const auto& b1 = t[3];
  const auto& w2 = t[4];
  const auto& b2 = t[5];
  long double mean = 0.0L;
  for (double v : x) mean += v;
  mean /= static_cast<long double>(dim);
  long double var = 0.0L;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<long double>(dim);
  const long double rstd = 1.0L / std::sqrt(var + static_cast<long double>(kLayerNormEps));
  std::vector<long double> ln(dim);
  for (std::size_t i = 0; i < dim; ++i) ln[i] = gain[i] * ((x[i] - mean) * rstd) + bias[i];
  std::vector<long double> act(hidden);
  const long double inv_keep = 1.0L / (1.0L - static_cast<long double>(p_drop));
  for (std::size_t j = 0; j < hidden; ++j) {
    long double s = b1[j];
    for (std::size_t i = 0; i < dim; ++i) s += w1[j * dim + i] * ln[i];
    act[j] = (s > 0.0L ? s : 0.0L) * keep[j] * inv_keep;
  }
  std::vector<long double> logits(classes);
  long double peak = -INFINITY;
  for (std::size_t k = 0; k < classes; ++k) {
    long double s = b2[k];
    for (std::size_t j = 0; j < hidden; ++j) s += w2[k * hidden + j] * act[j];
    logits[k] = s;
    peak = std::max(peak, s);
  }
  long double z = 0.0L;
  for (long double l : logits) z += std::exp(l - peak);
  return std::log(z) + peak - logits[static_cast<std::size_t>(label)];
}

}  // namespace

double probe_gradient_max_error(std::size_t dim, std::size_t num_classes, std::uint64_t seed,
                                double h, std::size_t hidden) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ProbeParams p = init_probe_params(dim, num_classes, rng(), hidden);
  // Perturb LayerNorm affine parameters away from the identity.
  for (double& g : p.ln_gain) g = 1.0 + 0.3 * normal(rng);
  for (double& b : p.ln_bias) b = 0.3 * normal(rng);
  Vector x(dim);
  for (double& v : x) v = normal(rng);
  const int label = static_cast<int>(rng() % num_classes);
  DropoutMask mask{Vector(p.hidden), 0.1};
  for (double& k : mask.keep) k = (rng() % 10 == 0) ? 0.0 : 1.0;

  const auto fwd = probe_forward(p, x, &mask);
  const auto grad = probe_backward(p, fwd.cache, softmax_cross_entropy(fwd.logits, label).grad);

  std::vector<std::vector<long double>> ext;
  for (auto t : std::as_const(p).tensors()) ext.emplace_back(t.begin(), t.end());
  auto loss_at = [&] {
    return reference_loss(ext, dim, p.hidden, num_classes, x, mask.keep, mask.p, label);
  };

  double worst = 0.0;
  const auto analytic = grad.params.tensors();
  for (std::size_t k = 0; k < ext.size(); ++k) {
    for (std::size_t i = 0; i < ext[k].size(); ++i) {
      const long double saved = ext[k][i];
      ext[k][i] = saved + h;
      const long double up = loss_at();
      ext[k][i] = saved - h;
      const long double down = loss_at();
      ext[k][i] = saved;
      const auto numeric = static_cast<double>((up - down) / (2.0L * h));
      worst = std::max(worst, relative_error(analytic[k][i], numeric));
    }
  }
  return worst;
}

std::vector<CheckResult> run_invariant_battery(const BatteryConfig& cfg) {
  return {chunk_carry(cfg), eta_zero(cfg), zero_state(cfg), eta_one(cfg),
          padding(cfg),     decay(cfg),    determinism(cfg), gradients(cfg)};
}

}  // namespace ssmlab
