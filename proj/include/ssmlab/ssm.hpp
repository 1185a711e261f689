#pragma once

// Selective state-space recurrence at desk scale.
//
// One layer maps a d_model input token u to a d_model output y through D
// inner channels, each carrying an N-wide state row:
//
//   x       = w_in u
//   delta_d = softplus(w_delta u + b_delta)_d
//   abar    = exp(delta_d * a_log[d, :])
//   write   = delta_d * (w_b u) * x_d
//   h'[d,:] = abar (.) h[d,:] + write
//   o_d     = <w_c u, h'[d,:]> + d_skip_d * x_d
//   y       = w_out o
//
// The orthogonal-injection variant removes a fraction eta of each write row's
// component along the previous state row before the addition.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"
#include "ssmlab/tensor.hpp"

namespace ssmlab {

struct LayerParams {
  std::size_t d_model = 0;
  std::size_t d_inner = 0;  // D
  std::size_t n_state = 0;  // N
  Matrix a_log;             // D x N, continuous-time log-decay (negative)
  Matrix w_delta;           // D x d_model
  Vector b_delta;           // D
  Matrix w_b;               // N x d_model
  Matrix w_c;               // N x d_model
  Vector d_skip;            // D
  Matrix w_in;              // D x d_model
  Matrix w_out;             // d_model x D

  // All-zero parameters of the given shape.
  static LayerParams zeros(std::size_t d_model, std::size_t d_inner, std::size_t n_state);

  // Throws ConfigError on any shape inconsistency or non-finite a_log entry.
  void validate() const;

  bool operator==(const LayerParams&) const = default;
};

// Seeded initialization: weights uniform in +-1/sqrt(fan_in), a_log[d, n] =
// -(n + 1), and b_delta set so that softplus(b_delta) is log-uniform in
// [1e-3, 1e-1]. With small step sizes exp(delta * a_log) stays close to 1.
LayerParams init_layer_params(std::size_t d_model, std::size_t d_inner,
                              std::size_t n_state, std::uint64_t seed);

// Gaussian weights of scale 1/sqrt(fan_in) everywhere, including a_log drawn
// strictly negative. Used for randomized invariant checks.
LayerParams random_layer_params(std::size_t d_model, std::size_t d_inner,
                                std::size_t n_state, std::uint64_t seed);

struct ScanState {
  Matrix h;  // D x N
  std::size_t step_count = 0;

  static ScanState zeros(std::size_t d_inner, std::size_t n_state) {
    return ScanState{Matrix(d_inner, n_state, 0.0), 0};
  }
  bool operator==(const ScanState&) const = default;
};

struct StepOutput {
  Vector y;  // d_model
  ScanState h_next;
};

struct ScanResult {
  std::vector<StepOutput> outputs;
  ScanState final_state;
};

struct OrthoConfig {
  double eta = 0.5;
  double norm_floor = 1e-12;

  // Throws ConfigError unless eta is in [0, 1] and norm_floor > 0.
  void validate() const;
};

// Running record of how orthogonal each effective write row was to the
// previous state row, over all rows where both are nonzero.
struct OrthoAudit {
  double max_relative_inner = 0.0;  // max |<h, w>| / (|h| |w|)
  std::size_t rows_checked = 0;
};

StepOutput scan_step(const LayerParams& params, const ScanState& state,
                     std::span<const double> u);

ScanResult full_scan(const LayerParams& params, std::span<const Vector> seq);

// Processes seq in consecutive patches of patch_len tokens, threading the
// state through `cache`. Starting from a zero cache the result is
// bit-identical to full_scan.
ScanResult chunked_scan(const LayerParams& params, std::span<const Vector> seq,
                        std::size_t patch_len, const ScanState& cache);

StepOutput ortho_scan_step(const LayerParams& params, const ScanState& state,
                           std::span<const double> u, const OrthoConfig& cfg,
                           OrthoAudit* audit = nullptr);

ScanResult ortho_full_scan(const LayerParams& params, std::span<const Vector> seq,
                           const OrthoConfig& cfg, OrthoAudit* audit = nullptr);

ScanResult ortho_chunked_scan(const LayerParams& params, std::span<const Vector> seq,
                              std::size_t patch_len, const ScanState& cache,
                              const OrthoConfig& cfg, OrthoAudit* audit = nullptr);

// Versioned JSON document {"format": "ssm-layer-params", "version": 1, ...}
// with matrices as row-major nested arrays.
nlohmann::json to_json(const LayerParams& params);
LayerParams layer_params_from_json(const nlohmann::json& doc);
void save_layer_params(const LayerParams& params, const std::filesystem::path& path);
LayerParams load_layer_params(const std::filesystem::path& path);

}  // namespace ssmlab
