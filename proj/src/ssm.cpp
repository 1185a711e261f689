#include "ssmlab/ssm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace ssmlab {
namespace {

constexpr const char* kParamsFormat = "ssm-layer-params";
constexpr int kParamsVersion = 1;

double softplus(double z) {
  // Same threshold as the usual framework implementation.
  if (z > 20.0) return z;
  return std::log1p(std::exp(z));
}

void check_state(const LayerParams& p, const ScanState& state) {
  require_shape(state.h, p.d_inner, p.n_state, "ScanState.h");
}

// One recurrence step. `ortho` is null for the vanilla recurrence.
StepOutput step_unchecked(const LayerParams& p, const ScanState& state,
                          std::span<const double> u, const OrthoConfig* ortho,
                          OrthoAudit* audit) {
  const std::size_t D = p.d_inner;
  const std::size_t N = p.n_state;
  const std::size_t step = state.step_count;

  if (u.size() != p.d_model) {
    throw ConfigError("input token has length " + std::to_string(u.size()) +
                      ", expected d_model = " + std::to_string(p.d_model));
  }
  if (!all_finite(u)) {
    throw NumericError("non-finite input at step " + std::to_string(step));
  }

  const Vector x = matvec(p.w_in, u);
  const Vector bu = matvec(p.w_b, u);
  const Vector cu = matvec(p.w_c, u);
  Vector delta = matvec(p.w_delta, u);
  for (std::size_t d = 0; d < D; ++d) delta[d] = softplus(delta[d] + p.b_delta[d]);

  StepOutput out;
  out.h_next.h = Matrix(D, N);
  out.h_next.step_count = step + 1;
  Vector o(D, 0.0);
  Vector write(N, 0.0);

  for (std::size_t d = 0; d < D; ++d) {
    const auto h_row = state.h.row(d);
    for (std::size_t n = 0; n < N; ++n) write[n] = delta[d] * bu[n] * x[d];

    if (ortho != nullptr && ortho->eta != 0.0) {
      const double h_sq = squared_norm(h_row);
      // An exactly-zero row has no direction to project out of.
      if (h_sq != 0.0) {
        const double coef = ortho->eta * (dot(h_row, write) / std::max(h_sq, ortho->norm_floor));
        for (std::size_t n = 0; n < N; ++n) write[n] -= coef * h_row[n];
        if (audit != nullptr) {
          const double w_sq = squared_norm(write);
          if (w_sq != 0.0) {
            const double rel = std::abs(dot(h_row, write)) / (std::sqrt(h_sq) * std::sqrt(w_sq));
            audit->max_relative_inner = std::max(audit->max_relative_inner, rel);
            ++audit->rows_checked;
          }
        }
      }
    }

    auto next_row = out.h_next.h.row(d);
    for (std::size_t n = 0; n < N; ++n) {
      const double abar = std::exp(delta[d] * p.a_log(d, n));
      next_row[n] = abar * h_row[n] + write[n];
    }
    o[d] = dot(cu, next_row) + p.d_skip[d] * x[d];
  }

  out.y = matvec(p.w_out, o);
  if (!all_finite(out.y) || !all_finite(out.h_next.h.data())) {
    throw NumericError("non-finite value produced at step " + std::to_string(step));
  }
  return out;
}

ScanResult chunked_impl(const LayerParams& p, std::span<const Vector> seq,
                        std::size_t patch_len, const ScanState& cache,
                        const OrthoConfig* ortho, OrthoAudit* audit) {
  if (patch_len == 0) throw ConfigError("patch_len must be >= 1");
  p.validate();
  check_state(p, cache);
  if (ortho != nullptr) ortho->validate();

  ScanResult result;
  result.outputs.reserve(seq.size());
  ScanState carried = cache;
  for (std::size_t start = 0; start < seq.size(); start += patch_len) {
    const std::size_t stop = std::min(seq.size(), start + patch_len);
    for (std::size_t t = start; t < stop; ++t) {
      StepOutput out = step_unchecked(p, carried, seq[t], ortho, audit);
      carried = out.h_next;
      result.outputs.push_back(std::move(out));
    }
  }
  result.final_state = std::move(carried);
  return result;
}

ScanResult full_impl(const LayerParams& p, std::span<const Vector> seq,
                     const OrthoConfig* ortho, OrthoAudit* audit) {
  if (seq.empty()) throw InputError("scan over an empty sequence");
  p.validate();
  if (ortho != nullptr) ortho->validate();

  ScanResult result;
  result.outputs.reserve(seq.size());
  ScanState state = ScanState::zeros(p.d_inner, p.n_state);
  for (const auto& u : seq) {
    StepOutput out = step_unchecked(p, state, u, ortho, audit);
    state = out.h_next;
    result.outputs.push_back(std::move(out));
  }
  result.final_state = std::move(state);
  return result;
}

nlohmann::json matrix_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols,
                        const std::string& name) {
  if (!j.is_array() || j.size() != rows) {
    throw ConfigError(name + ": expected " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols) {
      throw ConfigError(name + ": row " + std::to_string(r) + " must have " +
                        std::to_string(cols) + " entries");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
  }
  return m;
}

Vector vector_from_json(const nlohmann::json& j, std::size_t n, const std::string& name) {
  if (!j.is_array() || j.size() != n) {
    throw ConfigError(name + ": expected " + std::to_string(n) + " entries");
  }
  return j.get<Vector>();
}

}  // namespace

LayerParams LayerParams::zeros(std::size_t d_model, std::size_t d_inner,
                               std::size_t n_state) {
  LayerParams p;
  p.d_model = d_model;
  p.d_inner = d_inner;
  p.n_state = n_state;
  p.a_log = Matrix(d_inner, n_state);
  p.w_delta = Matrix(d_inner, d_model);
  p.b_delta = Vector(d_inner, 0.0);
  p.w_b = Matrix(n_state, d_model);
  p.w_c = Matrix(n_state, d_model);
  p.d_skip = Vector(d_inner, 0.0);
  p.w_in = Matrix(d_inner, d_model);
  p.w_out = Matrix(d_model, d_inner);
  return p;
}

void LayerParams::validate() const {
  if (d_model == 0 || d_inner == 0 || n_state == 0) {
    throw ConfigError("d_model, d_inner and n_state must all be positive");
  }
  require_shape(a_log, d_inner, n_state, "a_log");
  require_shape(w_delta, d_inner, d_model, "w_delta");
  require_size(b_delta, d_inner, "b_delta");
  require_shape(w_b, n_state, d_model, "w_b");
  require_shape(w_c, n_state, d_model, "w_c");
  require_size(d_skip, d_inner, "d_skip");
  require_shape(w_in, d_inner, d_model, "w_in");
  require_shape(w_out, d_model, d_inner, "w_out");
  if (!all_finite(a_log.data())) throw ConfigError("a_log has non-finite entries");
}

void OrthoConfig::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw ConfigError("eta must lie in [0, 1], got " + std::to_string(eta));
  }
  if (!(norm_floor > 0.0)) throw ConfigError("norm_floor must be positive");
}

LayerParams init_layer_params(std::size_t d_model, std::size_t d_inner,
                              std::size_t n_state, std::uint64_t seed) {
  LayerParams p = LayerParams::zeros(d_model, d_inner, n_state);
  std::mt19937_64 rng(seed);
  auto fill_uniform = [&rng](Matrix& m) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : m.data()) v = dist(rng);
  };
  fill_uniform(p.w_in);
  fill_uniform(p.w_delta);
  fill_uniform(p.w_b);
  fill_uniform(p.w_c);
  fill_uniform(p.w_out);

  for (std::size_t d = 0; d < d_inner; ++d)
    for (std::size_t n = 0; n < n_state; ++n) p.a_log(d, n) = -static_cast<double>(n + 1);

  std::uniform_real_distribution<double> log_dt(std::log(1e-3), std::log(1e-1));
  for (double& b : p.b_delta) {
    const double dt = std::exp(log_dt(rng));
    b = std::log(std::expm1(dt));  // inverse softplus
  }
  std::fill(p.d_skip.begin(), p.d_skip.end(), 1.0);
  return p;
}

LayerParams random_layer_params(std::size_t d_model, std::size_t d_inner,
                                std::size_t n_state, std::uint64_t seed) {
  LayerParams p = LayerParams::zeros(d_model, d_inner, n_state);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](std::vector<double>& v, double scale) {
    for (double& x : v) x = scale * normal(rng);
  };
  const double in_scale = 1.0 / std::sqrt(static_cast<double>(d_model));
  fill(p.w_in.data(), in_scale);
  fill(p.w_delta.data(), in_scale);
  fill(p.b_delta, 1.0);
  fill(p.w_b.data(), in_scale);
  fill(p.w_c.data(), in_scale);
  fill(p.d_skip, 1.0);
  fill(p.w_out.data(), 1.0 / std::sqrt(static_cast<double>(d_inner)));
  std::uniform_real_distribution<double> decay(0.05, 2.0);
  for (double& a : p.a_log.data()) a = -decay(rng);
  return p;
}

StepOutput scan_step(const LayerParams& params, const ScanState& state,
                     std::span<const double> u) {
  params.validate();
  check_state(params, state);
  return step_unchecked(params, state, u, nullptr, nullptr);
}

ScanResult full_scan(const LayerParams& params, std::span<const Vector> seq) {
  return full_impl(params, seq, nullptr, nullptr);
}

ScanResult chunked_scan(const LayerParams& params, std::span<const Vector> seq,
                        std::size_t patch_len, const ScanState& cache) {
  return chunked_impl(params, seq, patch_len, cache, nullptr, nullptr);
}

StepOutput ortho_scan_step(const LayerParams& params, const ScanState& state,
                           std::span<const double> u, const OrthoConfig& cfg,
                           OrthoAudit* audit) {
  params.validate();
  check_state(params, state);
  cfg.validate();
  return step_unchecked(params, state, u, &cfg, audit);
}

ScanResult ortho_full_scan(const LayerParams& params, std::span<const Vector> seq,
                           const OrthoConfig& cfg, OrthoAudit* audit) {
  return full_impl(params, seq, &cfg, audit);
}

ScanResult ortho_chunked_scan(const LayerParams& params, std::span<const Vector> seq,
                              std::size_t patch_len, const ScanState& cache,
                              const OrthoConfig& cfg, OrthoAudit* audit) {
  return chunked_impl(params, seq, patch_len, cache, &cfg, audit);
}

nlohmann::json to_json(const LayerParams& p) {
  p.validate();
  return {
      {"format", kParamsFormat},
      {"version", kParamsVersion},
      {"d_model", p.d_model},
      {"d_inner", p.d_inner},
      {"n_state", p.n_state},
      {"a_log", matrix_json(p.a_log)},
      {"w_delta", matrix_json(p.w_delta)},
      {"b_delta", p.b_delta},
      {"w_b", matrix_json(p.w_b)},
      {"w_c", matrix_json(p.w_c)},
      {"d_skip", p.d_skip},
      {"w_in", matrix_json(p.w_in)},
      {"w_out", matrix_json(p.w_out)},
  };
}

LayerParams layer_params_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format", std::string{}) != kParamsFormat) {
      throw ConfigError("not an ssm-layer-params document");
    }
    if (doc.at("version").get<int>() != kParamsVersion) {
      throw ConfigError("unsupported ssm-layer-params version " +
                        doc.at("version").dump());
    }
    const auto dm = doc.at("d_model").get<std::size_t>();
    const auto di = doc.at("d_inner").get<std::size_t>();
    const auto ns = doc.at("n_state").get<std::size_t>();
    LayerParams p;
    p.d_model = dm;
    p.d_inner = di;
    p.n_state = ns;
    p.a_log = matrix_from_json(doc.at("a_log"), di, ns, "a_log");
    p.w_delta = matrix_from_json(doc.at("w_delta"), di, dm, "w_delta");
    p.b_delta = vector_from_json(doc.at("b_delta"), di, "b_delta");
    p.w_b = matrix_from_json(doc.at("w_b"), ns, dm, "w_b");
    p.w_c = matrix_from_json(doc.at("w_c"), ns, dm, "w_c");
    p.d_skip = vector_from_json(doc.at("d_skip"), di, "d_skip");
    p.w_in = matrix_from_json(doc.at("w_in"), di, dm, "w_in");
    p.w_out = matrix_from_json(doc.at("w_out"), dm, di, "w_out");
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed layer parameters: ") + e.what());
  }
}

void save_layer_params(const LayerParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_json(params).dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

LayerParams load_layer_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return layer_params_from_json(doc);
}

}  // namespace ssmlab
