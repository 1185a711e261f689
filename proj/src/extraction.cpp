#include "ssmlab/extraction.hpp"

#include <algorithm>

#include "ssmlab/parallel.hpp"

namespace ssmlab {
namespace {

std::span<const Vector> real_prefix(const MaskedSequence& seq) {
  return {seq.embeddings.data(), seq.real_length()};
}

SentenceVector make_vector(Vector values, Strategy strategy) {
  if (!all_finite(values)) {
    throw NumericError("non-finite sentence vector (" + std::string(strategy_name(strategy)) + ")");
  }
  SentenceVector sv;
  sv.dim = values.size();
  sv.values = std::move(values);
  sv.strategy = strategy;
  return sv;
}

// Collects y at the last token of each patch of the real prefix.
Vector pool_boundaries(const ScanResult& scan, std::size_t patch_len, BoundaryPool pool) {
  const std::size_t len = scan.outputs.size();
  if (pool == BoundaryPool::last_boundary) return scan.outputs.back().y;

  Vector sum(scan.outputs.front().y.size(), 0.0);
  std::size_t count = 0;
  for (std::size_t start = 0; start < len; start += patch_len) {
    const std::size_t boundary = std::min(len, start + patch_len) - 1;
    const Vector& y = scan.outputs[boundary].y;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += y[i];
    ++count;
  }
  for (double& v : sum) v /= static_cast<double>(count);
  return sum;
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::patched: return "patched";
    case Strategy::mean_pool: return "mean_pool";
    case Strategy::final_state: return "final_state";
    case Strategy::ortho_patched: return "ortho_patched";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::patched, Strategy::mean_pool, Strategy::final_state,
                     Strategy::ortho_patched}) {
    if (strategy_name(s) == name) return s;
  }
  return std::nullopt;
}

std::size_t MaskedSequence::real_length() const {
  if (mask.size() != embeddings.size()) {
    throw InputError("mask length " + std::to_string(mask.size()) +
                     " does not match sequence length " + std::to_string(embeddings.size()));
  }
  std::size_t len = 0;
  while (len < mask.size() && mask[len] == 1) ++len;
  for (std::size_t i = len; i < mask.size(); ++i) {
    if (mask[i] != 0) {
      throw InputError("mask must be 1 on a prefix and 0 on the suffix (position " +
                       std::to_string(i) + ")");
    }
  }
  if (len == 0) throw InputError("sequence has no real tokens (all padding)");
  return len;
}

SentenceVector extract_patched(const LayerParams& params, const MaskedSequence& seq,
                               std::size_t patch_len, BoundaryPool pool) {
  if (patch_len == 0) throw ConfigError("patch_len must be >= 1");
  const auto tokens = real_prefix(seq);
  const auto scan = chunked_scan(params, tokens, patch_len,
                                 ScanState::zeros(params.d_inner, params.n_state));
  return make_vector(pool_boundaries(scan, patch_len, pool), Strategy::patched);
}

SentenceVector extract_mean_pool(const LayerParams& params, const MaskedSequence& seq) {
  const auto scan = full_scan(params, real_prefix(seq));
  Vector mean(params.d_model, 0.0);
  for (const auto& out : scan.outputs)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += out.y[i];
  for (double& v : mean) v /= static_cast<double>(scan.outputs.size());
  return make_vector(std::move(mean), Strategy::mean_pool);
}

SentenceVector extract_final_state(const LayerParams& params, const MaskedSequence& seq) {
  const auto scan = full_scan(params, real_prefix(seq));
  const Matrix& h = scan.final_state.h;
  Vector rows(h.rows(), 0.0);
  for (std::size_t d = 0; d < h.rows(); ++d) {
    double s = 0.0;
    for (double v : h.row(d)) s += v;
    rows[d] = s / static_cast<double>(h.cols());
  }
  return make_vector(std::move(rows), Strategy::final_state);
}

SentenceVector extract_ortho_patched(const LayerParams& params, const MaskedSequence& seq,
                                     std::size_t patch_len, const OrthoConfig& cfg,
                                     BoundaryPool pool, OrthoAudit* audit) {
  if (patch_len == 0) throw ConfigError("patch_len must be >= 1");
  const auto tokens = real_prefix(seq);
  const auto scan = ortho_chunked_scan(params, tokens, patch_len,
                                       ScanState::zeros(params.d_inner, params.n_state), cfg,
                                       audit);
  return make_vector(pool_boundaries(scan, patch_len, pool), Strategy::ortho_patched);
}

SentenceVector extract(const LayerParams& params, const MaskedSequence& seq,
                       const ExtractionConfig& cfg) {
  switch (cfg.strategy) {
    case Strategy::patched: return extract_patched(params, seq, cfg.patch_len, cfg.pool);
    case Strategy::mean_pool: return extract_mean_pool(params, seq);
    case Strategy::final_state: return extract_final_state(params, seq);
    case Strategy::ortho_patched:
      return extract_ortho_patched(params, seq, cfg.patch_len, cfg.ortho, cfg.pool);
  }
  throw ConfigError("unknown strategy");
}

std::vector<SentenceVector> extract_batch(const LayerParams& params,
                                          const std::vector<MaskedSequence>& seqs,
                                          const ExtractionConfig& cfg, std::size_t threads) {
  return parallel_map(seqs.size(), threads,
                      [&](std::size_t i) { return extract(params, seqs[i], cfg); });
}

}  // namespace ssmlab
