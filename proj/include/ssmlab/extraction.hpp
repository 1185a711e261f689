#pragma once

// Sentence-vector extraction from a single selective-scan layer.
//
// Padding tokens (mask = 0) never enter the scan; only the real prefix is
// processed, so every strategy is exactly invariant to right padding.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ssmlab/ssm.hpp"

namespace ssmlab {

enum class Strategy { patched, mean_pool, final_state, ortho_patched };

// "patched", "mean_pool", "final_state", "ortho_patched".
std::string_view strategy_name(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view name);
inline constexpr std::string_view kStrategyNames = "patched, mean_pool, final_state, ortho_patched";

enum class BoundaryPool { mean_of_boundaries, last_boundary };

inline constexpr std::size_t kDefaultPatchLen = 32;

struct MaskedSequence {
  std::vector<Vector> embeddings;
  std::vector<int> mask;  // 1 on a prefix, 0 on the padded suffix

  // Number of leading real tokens. Throws InputError if the mask is not a
  // 1-prefix/0-suffix of matching length or has no real token.
  std::size_t real_length() const;
};

struct SentenceVector {
  Vector values;
  Strategy strategy = Strategy::mean_pool;
  std::size_t dim = 0;
};

SentenceVector extract_patched(const LayerParams& params, const MaskedSequence& seq,
                               std::size_t patch_len,
                               BoundaryPool pool = BoundaryPool::mean_of_boundaries);

SentenceVector extract_mean_pool(const LayerParams& params, const MaskedSequence& seq);

// Row means over N of the raw state after the last real token (dim = D).
SentenceVector extract_final_state(const LayerParams& params, const MaskedSequence& seq);

SentenceVector extract_ortho_patched(const LayerParams& params, const MaskedSequence& seq,
                                     std::size_t patch_len, const OrthoConfig& cfg,
                                     BoundaryPool pool = BoundaryPool::mean_of_boundaries,
                                     OrthoAudit* audit = nullptr);

struct ExtractionConfig {
  Strategy strategy = Strategy::mean_pool;
  std::size_t patch_len = kDefaultPatchLen;
  BoundaryPool pool = BoundaryPool::mean_of_boundaries;
  OrthoConfig ortho;
};

SentenceVector extract(const LayerParams& params, const MaskedSequence& seq,
                       const ExtractionConfig& cfg);

// Extracts every sequence, optionally across `threads` workers; results are
// returned in input order.
std::vector<SentenceVector> extract_batch(const LayerParams& params,
                                          const std::vector<MaskedSequence>& seqs,
                                          const ExtractionConfig& cfg,
                                          std::size_t threads = 1);

}  // namespace ssmlab
