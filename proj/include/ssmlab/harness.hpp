#pragma once

// Synthetic task generators and the line-delimited dump format used to
// exchange sentence vectors with external exporters.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ssmlab/dataset.hpp"
#include "ssmlab/extraction.hpp"

namespace ssmlab {

// Class counts of the acceptability validation split the collapse task mirrors.
inline constexpr std::size_t kCollapseClass0 = 322;
inline constexpr std::size_t kCollapseClass1 = 721;
inline constexpr std::size_t kCollapseTrainMultiplier = 4;

// Every vector is one seeded unit direction plus noise * N(0, 1) per
// coordinate; labels are n_class0 zeros followed by n_class1 ones. With
// noise = 0 all vectors are bit-identical. The direction depends only on the
// seed, the noise stream on (seed, split).
LabeledVectorSet gen_collapse_set(std::size_t dim, std::size_t n_class0, std::size_t n_class1,
                                  double noise, std::uint64_t seed,
                                  Split split = Split::validation);

// Two gaussian clusters (per-coordinate std = noise) centered at
// -margin/2 and +margin/2 along a seeded random unit direction.
LabeledVectorSet gen_separable_set(std::size_t dim, std::size_t n_per_class, double margin,
                                   std::uint64_t seed, double noise = 1.0,
                                   Split split = Split::train);

// The unit direction gen_separable_set uses for (dim, seed).
Vector separable_direction(std::size_t dim, std::uint64_t seed);

struct SimilarityPairs {
  std::vector<std::pair<Vector, Vector>> pairs;
  std::vector<double> gold;
};

// Pair i is (a, cos(theta) a + sin(theta) b) with a, b orthonormal and
// theta = (1 - gold_i) * pi / 2, so cosine increases strictly with gold.
SimilarityPairs gen_sts_pairs(std::size_t n_pairs, std::size_t dim, std::uint64_t seed);

struct TokenBatch {
  Matrix embedding;  // vocab_size x d_model
  std::vector<std::vector<int>> token_ids;  // unpadded
  std::vector<MaskedSequence> sequences;    // right-padded to the longest
};

TokenBatch gen_token_sequences(std::size_t vocab_size, std::size_t n_seqs,
                               std::pair<std::size_t, std::size_t> len_range,
                               std::size_t d_model, std::uint64_t seed);

// Embeds ids through `embedding` and right-pads to `padded_len` with zero
// vectors and mask 0.
MaskedSequence embed_tokens(const Matrix& embedding, const std::vector<int>& ids,
                            std::size_t padded_len);

struct TokenPairs {
  Matrix embedding;
  std::vector<std::pair<MaskedSequence, MaskedSequence>> pairs;
  std::vector<double> gold;  // 1 - fraction of replaced tokens
};

// Sequence-level similarity task: the second sequence of each pair is the
// first with a random fraction of positions replaced by fresh tokens.
TokenPairs gen_token_pairs(std::size_t vocab_size, std::size_t n_pairs, std::size_t seq_len,
                           std::size_t d_model, std::uint64_t seed);

struct DumpRecord {
  std::string id;
  std::string split;
  std::optional<int> label;
  std::optional<double> gold_score;
  std::string strategy;
  Vector vector;

  bool operator==(const DumpRecord&) const = default;
};

struct Dump {
  std::vector<DumpRecord> records;
  std::optional<std::uint64_t> truncated;  // from an exporter footer line

  // Records of one strategy and split. Labels are required.
  LabeledVectorSet labeled(const std::string& strategy, const std::string& split) const;

  // Vectors of one strategy in file order.
  std::vector<Vector> vectors(const std::string& strategy) const;
  std::vector<std::string> ids(const std::string& strategy) const;

  // Pairs record "<key>/a" with "<key>/b"; both must carry the same
  // gold_score. Pairs appear in order of their "/a" record.
  SimilarityPairs similarity_pairs(const std::string& strategy) const;
};

inline constexpr const char* kDumpFormat = "ssm-dump";
inline constexpr int kDumpVersion = 1;

// Header line first, then one JSON object per record with vector entries at
// 17 significant digits.
void write_dump(const std::vector<DumpRecord>& records, const std::filesystem::path& path);

// InputError naming the 1-based line for malformed lines; mixed dimensions
// within one strategy name both dimensions.
Dump load_dump(const std::filesystem::path& path);
Dump parse_dump(std::istream& in, const std::string& source_name = "<stream>");

}  // namespace ssmlab
