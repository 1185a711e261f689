#pragma once

// Representation geometry: pairwise cosine structure and anisotropy.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ssmlab/tensor.hpp"

namespace ssmlab {

struct CosineMatrix {
  Matrix values;  // K x K, symmetric, unit diagonal
  std::size_t k = 0;
};

struct AnisotropyReport {
  double mean = 0.0;
  double std = 0.0;  // population std over the sampled pairs
  std::size_t pair_count = 0;
  std::int64_t sampling_seed = 0;
  bool diagonal_excluded = true;
  bool exhaustive = false;
};

// Throws InputError for fewer than two vectors, ragged dimensions, or a
// zero-norm vector (the message names its index).
CosineMatrix cosine_matrix(const std::vector<Vector>& vectors);

double cosine(std::span<const double> a, std::span<const double> b);

// Samples min(sample_pairs, K(K-1)/2) distinct pairs i < j uniformly without
// replacement. When every pair is requested the result is exhaustive and does
// not depend on the seed.
AnisotropyReport anisotropy_stats(const CosineMatrix& m, std::size_t sample_pairs,
                                  std::int64_t seed);

// Same sampling and statistics as anisotropy_stats(cosine_matrix(vectors),
// ...) but only the sampled cosines are computed.
AnisotropyReport anisotropy_from_vectors(const std::vector<Vector>& vectors,
                                         std::size_t sample_pairs, std::int64_t seed);

// Indices (i, j), i < j, of the sampled pairs in ascending linear order.
std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t k,
                                                              std::size_t count,
                                                              std::int64_t seed);

// sqrt(1 - cos); InputError outside [-1, 1].
double angular_deviation(double cos_value);

// CSV with a header row and a header column of labels, values at 17
// significant digits. The top-left cell is empty.
void export_heatmap(const CosineMatrix& m, const std::vector<std::string>& labels,
                    const std::filesystem::path& path);

struct SimilarityResult {
  double pearson = 0.0;
  double spearman = 0.0;
  double mean_cos = 0.0;
  std::vector<double> predicted;  // cosine per pair
};

// Zero-training similarity: predicted score per pair is the cosine of its two
// vectors. Correlations with constant predictions raise DegenerateInputError.
SimilarityResult unsupervised_similarity(const std::vector<std::pair<Vector, Vector>>& pairs,
                                         std::span<const double> gold);

}  // namespace ssmlab
