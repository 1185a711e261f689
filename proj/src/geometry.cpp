#include "ssmlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <unordered_set>

#include "ssmlab/metrics.hpp"

namespace ssmlab {
namespace {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("cosine: dimension mismatch");
  const double na = std::sqrt(squared_norm(a));
  const double nb = std::sqrt(squared_norm(b));
  if (na == 0.0 || nb == 0.0) throw InputError("cosine: zero-norm vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

CosineMatrix cosine_matrix(const std::vector<Vector>& vectors) {
  const std::size_t k = vectors.size();
  if (k < 2) throw InputError("cosine_matrix: need at least two vectors");
  const std::size_t dim = vectors.front().size();
  std::vector<double> norms(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (vectors[i].size() != dim) {
      throw InputError("cosine_matrix: vector " + std::to_string(i) + " has dimension " +
                       std::to_string(vectors[i].size()) + ", expected " + std::to_string(dim));
    }
    norms[i] = std::sqrt(squared_norm(vectors[i]));
    if (norms[i] == 0.0) {
      throw InputError("cosine_matrix: vector " + std::to_string(i) + " has zero norm");
    }
  }

  CosineMatrix m{Matrix(k, k, 0.0), k};
  for (std::size_t i = 0; i < k; ++i) {
    m.values(i, i) = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      const double c = std::clamp(dot(vectors[i], vectors[j]) / (norms[i] * norms[j]), -1.0, 1.0);
      m.values(i, j) = c;
      m.values(j, i) = c;
    }
  }
  return m;
}

std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t k, std::size_t count,
                                                              std::int64_t seed) {
  const std::size_t total = k * (k - 1) / 2;
  std::vector<std::size_t> picked;
  if (count >= total) {
    picked.resize(total);
    for (std::size_t i = 0; i < total; ++i) picked[i] = i;
  } else {
    // Floyd's algorithm: `count` distinct draws from [0, total).
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(count * 2);
    for (std::size_t j = total - count; j < total; ++j) {
      std::uniform_int_distribution<std::size_t> dist(0, j);
      const std::size_t t = dist(rng);
      if (!chosen.insert(t).second) chosen.insert(j);
    }
    picked.assign(chosen.begin(), chosen.end());
    std::sort(picked.begin(), picked.end());
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(picked.size());
  // picked is ascending, so walk the triangle once.
  std::size_t row = 0;
  std::size_t row_start = 0;
  for (std::size_t index : picked) {
    while (index >= row_start + (k - 1 - row)) {
      row_start += k - 1 - row;
      ++row;
    }
    pairs.emplace_back(row, row + 1 + (index - row_start));
  }
  return pairs;
}

namespace {

AnisotropyReport summarize(const std::vector<double>& values, std::size_t total,
                           std::int64_t seed) {
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  const double mean = sum / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);

  AnisotropyReport r;
  r.mean = mean;
  r.std = std::sqrt(sq / n);
  r.pair_count = values.size();
  r.sampling_seed = seed;
  r.exhaustive = values.size() == total;
  return r;
}

}  // namespace

AnisotropyReport anisotropy_stats(const CosineMatrix& m, std::size_t sample_count,
                                  std::int64_t seed) {
  if (m.k < 2) throw InputError("anisotropy_stats: need at least two vectors");
  if (sample_count == 0) throw InputError("anisotropy_stats: sample_pairs must be >= 1");
  std::vector<double> values;
  for (const auto& [i, j] : sample_pairs(m.k, sample_count, seed)) values.push_back(m.values(i, j));
  return summarize(values, m.k * (m.k - 1) / 2, seed);
}

AnisotropyReport anisotropy_from_vectors(const std::vector<Vector>& vectors,
                                         std::size_t sample_count, std::int64_t seed) {
  const std::size_t k = vectors.size();
  if (k < 2) throw InputError("anisotropy_stats: need at least two vectors");
  if (sample_count == 0) throw InputError("anisotropy_stats: sample_pairs must be >= 1");
  std::vector<double> norms(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (vectors[i].size() != vectors.front().size()) {
      throw InputError("anisotropy_stats: vector " + std::to_string(i) + " has dimension " +
                       std::to_string(vectors[i].size()) + ", expected " +
                       std::to_string(vectors.front().size()));
    }
    norms[i] = std::sqrt(squared_norm(vectors[i]));
    if (norms[i] == 0.0) {
      throw InputError("anisotropy_stats: vector " + std::to_string(i) + " has zero norm");
    }
  }
  std::vector<double> values;
  for (const auto& [i, j] : sample_pairs(k, sample_count, seed)) {
    values.push_back(std::clamp(dot(vectors[i], vectors[j]) / (norms[i] * norms[j]), -1.0, 1.0));
  }
  return summarize(values, k * (k - 1) / 2, seed);
}

double angular_deviation(double cos_value) {
  if (!(cos_value >= -1.0 && cos_value <= 1.0)) {
    throw InputError("angular_deviation: cosine " + std::to_string(cos_value) +
                     " outside [-1, 1]");
  }
  return std::sqrt(1.0 - cos_value);
}

void export_heatmap(const CosineMatrix& m, const std::vector<std::string>& labels,
                    const std::filesystem::path& path) {
  if (labels.size() != m.k) {
    throw InputError("export_heatmap: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(m.k) + " vectors");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& label : labels) out << ',' << csv_field(label);
  out << '\n';
  for (std::size_t i = 0; i < m.k; ++i) {
    out << csv_field(labels[i]);
    for (std::size_t j = 0; j < m.k; ++j) out << ',' << format_g17(m.values(i, j));
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

SimilarityResult unsupervised_similarity(const std::vector<std::pair<Vector, Vector>>& pairs,
                                         std::span<const double> gold) {
  if (pairs.empty()) throw InputError("unsupervised_similarity: no pairs");
  if (pairs.size() != gold.size()) {
    throw InputError("unsupervised_similarity: " + std::to_string(pairs.size()) + " pairs vs " +
                     std::to_string(gold.size()) + " gold scores");
  }
  SimilarityResult r;
  r.predicted.reserve(pairs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    try {
      r.predicted.push_back(cosine(pairs[i].first, pairs[i].second));
    } catch (const InputError& e) {
      throw InputError("unsupervised_similarity: pair " + std::to_string(i) + ": " + e.what());
    }
    sum += r.predicted.back();
  }
  r.mean_cos = sum / static_cast<double>(pairs.size());
  r.pearson = pearson(r.predicted, gold);
  r.spearman = spearman(r.predicted, gold);
  return r;
}

}  // namespace ssmlab
