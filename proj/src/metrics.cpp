#include "ssmlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ssmlab/errors.hpp"

namespace ssmlab {

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::vector<std::vector<std::uint64_t>> ConfusionMatrix::rows() const {
  std::vector<std::vector<std::uint64_t>> out(n_);
  for (std::size_t r = 0; r < n_; ++r)
    out[r].assign(counts_.begin() + r * n_, counts_.begin() + (r + 1) * n_);
  return out;
}

ConfusionMatrix confusion(std::span<const int> true_labels, std::span<const int> predicted,
                          std::size_t num_classes) {
  if (true_labels.size() != predicted.size()) {
    throw InputError("confusion: " + std::to_string(true_labels.size()) + " labels vs " +
                     std::to_string(predicted.size()) + " predictions");
  }
  if (num_classes == 0) throw InputError("confusion: num_classes must be positive");
  ConfusionMatrix cm(num_classes);
  const auto n = static_cast<int>(num_classes);
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    const int t = true_labels[i];
    const int p = predicted[i];
    if (t < 0 || t >= n || p < 0 || p >= n) {
      throw InputError("confusion: label out of range at index " + std::to_string(i));
    }
    cm.add(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

double mcc(const ConfusionMatrix& cm) {
  if (cm.num_classes() != 2) throw InputError("mcc: only 2x2 confusion matrices are supported");
  const double tn = static_cast<double>(cm(0, 0));
  const double fp = static_cast<double>(cm(0, 1));
  const double fn = static_cast<double>(cm(1, 0));
  const double tp = static_cast<double>(cm(1, 1));
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw InputError("accuracy: empty confusion matrix");
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < cm.num_classes(); ++c) trace += cm(c, c);
  return static_cast<double>(trace) / static_cast<double>(total);
}

double f1_binary(const ConfusionMatrix& cm, std::size_t positive_class) {
  if (positive_class >= cm.num_classes()) throw InputError("f1: positive class out of range");
  double tp = static_cast<double>(cm(positive_class, positive_class));
  double predicted_pos = 0.0;
  double actual_pos = 0.0;
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    predicted_pos += static_cast<double>(cm(c, positive_class));
    actual_pos += static_cast<double>(cm(positive_class, c));
  }
  const double precision = predicted_pos > 0.0 ? tp / predicted_pos : 0.0;
  const double recall = actual_pos > 0.0 ? tp / actual_pos : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("pearson: series lengths differ");
  if (a.size() < 2) throw InputError("pearson: need at least two points");
  const double n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw DegenerateInputError("correlation undefined: constant series");
  }
  const double r = sab / (std::sqrt(saa) * std::sqrt(sbb));
  return std::clamp(r, -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) share rank mean of (i+1 .. j)
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("spearman: series lengths differ");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

}  // namespace ssmlab
