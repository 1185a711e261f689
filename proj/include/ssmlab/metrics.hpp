#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ssmlab {

// Rows are true labels, columns are predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes)
      : n_(num_classes), counts_(num_classes * num_classes, 0) {}

  std::size_t num_classes() const { return n_; }
  std::uint64_t operator()(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * n_ + predicted];
  }
  void add(std::size_t truth, std::size_t predicted) { ++counts_[truth * n_ + predicted]; }
  std::uint64_t total() const;

  std::vector<std::vector<std::uint64_t>> rows() const;
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> true_labels, std::span<const int> predicted,
                          std::size_t num_classes);

// Binary Matthews correlation with class 1 as positive. Returns 0 when any
// marginal is empty, which is the value of every constant predictor.
double mcc(const ConfusionMatrix& cm);

double accuracy(const ConfusionMatrix& cm);

// F1 of `positive_class` vs. the rest; 0 when precision + recall = 0.
double f1_binary(const ConfusionMatrix& cm, std::size_t positive_class = 1);

// Throw DegenerateInputError for constant series and InputError for length
// mismatch or fewer than two points.
double pearson(std::span<const double> a, std::span<const double> b);
double spearman(std::span<const double> a, std::span<const double> b);

// 1-based ranks; tied values share the average of their positions.
std::vector<double> average_ranks(std::span<const double> values);

}  // namespace ssmlab
