#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ssmlab/errors.hpp"

namespace ssmlab {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. A linear map "in -> out" is stored with
// shape out x in, so matvec() computes W * x.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

// y = W * x, accumulated left to right.
inline Vector matvec(const Matrix& w, std::span<const double> x) {
  Vector y(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) y[r] = dot(w.row(r), x);
  return y;
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline void require_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                          const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ConfigError(name + ": expected shape " + std::to_string(rows) + "x" +
                      std::to_string(cols) + ", got " + std::to_string(m.rows()) +
                      "x" + std::to_string(m.cols()));
  }
}

inline void require_size(std::span<const double> v, std::size_t n,
                         const std::string& name) {
  if (v.size() != n) {
    throw ConfigError(name + ": expected length " + std::to_string(n) + ", got " +
                      std::to_string(v.size()));
  }
}

}  // namespace ssmlab
