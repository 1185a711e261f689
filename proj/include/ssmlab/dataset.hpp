#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ssmlab/tensor.hpp"

namespace ssmlab {

enum class Split { train, validation };
enum class Source { synthetic, ingested };

struct LabeledVectorSet {
  std::vector<Vector> vectors;  // uniform dimension
  std::vector<int> labels;
  Split split = Split::train;
  Source source = Source::synthetic;

  std::size_t size() const { return vectors.size(); }
  std::size_t dim() const { return vectors.empty() ? 0 : vectors.front().size(); }

  // InputError on ragged dimensions, length mismatch, or a label outside
  // [0, num_classes).
  void validate(std::size_t num_classes) const;
};

inline void LabeledVectorSet::validate(std::size_t num_classes) const {
  if (vectors.size() != labels.size()) {
    throw InputError("labeled set has " + std::to_string(vectors.size()) + " vectors and " +
                     std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != dim()) {
      throw InputError("vector " + std::to_string(i) + " has dimension " +
                       std::to_string(vectors[i].size()) + ", expected " +
                       std::to_string(dim()));
    }
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw InputError("label " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                       " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

}  // namespace ssmlab
