#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssmlab/geometry.hpp"
#include "ssmlab/metrics.hpp"

namespace ssmlab {

struct SeedResult {
  std::int64_t seed = 0;
  std::size_t best_epoch = 0;
  std::map<std::string, double> metrics;
  std::optional<ConfusionMatrix> confusion;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population std across seeds
};

struct EvalReport {
  std::string task;
  std::string strategy;
  std::vector<SeedResult> per_seed;
  std::map<std::string, MeanStd> aggregate;
  std::optional<AnisotropyReport> anisotropy;
  // Present when every seed produced the same confusion matrix.
  std::optional<ConfusionMatrix> confusion;
  nlohmann::json config = nlohmann::json::object();

  // Recomputes `aggregate` and `confusion` from `per_seed`.
  void finalize();
};

// Population mean/std; std is exactly 0 for a single value or identical
// values.
MeanStd mean_std(const std::vector<double>& values);

nlohmann::json to_json(const AnisotropyReport& r);
nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const EvalReport& r);

}  // namespace ssmlab
