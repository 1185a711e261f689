#pragma once

// On-demand invariant battery behind `ssmlab scan-check`.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ssmlab {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;  // the measured quantity compared against the bound
  std::string detail;
};

struct BatteryConfig {
  std::uint64_t seed = 7;
  std::size_t max_patch_len = 16;
  std::size_t gradient_instances = 20;
};

std::vector<CheckResult> run_invariant_battery(const BatteryConfig& cfg = {});

// Relative error |a - b| / max(|a|, |b|, floor), the measure used by the
// gradient check.
double relative_error(double analytic, double numeric, double floor = 1e-8);

// Largest relative error between probe_backward and central differences
// (step h) of an independent long double evaluation of the cross-entropy
// loss, over every parameter of one random
// probe instance with input dim `dim` and `num_classes` classes.
double probe_gradient_max_error(std::size_t dim, std::size_t num_classes, std::uint64_t seed,
                                double h = 1e-5, std::size_t hidden = 256);

}  // namespace ssmlab
