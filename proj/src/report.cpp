#include "ssmlab/report.hpp"

#include <algorithm>
#include <cmath>

namespace ssmlab {

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd r;
  if (values.empty()) return r;
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
    r.mean = values.front();
    return r;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(sq / static_cast<double>(values.size()));
  return r;
}

void EvalReport::finalize() {
  aggregate.clear();
  std::map<std::string, std::vector<double>> columns;
  for (const auto& s : per_seed)
    for (const auto& [name, value] : s.metrics) columns[name].push_back(value);
  for (const auto& [name, values] : columns) aggregate[name] = mean_std(values);

  confusion.reset();
  if (!per_seed.empty() && per_seed.front().confusion) {
    const auto& first = *per_seed.front().confusion;
    const bool same = std::all_of(per_seed.begin(), per_seed.end(), [&](const SeedResult& s) {
      return s.confusion && *s.confusion == first;
    });
    if (same) confusion = first;
  }
}

nlohmann::json to_json(const AnisotropyReport& r) {
  return {{"mean", r.mean},
          {"std", r.std},
          {"pair_count", r.pair_count},
          {"sampling_seed", r.sampling_seed},
          {"diagonal_excluded", r.diagonal_excluded},
          {"exhaustive", r.exhaustive}};
}

nlohmann::json to_json(const ConfusionMatrix& cm) { return cm.rows(); }

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json doc;
  doc["format"] = "ssm-eval-report";
  doc["version"] = 1;
  doc["task"] = r.task;
  doc["strategy"] = r.strategy;
  auto seeds = nlohmann::json::array();
  for (const auto& s : r.per_seed) {
    nlohmann::json entry = {{"seed", s.seed}, {"best_epoch", s.best_epoch}, {"metrics", s.metrics}};
    if (s.confusion) entry["confusion"] = to_json(*s.confusion);
    seeds.push_back(std::move(entry));
  }
  doc["per_seed"] = std::move(seeds);
  nlohmann::json agg = nlohmann::json::object();
  for (const auto& [name, ms] : r.aggregate) agg[name] = {{"mean", ms.mean}, {"std", ms.std}};
  doc["aggregate"] = std::move(agg);
  if (r.anisotropy) doc["anisotropy"] = to_json(*r.anisotropy);
  if (r.confusion) doc["confusion"] = to_json(*r.confusion);
  doc["config"] = r.config;
  return doc;
}

}  // namespace ssmlab
