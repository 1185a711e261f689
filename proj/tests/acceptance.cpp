// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Reference values are computed here, independently of the library
// where the criterion allows it.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "ssmlab/extraction.hpp"
#include "ssmlab/geometry.hpp"
#include "ssmlab/harness.hpp"
#include "ssmlab/metrics.hpp"
#include "ssmlab/probe.hpp"
#include "ssmlab/ssm.hpp"
#include "support/probe_oracle.hpp"

namespace {

using ssmlab::LayerParams;
using ssmlab::OrthoConfig;
using ssmlab::ScanState;
using ssmlab::Vector;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s  %-34s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<Vector> gaussian_tokens(std::size_t len, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Vector> seq(len, Vector(dim));
  for (auto& t : seq)
    for (double& v : t) v = g(rng);
  return seq;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double scan_diff(const ssmlab::ScanResult& a, const ssmlab::ScanResult& b) {
  if (a.outputs.size() != b.outputs.size()) return INFINITY;
  double m = max_abs_diff(a.final_state.h.data(), b.final_state.h.data());
  for (std::size_t t = 0; t < a.outputs.size(); ++t) {
    m = std::max(m, max_abs_diff(a.outputs[t].y, b.outputs[t].y));
    m = std::max(m, max_abs_diff(a.outputs[t].h_next.h.data(), b.outputs[t].h_next.h.data()));
  }
  if (a.final_state.step_count != b.final_state.step_count) return INFINITY;
  return m;
}

Outcome chunk_carry() {
  const LayerParams p = ssmlab::random_layer_params(8, 16, 4, 1001);
  const auto seq = gaussian_tokens(32, 8, 1002);
  const auto t0 = Clock::now();
  const auto full = ssmlab::full_scan(p, seq);
  double worst = 0.0;
  for (std::size_t len = 1; len <= 32; ++len) {
    worst = std::max(worst, scan_diff(ssmlab::chunked_scan(p, seq, len, ScanState::zeros(16, 4)), full));
  }
  const double secs = seconds_since(t0);
  return {worst == 0.0 && secs < 1.0,
          "patch_len 1..32: max|diff| " + fmt("%.3g", worst) + " (need 0), " + fmt("%.3f", secs) +
              " s (limit 1 s)"};
}

Outcome eta_zero() {
  std::size_t differing = 0;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    std::mt19937_64 rng(2000 + i);
    const std::size_t dm = 1 + rng() % 8, D = 1 + rng() % 16, N = 1 + rng() % 8, len = 1 + rng() % 24;
    const LayerParams p = ssmlab::random_layer_params(dm, D, N, rng());
    const auto seq = gaussian_tokens(len, dm, rng());
    const double d = scan_diff(ssmlab::ortho_full_scan(p, seq, OrthoConfig{0.0}), ssmlab::full_scan(p, seq));
    worst = std::max(worst, d);
    differing += d != 0.0;
  }
  return {differing == 0, "100 instances, " + std::to_string(differing) +
                              " differ, max|diff| " + fmt("%.3g", worst) + " (need 0)"};
}

Outcome first_token() {
  double worst = 0.0;
  std::size_t cases = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const LayerParams p = ssmlab::random_layer_params(6, 12, 5, 3000 + i);
    const auto u = gaussian_tokens(1, 6, 3100 + i)[0];
    const ScanState zero = ScanState::zeros(12, 5);
    const auto v = ssmlab::scan_step(p, zero, u);
    for (double eta : {0.25, 0.5, 1.0}) {
      const auto o = ssmlab::ortho_scan_step(p, zero, u, OrthoConfig{eta});
      worst = std::max({worst, max_abs_diff(o.y, v.y), max_abs_diff(o.h_next.h.data(), v.h_next.h.data())});
      ++cases;
    }
  }
  return {worst == 0.0, std::to_string(cases) + " cases, eta in {0.25,0.5,1}: max|diff| " +
                            fmt("%.3g", worst) + " (need 0)"};
}

Outcome eta_one() {
  // The effective write at step t is h_t - abar * h_{t-1}; abar * h_{t-1}
  // is recovered as vanilla_step(h_{t-1}) - vanilla_step(0).
  double worst = 0.0;
  std::size_t rows = 0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const LayerParams p = ssmlab::random_layer_params(8, 16, 4, 4000 + i);
    const auto seq = gaussian_tokens(16, 8, 4100 + i);
    const auto res = ssmlab::ortho_full_scan(p, seq, OrthoConfig{1.0});
    const ScanState zero = ScanState::zeros(16, 4);
    for (std::size_t t = 1; t < seq.size(); ++t) {
      const auto& prev = res.outputs[t - 1].h_next.h;
      const auto from_prev = ssmlab::scan_step(p, res.outputs[t - 1].h_next, seq[t]).h_next.h;
      const auto from_zero = ssmlab::scan_step(p, zero, seq[t]).h_next.h;
      for (std::size_t d = 0; d < 16; ++d) {
        long double hw = 0, hh = 0, ww = 0;
        for (std::size_t n = 0; n < 4; ++n) {
          const long double decayed = (long double)from_prev(d, n) - from_zero(d, n);
          const long double w = (long double)res.outputs[t].h_next.h(d, n) - decayed;
          hw += prev(d, n) * w;
          hh += (long double)prev(d, n) * prev(d, n);
          ww += w * w;
        }
        if (hh == 0 || ww == 0) continue;
        worst = std::max(worst, static_cast<double>(std::abs(hw) / std::sqrt(hh * ww)));
        ++rows;
      }
    }
  }
  // Cross-check with the library's in-scan audit.
  double audited = 0.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const LayerParams p = ssmlab::random_layer_params(8, 16, 4, 4000 + i);
    ssmlab::OrthoAudit audit;
    ssmlab::ortho_full_scan(p, gaussian_tokens(16, 8, 4100 + i), OrthoConfig{1.0}, &audit);
    audited = std::max(audited, audit.max_relative_inner);
  }
  return {rows > 0 && worst <= 1e-10 && audited <= 1e-10,
          std::to_string(rows) + " rows: max |<h,w>|/(|h||w|) " + fmt("%.3g", worst) +
              " (limit 1e-10), in-scan audit " + fmt("%.3g", audited)};
}

Outcome gradients() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t entries = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto r = probe_oracle::check_instance(16, 2 + i % 2, 5000 + i);
    worst = std::max(worst, r.max_param_error);
    entries += r.entries;
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-5 && secs < 5.0,
          "20 instances (" + std::to_string(entries) + " entries): max rel err " + fmt("%.3g", worst) +
              " (limit 1e-5), " + fmt("%.2f", secs) + " s (limit 5 s)"};
}

Outcome collapse() {
  const auto t0 = Clock::now();
  const auto train = ssmlab::gen_collapse_set(64, 4 * 322, 4 * 721, 0.0, 0, ssmlab::Split::train);
  const auto val = ssmlab::gen_collapse_set(64, 322, 721, 0.0, 0);
  ssmlab::TrainConfig cfg;
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  const auto ckpts = ssmlab::train_probe(train, val, cfg, ssmlab::TaskMetric::mcc);
  bool ok = ckpts.size() == 3;
  std::vector<double> mccs;
  std::string per_seed;
  for (const auto& c : ckpts) {
    const auto ev = ssmlab::evaluate_probe(c, val.vectors);
    long long cm[2][2] = {{0, 0}, {0, 0}};
    std::size_t ones = 0;
    for (std::size_t i = 0; i < ev.predictions.size(); ++i) {
      cm[val.labels[i]][ev.predictions[i]]++;
      ones += ev.predictions[i] == 1;
    }
    const bool exact = cm[0][0] == 0 && cm[0][1] == 322 && cm[1][0] == 0 && cm[1][1] == 721;
    const double m = ssmlab::mcc(ssmlab::confusion(val.labels, ev.predictions, 2));
    mccs.push_back(m);
    ok = ok && exact && ones == 1043 && m == 0.0;
    per_seed += " seed " + std::to_string(c.seed) + " [[" + std::to_string(cm[0][0]) + "," +
                std::to_string(cm[0][1]) + "],[" + std::to_string(cm[1][0]) + "," +
                std::to_string(cm[1][1]) + "]]";
  }
  double mean = 0.0;
  for (double m : mccs) mean += m;
  mean /= mccs.size();
  double var = 0.0;
  for (double m : mccs) var += (m - mean) * (m - mean);
  const double sd = std::sqrt(var / mccs.size());
  const double secs = seconds_since(t0);
  ok = ok && mean == 0.0 && sd == 0.0 && secs < 30.0;
  return {ok, per_seed.substr(1) + "; MCC " + fmt("%.3f", mean) + " +- " + fmt("%.3f", sd) + ", " +
                  fmt("%.1f", secs) + " s (limit 30 s)"};
}

Outcome positive_control() {
  const auto train = ssmlab::gen_separable_set(64, 200, 10.0, 0, 1.0, ssmlab::Split::train);
  const auto val = ssmlab::gen_separable_set(64, 200, 10.0, 0, 1.0, ssmlab::Split::validation);
  ssmlab::TrainConfig cfg;
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  const auto runs = ssmlab::train_probe_runs(train, val, cfg, ssmlab::TaskMetric::accuracy);
  bool ok = runs.size() == 3;
  std::string detail;
  for (const auto& r : runs) {
    const auto ev = ssmlab::evaluate_probe(r.last, val.vectors);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < val.size(); ++i) correct += ev.predictions[i] == val.labels[i];
    const double acc = double(correct) / val.size();
    ok = ok && acc >= 0.95;
    detail += " seed " + std::to_string(r.best.seed) + " " + fmt("%.4f", acc);
  }
  return {ok, "epoch-10 val accuracy:" + detail + " (need >= 0.95)"};
}

Outcome anisotropy() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto vs = gaussian_tokens(10, 12, 6000 + s);
    std::vector<long double> cs;
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t j = i + 1; j < 10; ++j) {
        long double ab = 0, aa = 0, bb = 0;
        for (std::size_t k = 0; k < 12; ++k) {
          ab += (long double)vs[i][k] * vs[j][k];
          aa += (long double)vs[i][k] * vs[i][k];
          bb += (long double)vs[j][k] * vs[j][k];
        }
        cs.push_back(ab / std::sqrt(aa * bb));
      }
    long double mean = 0, var = 0;
    for (auto c : cs) mean += c;
    mean /= cs.size();
    for (auto c : cs) var += (c - mean) * (c - mean);
    const double sd = static_cast<double>(std::sqrt(var / cs.size()));
    const auto r = ssmlab::anisotropy_stats(ssmlab::cosine_matrix(vs), 45, static_cast<std::int64_t>(s));
    worst = std::max({worst, std::abs(r.mean - static_cast<double>(mean)), std::abs(r.std - sd)});
  }
  const auto set = ssmlab::gen_collapse_set(64, 50, 50, 1e-3, 6100);
  const auto r = ssmlab::anisotropy_stats(ssmlab::cosine_matrix(set.vectors), 100 * 99 / 2, 0);
  return {worst <= 1e-12 && r.mean >= 0.999,
          "50 sets: max|diff| vs brute force " + fmt("%.3g", worst) + " (limit 1e-12); K=100 noise 1e-3 mean " +
              fmt("%.6f", r.mean) + " (need >= 0.999)"};
}

Outcome angular_ratio() {
  const double ratio = ssmlab::angular_deviation(0.99) / ssmlab::angular_deviation(0.9999);
  return {std::abs(ratio - 10.0) <= 1e-12,
          "ratio " + fmt("%.15f", ratio) + ", |ratio-10| " + fmt("%.3g", std::abs(ratio - 10.0)) + " (limit 1e-12)"};
}

Outcome metric_closed_forms() {
  ssmlab::ConfusionMatrix cm(2);
  for (int i = 0; i < 322; ++i) cm.add(0, 1);
  for (int i = 0; i < 721; ++i) cm.add(1, 1);
  const double m = ssmlab::mcc(cm);
  const double acc = ssmlab::accuracy(cm);
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto a = gaussian_tokens(1, 40, 7000 + s)[0];
    auto b = gaussian_tokens(1, 40, 7200 + s)[0];
    std::vector<double> ta, tb;
    for (double x : a) ta.push_back(std::exp(x) + 3.0 * x);
    for (double x : b) tb.push_back(std::tanh(x) * 5.0 + x * x * x);
    worst = std::max(worst, std::abs(ssmlab::spearman(ta, tb) - ssmlab::spearman(a, b)));
  }
  const double acc_err = std::abs(acc - 721.0 / 1043.0);
  return {m == 0.0 && acc_err <= 1e-12 && worst <= 1e-12,
          "mcc " + fmt("%.3f", m) + " (need exactly 0), |acc-721/1043| " + fmt("%.3g", acc_err) +
              ", spearman drift over 100 series " + fmt("%.3g", worst) + " (limit 1e-12)"};
}

Outcome similarity_sanity() {
  const auto sp = ssmlab::gen_sts_pairs(500, 64, 8000);
  const auto r = ssmlab::unsupervised_similarity(sp.pairs, sp.gold);
  return {std::abs(r.spearman - 1.0) <= 1e-12,
          "500 pairs: spearman " + fmt("%.15f", r.spearman) + " (need 1 within 1e-12)"};
}

Outcome padding() {
  const LayerParams p = ssmlab::random_layer_params(8, 16, 4, 9000);
  double worst = 0.0;
  std::size_t cases = 0;
  for (auto st : {ssmlab::Strategy::patched, ssmlab::Strategy::mean_pool, ssmlab::Strategy::final_state,
                  ssmlab::Strategy::ortho_patched}) {
    for (auto pool : {ssmlab::BoundaryPool::mean_of_boundaries, ssmlab::BoundaryPool::last_boundary}) {
      ssmlab::ExtractionConfig cfg;
      cfg.strategy = st;
      cfg.patch_len = 4;
      cfg.pool = pool;
      for (std::size_t real = 1; real <= 13; ++real) {
        ssmlab::MaskedSequence base;
        base.embeddings = gaussian_tokens(real, 8, 9100 + real);
        base.mask.assign(real, 1);
        const auto want = ssmlab::extract(p, base, cfg).values;
        for (std::size_t pad = 1; pad <= 8; ++pad) {
          auto s = base;
          const auto junk = gaussian_tokens(pad, 8, 9200 + pad);
          s.embeddings.insert(s.embeddings.end(), junk.begin(), junk.end());
          s.mask.resize(real + pad, 0);
          worst = std::max(worst, max_abs_diff(ssmlab::extract(p, s, cfg).values, want));
          ++cases;
        }
      }
    }
  }
  return {worst == 0.0, "4 strategies x 2 pools x 13 lengths x 1..8 pads (" + std::to_string(cases) +
                            " cases): max|diff| " + fmt("%.3g", worst) + " (need 0)"};
}

}  // namespace

int main() {
  report("chunk-carry equivalence", chunk_carry);
  report("eta=0 reduction", eta_zero);
  report("first-token vanishing", first_token);
  report("eta=1 orthogonality", eta_one);
  report("gradient exactness", gradients);
  report("collapse reproduction", collapse);
  report("no-collapse positive control", positive_control);
  report("anisotropy metric correctness", anisotropy);
  report("angular deviation ratio", angular_ratio);
  report("metric closed forms", metric_closed_forms);
  report("unsupervised similarity sanity", similarity_sanity);
  report("padding invariance", padding);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
