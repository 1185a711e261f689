#include "ssmlab/probe.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "ssmlab/errors.hpp"
#include "ssmlab/harness.hpp"
#include "ssmlab/metrics.hpp"
#include "support/probe_oracle.hpp"

namespace {

using ssmlab::Checkpoint;
using ssmlab::ProbeParams;
using ssmlab::TaskMetric;
using ssmlab::TrainConfig;
using ssmlab::Vector;

// d = 4, hidden = 3, C = 2 with hand-picked weights.
ProbeParams hand_params() {
  ProbeParams p = ProbeParams::zeros(4, 2, 3);
  p.ln_gain.assign(4, 1.0);
  p.w1(0, 0) = 1;
  p.w1(1, 3) = 1;
  p.w1(2, 0) = -1;
  p.w1(2, 1) = -1;
  p.b1 = {0, 0.5, 0};
  p.w2(0, 0) = 1; p.w2(0, 1) = 1; p.w2(0, 2) = 1;
  p.w2(1, 0) = 0; p.w2(1, 1) = 2; p.w2(1, 2) = -1;
  p.b2 = {0.1, -0.2};
  return p;
}

TEST(ProbeForward, HandOracle) {
  // x = (1,2,3,4): mean 2.5, var 1.25, r = 1/sqrt(1.25 + eps).
  // xhat = (-1.5r, -0.5r, 0.5r, 1.5r); act = (0, 1.5r + 0.5, 2r).
  const double r = 1.0 / std::sqrt(1.25 + 1e-5);
  const auto out = ssmlab::probe_forward(hand_params(), Vector{1, 2, 3, 4});
  EXPECT_NEAR(out.logits[0], 3.5 * r + 0.6, 1e-14);
  EXPECT_NEAR(out.logits[1], r + 0.8, 1e-14);

  Checkpoint ckpt{hand_params(), 1, 0.0, 0, std::nullopt};
  const auto ev = ssmlab::evaluate_probe(ckpt, {Vector{1, 2, 3, 4}});
  EXPECT_EQ(ev.predictions, std::vector<int>{0});
}

TEST(ProbeForward, DropoutScalesKeptUnits) {
  const ProbeParams p = hand_params();
  ssmlab::DropoutMask mask{{1, 0, 1}, 0.5};
  const auto out = ssmlab::probe_forward(p, Vector{1, 2, 3, 4}, &mask);
  const double r = 1.0 / std::sqrt(1.25 + 1e-5);
  // Unit 1 dropped, unit 2 doubled.
  EXPECT_NEAR(out.logits[0], 4 * r + 0.1, 1e-14);
  EXPECT_NEAR(out.logits[1], -4 * r - 0.2, 1e-14);
}

TEST(ProbeForward, ConstantInputsGiveIdenticalLogits) {
  const ProbeParams p = ssmlab::init_probe_params(16, 2, 5);
  const auto ref = ssmlab::probe_forward(p, Vector(16, 0.0));
  for (double c : {1.0, -3.5, 0.1, 1e6, -1e-9, 12345.678}) {
    const auto out = ssmlab::probe_forward(p, Vector(16, c));
    EXPECT_EQ(out.logits, ref.logits) << "c = " << c;
    for (double v : out.cache.xhat) EXPECT_EQ(v, 0.0);
  }
}

TEST(ProbeForward, ZeroParamsGiveZeroLogits) {
  const ProbeParams p = ProbeParams::zeros(8, 3);
  const auto out = ssmlab::probe_forward(p, Vector{1, -2, 3, 0, 5, 6, -7, 8});
  EXPECT_EQ(out.logits, Vector(3, 0.0));
}

TEST(ProbeForward, Errors) {
  const ProbeParams p = ssmlab::init_probe_params(4, 2, 1);
  EXPECT_THROW(ssmlab::probe_forward(p, Vector{1, 2, 3}), ssmlab::UsageError);
  EXPECT_THROW(ssmlab::probe_forward(p, Vector{1, 2, NAN, 4}), ssmlab::NumericError);
}

TEST(ProbeBackward, MatchesFiniteDifferences) {
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto rep = probe_oracle::check_instance(16, 2 + i % 2, 900 + i);
    EXPECT_LE(rep.max_param_error, 1e-5) << "instance " << i;
    EXPECT_LE(rep.max_input_error, 1e-5) << "instance " << i;
  }
}

TEST(ProbeBackward, ZeroUpstreamGivesZeroGradients) {
  const ProbeParams p = ssmlab::init_probe_params(8, 3, 2);
  const auto fwd = ssmlab::probe_forward(p, Vector{1, 2, 3, 4, 5, 6, 7, 9});
  const auto g = ssmlab::probe_backward(p, fwd.cache, Vector(3, 0.0));
  for (auto t : std::as_const(g.params).tensors())
    for (double v : t) EXPECT_EQ(v, 0.0);
  for (double v : g.input) EXPECT_EQ(v, 0.0);
}

TEST(ProbeBackward, DuplicatedSampleDoubles) {
  const ProbeParams p = ssmlab::init_probe_params(8, 2, 3);
  const Vector x{0.5, -1, 2, 0, 1, 3, -2, 1};
  const auto fwd = ssmlab::probe_forward(p, x);
  const auto ce = ssmlab::softmax_cross_entropy(fwd.logits, 1);
  ProbeParams once = ProbeParams::zeros(8, 2);
  ProbeParams twice = ProbeParams::zeros(8, 2);
  ssmlab::probe_backward_accumulate(p, fwd.cache, ce.grad, once);
  ssmlab::probe_backward_accumulate(p, fwd.cache, ce.grad, twice);
  ssmlab::probe_backward_accumulate(p, fwd.cache, ce.grad, twice);
  const auto a = std::as_const(once).tensors();
  const auto b = std::as_const(twice).tensors();
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < a[k].size(); ++i) EXPECT_EQ(b[k][i], 2.0 * a[k][i]);
}

TEST(ProbeBackward, MismatchedCacheIsUsageError) {
  const ProbeParams small = ssmlab::init_probe_params(4, 2, 1);
  const ProbeParams big = ssmlab::init_probe_params(6, 2, 1);
  const auto fwd = ssmlab::probe_forward(small, Vector{1, 2, 3, 4});
  EXPECT_THROW(ssmlab::probe_backward(big, fwd.cache, Vector{1, 0}), ssmlab::UsageError);
  EXPECT_THROW(ssmlab::probe_backward(small, fwd.cache, Vector{1, 0, 0}), ssmlab::UsageError);
}

TEST(SoftmaxCrossEntropy, KnownValue) {
  const auto r = ssmlab::softmax_cross_entropy(Vector{0.0, std::log(3.0)}, 0);
  EXPECT_NEAR(r.loss, std::log(4.0), 1e-15);
  EXPECT_NEAR(r.grad[0], 0.25 - 1.0, 1e-15);
  EXPECT_NEAR(r.grad[1], 0.75, 1e-15);
}

TEST(Argmax, TiesGoToLowestIndex) {
  EXPECT_EQ(ssmlab::argmax(Vector{1.0, 3.0, 3.0}), 1);
  EXPECT_EQ(ssmlab::argmax(Vector{2.0, 2.0}), 0);
  Checkpoint ckpt{ProbeParams::zeros(3, 4), 1, 0.0, 0, std::nullopt};
  const auto ev = ssmlab::evaluate_probe(ckpt, {Vector{1, 2, 3}, Vector{4, 4, 4}});
  EXPECT_EQ(ev.predictions, (std::vector<int>{0, 0}));
}

TEST(CosineLr, Endpoints) {
  EXPECT_EQ(ssmlab::cosine_lr(2e-3, 0, 10), 2e-3);
  EXPECT_NEAR(ssmlab::cosine_lr(2e-3, 5, 10), 1e-3, 1e-18);
  EXPECT_NEAR(ssmlab::cosine_lr(2e-3, 10, 10), 0.0, 1e-18);
  double prev = 1.0;
  for (std::size_t e = 0; e < 10; ++e) {
    const double lr = ssmlab::cosine_lr(2e-3, e, 10);
    EXPECT_LT(lr, prev);
    EXPECT_GT(lr, 0.0);
    prev = lr;
  }
}

TEST(AdamW, FirstStepMovesBySignTimesLr) {
  ProbeParams p = ProbeParams::zeros(2, 2, 2);
  ProbeParams g = ProbeParams::zeros(2, 2, 2);
  p.b2 = {1.0, -1.0};
  g.b2 = {0.5, -2.0};
  ssmlab::AdamState st{ProbeParams::zeros(2, 2, 2), ProbeParams::zeros(2, 2, 2), 0};
  TrainConfig cfg;
  ssmlab::adamw_step(p, g, st, cfg, 0.1);
  // Bias-corrected first step is g / (|g| + eps); decay shrinks by 1 - lr * wd.
  EXPECT_NEAR(p.b2[0], 1.0 * (1 - 0.1 * 0.01) - 0.1 * 0.5 / (0.5 + 1e-8), 1e-12);
  EXPECT_NEAR(p.b2[1], -1.0 * (1 - 0.1 * 0.01) + 0.1 * 2.0 / (2.0 + 1e-8), 1e-12);
  EXPECT_EQ(st.step, 1u);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), ssmlab::ConfigError);
  cfg = TrainConfig{};
  cfg.dropout_p = 1.0;
  EXPECT_THROW(cfg.validate(), ssmlab::ConfigError);
  cfg = TrainConfig{};
  cfg.lr = 0.0;
  EXPECT_THROW(cfg.validate(), ssmlab::ConfigError);
}

TEST(TrainProbe, SeparableSetReachesHighAccuracy) {
  // Centers 1.0 apart with per-coordinate std 0.1.
  const auto train = ssmlab::gen_separable_set(64, 200, 1.0, 3, 0.1, ssmlab::Split::train);
  const auto val = ssmlab::gen_separable_set(64, 100, 1.0, 3, 0.1, ssmlab::Split::validation);
  TrainConfig cfg;
  cfg.threads = 3;
  const auto ckpts = ssmlab::train_probe(train, val, cfg, TaskMetric::accuracy);
  ASSERT_EQ(ckpts.size(), 3u);
  for (const auto& c : ckpts) {
    EXPECT_GE(c.val_metric, 0.95) << "seed " << c.seed;
    EXPECT_GE(c.epoch, 1u);
    EXPECT_LE(c.epoch, 10u);
  }
}

TEST(TrainProbe, ConstantFeaturesCollapseToMajority) {
  const auto train = ssmlab::gen_collapse_set(32, 4 * 322, 4 * 721, 0.0, 9, ssmlab::Split::train);
  const auto val = ssmlab::gen_collapse_set(32, 322, 721, 0.0, 9);
  TrainConfig cfg;
  cfg.threads = 3;
  const auto runs = ssmlab::train_probe_runs(train, val, cfg, TaskMetric::mcc);
  for (const auto& run : runs) {
    for (const Checkpoint* c : {&run.best, &run.last}) {
      const auto ev = ssmlab::evaluate_probe(*c, val.vectors);
      EXPECT_EQ(ev.predictions, std::vector<int>(1043, 1));
    }
    EXPECT_EQ(run.val_history, std::vector<double>(10, 0.0));
    EXPECT_EQ(run.best.epoch, 1u);
  }
}

TEST(TrainProbe, OneEpochGivesOneCheckpointPerSeed) {
  const auto train = ssmlab::gen_separable_set(8, 20, 4.0, 1);
  const auto val = ssmlab::gen_separable_set(8, 10, 4.0, 1, 1.0, ssmlab::Split::validation);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.seeds = {1, 2, 3, 4};
  const auto runs = ssmlab::train_probe_runs(train, val, cfg, TaskMetric::accuracy);
  ASSERT_EQ(runs.size(), 4u);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    EXPECT_EQ(runs[i].best.epoch, 1u);
    EXPECT_EQ(runs[i].best.seed, cfg.seeds[i]);
    EXPECT_EQ(runs[i].val_history.size(), 1u);
    EXPECT_EQ(runs[i].best.params, runs[i].last.params);
  }
}

TEST(TrainProbe, SeedDeterministicAndThreadIndependent) {
  const auto train = ssmlab::gen_separable_set(12, 40, 2.0, 4);
  const auto val = ssmlab::gen_separable_set(12, 20, 2.0, 4, 1.0, ssmlab::Split::validation);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.threads = 1;
  const auto a = ssmlab::train_probe(train, val, cfg, TaskMetric::accuracy);
  cfg.threads = 3;
  const auto b = ssmlab::train_probe(train, val, cfg, TaskMetric::accuracy);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].params, b[i].params);
    EXPECT_EQ(a[i].epoch, b[i].epoch);
    EXPECT_EQ(a[i].val_metric, b[i].val_metric);
  }
  EXPECT_NE(a[0].params, a[1].params);
}

TEST(TrainProbe, LabelOutOfRangeIsInputError) {
  auto train = ssmlab::gen_separable_set(4, 5, 2.0, 1);
  const auto val = ssmlab::gen_separable_set(4, 5, 2.0, 1, 1.0, ssmlab::Split::validation);
  TrainConfig cfg;
  cfg.num_classes = 2;
  train.labels[3] = 2;
  EXPECT_THROW(ssmlab::train_probe(train, val, cfg, TaskMetric::accuracy), ssmlab::InputError);
}

TEST(EvaluateProbe, DoesNotMutateAndIsDeterministic) {
  Checkpoint ckpt{ssmlab::init_probe_params(6, 3, 8), 2, 0.5, 42, std::nullopt};
  const ProbeParams before = ckpt.params;
  const std::vector<Vector> data{{1, 2, 3, 4, 5, 6}, {0, 0, 1, 0, 0, 0}};
  const auto a = ssmlab::evaluate_probe(ckpt, data);
  const auto b = ssmlab::evaluate_probe(ckpt, data);
  EXPECT_EQ(ckpt.params, before);
  EXPECT_EQ(a.logits, b.logits);
  EXPECT_THROW(ssmlab::evaluate_probe(ckpt, {Vector{1, 2}}), ssmlab::UsageError);
}

TEST(Checkpoint, JsonRoundTrip) {
  const auto train = ssmlab::gen_separable_set(5, 10, 3.0, 2);
  const auto val = ssmlab::gen_separable_set(5, 5, 3.0, 2, 1.0, ssmlab::Split::validation);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seeds = {7};
  cfg.hidden = 8;
  const auto ckpt = ssmlab::train_probe(train, val, cfg, TaskMetric::accuracy).at(0);
  const auto path = std::filesystem::temp_directory_path() / "ssmlab_ckpt_test.json";
  ssmlab::save_checkpoint(ckpt, path);
  const auto back = ssmlab::load_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.params, ckpt.params);
  EXPECT_EQ(back.epoch, ckpt.epoch);
  EXPECT_EQ(back.val_metric, ckpt.val_metric);
  EXPECT_EQ(back.seed, ckpt.seed);
  ASSERT_TRUE(back.optimizer.has_value());
  EXPECT_EQ(back.optimizer->m, ckpt.optimizer->m);
  EXPECT_EQ(back.optimizer->step, ckpt.optimizer->step);
}

}  // namespace
