#include "ssmlab/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ssmlab/errors.hpp"

namespace {

using ssmlab::ConfusionMatrix;

ConfusionMatrix from_rows(const std::vector<std::vector<int>>& rows) {
  ConfusionMatrix cm(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t p = 0; p < rows.size(); ++p)
      for (int i = 0; i < rows[t][p]; ++i) cm.add(t, p);
  return cm;
}

// Rank of each value as 1 + (#smaller) + (#equal - 1) / 2.
std::vector<double> counting_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double x : v) {
      if (x < v[i]) ++less;
      if (x == v[i]) ++equal;
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

long double pearson_ld(const std::vector<double>& a, const std::vector<double>& b) {
  long double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  long double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> random_series(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

TEST(Confusion, PerfectIsDiagonal) {
  const std::vector<int> y{0, 1, 2, 1, 0};
  const auto cm = ssmlab::confusion(y, y, 3);
  EXPECT_EQ(cm, from_rows({{2, 0, 0}, {0, 2, 0}, {0, 0, 1}}));
}

TEST(Confusion, MajorityPredictorCounts) {
  std::vector<int> truth(322, 0);
  truth.resize(1043, 1);
  const std::vector<int> pred(1043, 1);
  const auto cm = ssmlab::confusion(truth, pred, 2);
  EXPECT_EQ(cm.rows(), (std::vector<std::vector<std::uint64_t>>{{0, 322}, {0, 721}}));
  EXPECT_EQ(cm.total(), 1043u);
}

TEST(Confusion, HandTally) {
  const std::vector<int> truth{0, 0, 1, 1, 1, 0};
  const std::vector<int> pred{0, 1, 1, 0, 1, 0};
  EXPECT_EQ(ssmlab::confusion(truth, pred, 2), from_rows({{2, 1}, {1, 2}}));
}

TEST(Confusion, Errors) {
  const std::vector<int> a{0, 1}, b{0}, c{0, 2};
  EXPECT_THROW(ssmlab::confusion(a, b, 2), ssmlab::InputError);
  EXPECT_THROW(ssmlab::confusion(a, c, 2), ssmlab::InputError);
}

TEST(Mcc, MajorityPredictorIsExactlyZero) {
  EXPECT_EQ(ssmlab::mcc(from_rows({{0, 322}, {0, 721}})), 0.0);
}

TEST(Mcc, PerfectIsOne) { EXPECT_DOUBLE_EQ(ssmlab::mcc(from_rows({{322, 0}, {0, 721}})), 1.0); }

TEST(Mcc, ClosedFormOracle) {
  const long double tp = 45, tn = 40, fp = 10, fn = 5;
  const long double want =
      (tp * tn - fp * fn) / std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  EXPECT_NEAR(ssmlab::mcc(from_rows({{40, 10}, {5, 45}})), static_cast<double>(want), 1e-15);
}

TEST(Mcc, SwappingBothLabelsKeepsValue) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> count(0, 50);
  for (int i = 0; i < 100; ++i) {
    const int a = count(rng), b = count(rng), c = count(rng), d = count(rng);
    EXPECT_NEAR(ssmlab::mcc(from_rows({{a, b}, {c, d}})), ssmlab::mcc(from_rows({{d, c}, {b, a}})),
                1e-15);
  }
}

TEST(Mcc, NonBinaryUnsupported) {
  EXPECT_THROW(ssmlab::mcc(ConfusionMatrix(3)), ssmlab::InputError);
}

TEST(Accuracy, PerfectAndMajority) {
  const auto perfect = from_rows({{322, 0}, {0, 721}});
  EXPECT_EQ(ssmlab::accuracy(perfect), 1.0);
  EXPECT_EQ(ssmlab::f1_binary(perfect), 1.0);
  const auto majority = from_rows({{0, 322}, {0, 721}});
  EXPECT_NEAR(ssmlab::accuracy(majority), 721.0 / 1043.0, 1e-12);
}

TEST(Accuracy, MajorityEqualsLargestRowShare) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> count(1, 500);
  for (int i = 0; i < 50; ++i) {
    const int n0 = count(rng), n1 = count(rng);
    const int big = n0 >= n1 ? 0 : 1;
    const auto cm = big == 0 ? from_rows({{n0, 0}, {n1, 0}}) : from_rows({{0, n0}, {0, n1}});
    EXPECT_NEAR(ssmlab::accuracy(cm), double(std::max(n0, n1)) / (n0 + n1), 1e-15);
  }
}

TEST(F1, NoPredictedPositivesIsZero) {
  EXPECT_EQ(ssmlab::f1_binary(from_rows({{10, 0}, {5, 0}})), 0.0);
}

TEST(F1, HandValue) {
  // TP = 45, FP = 10, FN = 5: P = 45/55, R = 45/50.
  const double p = 45.0 / 55.0, r = 45.0 / 50.0;
  EXPECT_NEAR(ssmlab::f1_binary(from_rows({{40, 10}, {5, 45}})), 2 * p * r / (p + r), 1e-15);
}

TEST(Correlation, AffineIsOne) {
  const auto a = random_series(30, 5);
  std::vector<double> b;
  for (double x : a) b.push_back(2 * x + 3);
  EXPECT_NEAR(ssmlab::pearson(a, b), 1.0, 1e-12);
  EXPECT_NEAR(ssmlab::spearman(a, b), 1.0, 1e-12);
}

TEST(Correlation, ExpIsRankPerfect) {
  const auto a = random_series(30, 6);
  std::vector<double> b;
  for (double x : a) b.push_back(std::exp(x));
  EXPECT_NEAR(ssmlab::spearman(a, b), 1.0, 1e-12);
  EXPECT_LT(ssmlab::pearson(a, b), 1.0 - 1e-6);
}

TEST(Correlation, TiesMatchRankOracle) {
  const std::vector<double> a{1.0, 2.0, 2.0, 3.0, 5.0};
  const std::vector<double> b{4.0, 1.0, 4.0, 4.0, 0.5};
  EXPECT_EQ(ssmlab::average_ranks(a), (std::vector<double>{1, 2.5, 2.5, 4, 5}));
  EXPECT_EQ(ssmlab::average_ranks(b), counting_ranks(b));
  const double want = static_cast<double>(pearson_ld(counting_ranks(a), counting_ranks(b)));
  EXPECT_NEAR(ssmlab::spearman(a, b), want, 1e-14);
}

TEST(Correlation, RandomTiesMatchRankOracle) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> small(0, 6);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> a(20), b(20);
    for (auto& x : a) x = small(rng);
    for (auto& x : b) x = small(rng);
    EXPECT_EQ(ssmlab::average_ranks(a), counting_ranks(a));
    EXPECT_NEAR(ssmlab::spearman(a, b),
                static_cast<double>(pearson_ld(counting_ranks(a), counting_ranks(b))), 1e-13);
  }
}

TEST(Correlation, SpearmanInvariantUnderIncreasingMaps) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto a = random_series(25, 100 + seed);
    const auto b = random_series(25, 300 + seed);
    std::vector<double> ta, tb;
    for (double x : a) ta.push_back(std::exp(x) + x * x * x);
    for (double x : b) tb.push_back(std::atan(x) * 7 - 2);
    EXPECT_NEAR(ssmlab::spearman(ta, tb), ssmlab::spearman(a, b), 1e-12);
  }
}

TEST(Correlation, PearsonBounded) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto a = random_series(3 + seed % 20, seed);
    const auto b = random_series(3 + seed % 20, seed + 1000);
    const double r = ssmlab::pearson(a, b);
    EXPECT_LE(std::abs(r), 1.0 + 1e-12);
    EXPECT_NEAR(r, static_cast<double>(pearson_ld(a, b)), 1e-12);
  }
}

TEST(Correlation, ConstantSeriesIsDegenerate) {
  const std::vector<double> a{1, 2, 3}, c{2, 2, 2};
  EXPECT_THROW(ssmlab::pearson(a, c), ssmlab::DegenerateInputError);
  EXPECT_THROW(ssmlab::spearman(c, a), ssmlab::DegenerateInputError);
}

TEST(Correlation, ShapeErrors) {
  const std::vector<double> a{1, 2, 3}, b{1, 2}, one{1};
  EXPECT_THROW(ssmlab::pearson(a, b), ssmlab::InputError);
  EXPECT_THROW(ssmlab::spearman(one, one), ssmlab::InputError);
}

}  // namespace
