#include "vqpool/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "support/oracles.hpp"
#include "vqpool/detail/rng.hpp"

using namespace vqpool;

TEST(RankWithTies, Examples) {
  EXPECT_EQ(rank_with_ties(std::vector<double>{10, 20, 30}), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(rank_with_ties(std::vector<double>{1, 2, 2, 3}), (std::vector<double>{1, 2.5, 2.5, 4}));
  EXPECT_EQ(rank_with_ties(std::vector<double>{7, 7}), (std::vector<double>{1.5, 1.5}));
  EXPECT_THROW(rank_with_ties(std::vector<double>{}), invalid_input_error);
}

TEST(Srcc, MonotoneMapsSaturate) {
  std::vector<double> x, y;
  for (int i = 1; i <= 12; ++i) {
    x.push_back(i);
    y.push_back(static_cast<double>(i) * i);  // strictly increasing transform
  }
  EXPECT_DOUBLE_EQ(srcc(x, y), 1.0);
  std::vector<double> rev(x.rbegin(), x.rend());
  EXPECT_DOUBLE_EQ(srcc(x, rev), -1.0);
}

TEST(Srcc, TieHandlingHandOracle) {
  // ranks [1, 2.5, 2.5, 4] vs [1, 2, 3, 4]: 4.5/sqrt(22.5)
  EXPECT_NEAR(srcc(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 2, 3, 4}),
              0.9486832980505138, 1e-12);
}

TEST(Srcc, Guards) {
  EXPECT_THROW(srcc(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
               undefined_correlation_error);
  EXPECT_THROW(srcc(std::vector<double>{1, 2}, std::vector<double>{1, 2}), invalid_input_error);
  EXPECT_THROW(srcc(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), invalid_input_error);
}

TEST(Plcc, Examples) {
  std::vector<double> x{0.5, 1.5, 2.25, 4.0, 5.5};
  std::vector<double> affine, negated;
  for (double v : x) {
    affine.push_back(3.0 * v + 2.0);
    negated.push_back(-v);
  }
  EXPECT_NEAR(plcc(x, affine), 1.0, 1e-12);
  EXPECT_NEAR(plcc(x, negated), -1.0, 1e-12);
  EXPECT_NEAR(plcc(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}), 0.5, 1e-12);
}

TEST(CorrelationProperties, InvarianceSymmetryAndRange) {
  detail::Rng rng(41);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> x(20), y(20);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.uniform(-2.0, 2.0);
      y[i] = rng.uniform(-2.0, 2.0);
    }
    // SRCC invariant under strictly increasing transforms of either side
    std::vector<double> ex(x.size()), cube(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      ex[i] = std::exp(x[i]);
      cube[i] = y[i] * y[i] * y[i];
    }
    const double rho = srcc(x, y);
    ASSERT_DOUBLE_EQ(srcc(ex, y), rho);
    ASSERT_DOUBLE_EQ(srcc(x, cube), rho);
    // PLCC invariant under positive affine transforms
    std::vector<double> ax(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) ax[i] = 1.7 * x[i] + 0.3;
    ASSERT_NEAR(plcc(ax, y), plcc(x, y), 1e-12);
    // symmetry and range
    ASSERT_DOUBLE_EQ(srcc(x, y), srcc(y, x));
    ASSERT_DOUBLE_EQ(plcc(x, y), plcc(y, x));
    ASSERT_LE(std::abs(rho), 1.0 + 1e-15);
    ASSERT_LE(std::abs(plcc(x, y)), 1.0 + 1e-15);
  }
}

TEST(Srcc, MatchesBruteForceOnTieHeavyVectors) {
  detail::Rng rng(42);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 5 + rng.index(40);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // quantized values force heavy ties
      x[i] = static_cast<double>(rng.index(6));
      y[i] = static_cast<double>(rng.index(4));
    }
    bool x_const = true, y_const = true;
    for (std::size_t i = 1; i < n; ++i) {
      x_const &= x[i] == x[0];
      y_const &= y[i] == y[0];
    }
    if (x_const || y_const) continue;
    ASSERT_NEAR(srcc(x, y), oracle::srcc(x, y), 1e-12);
  }
}

TEST(FitLogistic, RecoversNoiselessCurve) {
  const LogisticParams truth{4.8, 1.1, 2.9, 0.6};
  detail::Rng rng(43);
  std::vector<double> pred(120), mos(120);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = rng.uniform(1.0, 5.0);
    mos[i] = logistic_eval(truth, pred[i]);
  }
  const LogisticParams fit = fit_logistic(pred, mos);
  double sse = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = logistic_eval(fit, pred[i]) - mos[i];
    sse += r * r;
  }
  EXPECT_LT(std::sqrt(sse / static_cast<double>(pred.size())), 1e-6);
}

TEST(FitLogistic, DegenerateInputs) {
  std::vector<double> pred{1, 2, 3, 4, 5};
  std::vector<double> flat(5, 2.0);
  EXPECT_THROW(fit_logistic(pred, flat), invalid_input_error);
  EXPECT_THROW(fit_logistic(flat, pred), invalid_input_error);
  EXPECT_THROW(fit_logistic(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 3, 4}),
               invalid_input_error);
}

TEST(FitLogistic, MappingNeverHurtsPlccOnMonotoneData) {
  detail::Rng rng(44);
  std::vector<double> pred(150), mos(150);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = rng.uniform(0.0, 4.0);
    mos[i] = std::exp(pred[i] * 0.8);  // convex monotone relation
  }
  EXPECT_GE(plcc_after_logistic(pred, mos), plcc(pred, mos));
}

TEST(PlccAfterLogistic, IdentityAndWarpedData) {
  detail::Rng rng(45);
  std::vector<double> pred(200);
  for (double& v : pred) v = rng.uniform(1.0, 5.0);
  EXPECT_GE(plcc_after_logistic(pred, pred), 1.0 - 1e-9);

  const LogisticParams truth{5.0, 1.0, 3.0, 0.7};
  std::vector<double> warped(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) warped[i] = logistic_eval(truth, pred[i]);
  EXPECT_GE(plcc_after_logistic(pred, warped), 0.999);
}

TEST(PlccAfterLogistic, IndependentNoiseStaysNearZero) {
  detail::Rng rng(46);
  std::vector<double> pred(200), mos(200);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = rng.uniform(0.0, 1.0);
    mos[i] = rng.uniform(0.0, 1.0);
  }
  EXPECT_LT(std::abs(plcc_after_logistic(pred, mos)), 0.2);
}

TEST(MedianOf, Examples) {
  EXPECT_DOUBLE_EQ(median_of(std::vector<double>{1, 3, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median_of(std::vector<double>{1, 2, 3, 4}), 2.5);
  EXPECT_DOUBLE_EQ(median_of(std::vector<double>{0.125}), 0.125);
  EXPECT_THROW(median_of(std::vector<double>{}), invalid_input_error);
}
