#include "dirinfo/logit.hpp"
#include "test_util.hpp"

#include <numeric>

using namespace dirinfo;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST(Design, LagRows) {
  const std::vector<double> y{1, 2, 3, 4};
  const auto past = build_design(y, 1, false);
  Eigen::MatrixXd want(3, 2);
  want << 1, 1, 1, 2, 1, 3;
  EXPECT_EQ(past.rows, want);
  const auto cur = build_design(y, 1, true);
  Eigen::MatrixXd want_cur(3, 3);
  want_cur << 1, 2, 1, 1, 3, 2, 1, 4, 3;
  EXPECT_EQ(cur.rows, want_cur);
  EXPECT_EQ(past.width(), 2);
  EXPECT_EQ(cur.width(), 3);
}

TEST(Design, WindowRowCount) {
  const std::vector<double> y(59, 0.5);
  EXPECT_EQ(build_design(y, 7, false).size(), 52);
  EXPECT_EQ(build_design(y, 7, true).width(), 9);
  EXPECT_ERROR_KIND(build_design(std::vector<double>{1.0, 2.0}, 2, false), TooShort);
}

TEST(FitMl, NoSignalGivesFlatSlopes) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  const int n = 4000;
  Eigen::MatrixXd x(n, 2);
  std::vector<int> cls(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = nd(rng);
    cls[static_cast<std::size_t>(i)] = i % 2;
  }
  MlFitTrace trace;
  const auto beta = fit_ml(cls, 2, x, {}, &trace);
  EXPECT_TRUE(trace.converged);
  EXPECT_NEAR(beta(0, 1), 0.0, 0.1);
  EXPECT_NEAR(beta(0, 0), 0.0, 0.1);
  EXPECT_EQ(beta.row(1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FitMl, SeparableHitsCap) {
  // Margin 0.2 per unit slope: the likelihood still climbs at |beta| = 30.
  Eigen::MatrixXd x(40, 2);
  std::vector<int> cls(40);
  for (int i = 0; i < 40; ++i) {
    const double mag = 0.2 + 0.005 * (i % 20);
    x(i, 0) = 1.0;
    x(i, 1) = i < 20 ? -mag : mag;
    cls[static_cast<std::size_t>(i)] = i < 20 ? 0 : 1;
  }
  MlFitTrace trace;
  const auto beta = fit_ml(cls, 2, x, {}, &trace);
  EXPECT_TRUE(trace.converged);
  EXPECT_NEAR(std::abs(beta(0, 1)), 30.0, 1e-9);
  EXPECT_LE(beta.cwiseAbs().maxCoeff(), 30.0);
  const auto model = ShrinkageLogitModel::make(beta, Eigen::VectorXd::Zero(2), 0.0, 1);
  for (int i = 0; i < 40; ++i) {
    const auto p = predict(model, Eigen::VectorXd(x.row(i).transpose()));
    EXPECT_GE(p.probs[static_cast<std::size_t>(cls[static_cast<std::size_t>(i)])], 0.95);
  }
}

TEST(FitMl, RecoversLogisticSlope) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u;
  const int n = 5000;
  Eigen::MatrixXd x(n, 2);
  std::vector<int> cls(n);
  for (int i = 0; i < n; ++i) {
    const double y = nd(rng);
    x(i, 0) = 1.0;
    x(i, 1) = y;
    // Class 0 carries the free row, so P(class 0 | y) = sigmoid(2y).
    cls[static_cast<std::size_t>(i)] = u(rng) < sigmoid(2.0 * y) ? 0 : 1;
  }
  const auto beta = fit_ml(cls, 2, x);
  EXPECT_NEAR(beta(0, 1), 2.0, 0.2);
  EXPECT_NEAR(beta(0, 0), 0.0, 0.2);
}

TEST(FitMl, LikelihoodNonDecreasing) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> k(0, 4);
  const int n = 300;
  Eigen::MatrixXd x(n, 3);
  std::vector<int> cls(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = nd(rng);
    x(i, 2) = nd(rng);
    cls[static_cast<std::size_t>(i)] = (x(i, 1) > 0.5 ? 2 : 0) + k(rng) % 3;
  }
  MlFitTrace trace;
  const auto beta = fit_ml(cls, 5, x, {}, &trace);
  ASSERT_GE(trace.log_likelihood.size(), 2u);
  for (std::size_t i = 0; i + 1 < trace.log_likelihood.size(); ++i) {
    EXPECT_GE(trace.log_likelihood[i + 1], trace.log_likelihood[i] - 1e-9);
  }
  EXPECT_TRUE(trace.converged);
  EXPECT_NEAR(log_likelihood(cls, beta, x), trace.log_likelihood.back(), 1e-8);
  EXPECT_LE(beta.cwiseAbs().maxCoeff(), 30.0);
}

TEST(FitMl, Errors) {
  std::vector<int> none;
  EXPECT_ERROR_KIND(fit_ml(none, 2, Eigen::MatrixXd(0, 2)), EmptyInput);
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 2);
  x(1, 1) = std::nan("");
  std::vector<int> cls{0, 1, 0};
  EXPECT_ERROR_KIND(fit_ml(cls, 2, x), BadInput);
}

TEST(Target, InverseStd) {
  ConditioningDesign d;
  d.rows.resize(4, 3);
  // Sample variances 1 and 4 (n - 1 denominator).
  const double a = std::sqrt(3.0) / 2.0;
  d.rows << 1, a, 2 * a,
            1, -a, -2 * a,
            1, a, 2 * a,
            1, -a, -2 * a;
  const auto t = shrinkage_target(d);
  EXPECT_DOUBLE_EQ(t(0), 0.0);
  EXPECT_NEAR(t(1), 1.0, 1e-12);
  EXPECT_NEAR(t(2), 0.5, 1e-12);
  d.rows.col(2).setConstant(3.0);
  EXPECT_ERROR_KIND(shrinkage_target(d), DegenerateColumn);
  EXPECT_DOUBLE_EQ(shrinkage_target_lenient(d.rows)(2), 0.0);
}

TEST(Shrink, ConvexCombination) {
  Eigen::MatrixXd b(2, 2), t(2, 2);
  b << 2, 4, -1, 0;
  t << 1, 1, 1, 1;
  EXPECT_EQ(shrink(b, t, 0.0), b);
  EXPECT_EQ(shrink(b, t, 1.0), t);
  EXPECT_DOUBLE_EQ(shrink(b, t, 0.5)(0, 0), 1.5);
  // Affine in lambda: exact at the quarter points.
  for (double l : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const Eigen::MatrixXd s = shrink(b, t, l);
    const Eigen::MatrixXd lin = shrink(b, t, 0.0) + l * (shrink(b, t, 1.0) - shrink(b, t, 0.0));
    EXPECT_LE((s - lin).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_ERROR_KIND(shrink(b, t, 1.5), BadLambda);
  EXPECT_ERROR_KIND(shrink(b, t, -0.1), BadLambda);
}

TEST(Shrink, ModelInvariant) {
  Eigen::MatrixXd b(3, 2);
  b << 0.3, -2, 1.2, 0.5, 0, 0;
  Eigen::VectorXd t(2);
  t << 0.0, 0.8;
  const auto m = ShrinkageLogitModel::make(b, t, 0.3, 1);
  EXPECT_LE((m.beta - (m.lambda * m.target + (1 - m.lambda) * m.beta_ml)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(m.class_count, 3);
  EXPECT_EQ(m.regressor_dim, 2);
}

TEST(Predict, Examples) {
  const auto zero = ShrinkageLogitModel::make(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(2), 0.0, 1);
  const auto u = predict(zero, Eigen::Vector2d(1.0, 0.7));
  for (double p : u.probs) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2, 1);
  b(0, 0) = std::log(2.0);
  const auto m = ShrinkageLogitModel::make(b, Eigen::VectorXd::Zero(1), 0.0, 1);
  const auto p = predict(m, Eigen::VectorXd::Ones(1));
  EXPECT_NEAR(p.probs[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(p.probs[1], 1.0 / 3.0, 1e-12);

  Eigen::MatrixXd low = Eigen::MatrixXd::Constant(3, 1, -30.0);
  low(2, 0) = 0.0;
  const auto pinned = predict(ShrinkageLogitModel::make(low, Eigen::VectorXd::Zero(1), 0.0, 1), Eigen::VectorXd::Ones(1));
  EXPECT_GT(pinned.probs[2], 1.0 - 1e-12);

  EXPECT_ERROR_KIND(predict(m, Eigen::VectorXd::Ones(3)), ShapeError);
}

TEST(Predict, SimplexAndColumnPermutation) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd b(4, 3);
  for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 5.0 * nd(rng);
  b.row(3).setZero();
  Eigen::MatrixXd bp = b;
  bp.col(1).swap(bp.col(2));
  const auto m = ShrinkageLogitModel::make(b, Eigen::VectorXd::Zero(3), 0.0, 1);
  const auto mp = ShrinkageLogitModel::make(bp, Eigen::VectorXd::Zero(3), 0.0, 1);
  for (int r = 0; r < 50; ++r) {
    Eigen::Vector3d row(1.0, nd(rng), nd(rng));
    Eigen::Vector3d rowp(row(0), row(2), row(1));
    const auto p = predict(m, row);
    const auto q = predict(mp, rowp);
    EXPECT_NEAR(std::accumulate(p.probs.begin(), p.probs.end(), 0.0), 1.0, 1e-12);
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_GE(p.probs[k], 0.0);
      EXPECT_NEAR(p.probs[k], q.probs[k], 1e-12);
    }
  }
}

TEST(Entropy, MatchesPredict) {
  Eigen::MatrixXd b(3, 2);
  b << 0.4, -1, 1.1, 0.3, 0, 0;
  Eigen::MatrixXd x(4, 2);
  x << 1, 0.1, 1, -2, 1, 0.7, 1, 3;
  const auto m = ShrinkageLogitModel::make(b, Eigen::VectorXd::Zero(2), 0.0, 1);
  double h = 0.0;
  for (int i = 0; i < 4; ++i) h += predict(m, Eigen::VectorXd(x.row(i).transpose())).entropy();
  EXPECT_NEAR(mean_entropy(b, x), h / 4.0, 1e-12);
  // Row selections with repeats weight each occurrence.
  const std::vector<int> rows{1, 1, 3};
  const double h1 = predict(m, Eigen::VectorXd(x.row(1).transpose())).entropy();
  const double h3 = predict(m, Eigen::VectorXd(x.row(3).transpose())).entropy();
  EXPECT_NEAR(mean_entropy(b, x, rows), (2 * h1 + h3) / 3.0, 1e-12);
}

TEST(CompactClasses, OrderPreserving) {
  std::vector<int> codes{7, 3, 7, 11, 3};
  EXPECT_EQ(compact_classes(codes), 3);
  EXPECT_EQ(codes, (std::vector<int>{1, 0, 1, 2, 0}));
}

TEST(DeriveSeed, DistinctAndStable) {
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_NE(derive_seed(0, 0, 0), derive_seed(0, 0, 1));
}

namespace {

// Two-class problem: class is a noisy function of the current regressor.
ContrastProblem signal_problem(int n, double strength, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u;
  ContrastProblem p;
  p.class_count = 2;
  p.reduced.resize(n, 2);
  p.full.resize(n, 3);
  double prev = nd(rng);
  for (int i = 0; i < n; ++i) {
    const double cur = nd(rng);
    p.classes.push_back(u(rng) < sigmoid(strength * cur) ? 0 : 1);
    p.reduced.row(i) << 1.0, prev;
    p.full.row(i) << 1.0, cur, prev;
    prev = cur;
  }
  return p;
}

}  // namespace

TEST(OptimizeLambda, LargeSampleSmallLambda) {
  const auto p = signal_problem(100000, 3.0, 4);
  const auto s = optimize_lambda(p, 20, 9);
  EXPECT_LE(s.lambda_opt, 0.1);
  // MSE curve increases away from the optimum on the grid.
  const auto at = [&](double l) {
    for (auto [x, v] : s.mse_curve) {
      if (std::abs(x - l) < 1e-12) return v;
    }
    return std::nan("");
  };
  EXPECT_LT(at(0.1), at(0.5));
  EXPECT_LT(at(0.5), at(1.0));
}

TEST(OptimizeLambda, NoiseFavoursShrinkage) {
  const auto p = signal_problem(30, 0.0, 2);
  const auto s = optimize_lambda(p, 30, 1);
  EXPECT_GE(s.lambda_opt, 0.5);
}

TEST(OptimizeLambda, BoundsAndEndpoints) {
  for (unsigned seed = 0; seed < 6; ++seed) {
    const auto p = signal_problem(60 + 40 * static_cast<int>(seed), 1.0, seed);
    const auto s = optimize_lambda(p, 20, seed);
    EXPECT_GE(s.lambda_opt, 0.0);
    EXPECT_LE(s.lambda_opt, 1.0);
    double m0 = std::nan(""), m1 = std::nan("");
    for (auto [l, v] : s.mse_curve) {
      if (l == 0.0) m0 = v;
      if (l == 1.0) m1 = v;
      EXPECT_GE(v, s.mse_opt);
    }
    EXPECT_LE(s.mse_opt, m0);
    EXPECT_LE(s.mse_opt, m1);
  }
}

TEST(OptimizeLambda, Preconditions) {
  const auto p = signal_problem(100, 1.0, 1);
  EXPECT_ERROR_KIND(optimize_lambda(p, 5, 1), Validation);
  const auto tiny = signal_problem(5, 1.0, 1);
  EXPECT_ERROR_KIND(optimize_lambda(tiny, 20, 1), TooFewTrials);
}

TEST(Bootstrap, OrderIndependentSeeds) {
  const auto p = signal_problem(200, 1.0, 3);
  const auto a = bootstrap_contrast(p, 5, 42);
  const auto b = bootstrap_contrast(p, 5, 42);
  ASSERT_EQ(a.rows.size(), 5u);
  for (std::size_t r = 0; r < 5; ++r) {
    EXPECT_EQ(a.rows[r], b.rows[r]);
    EXPECT_EQ(a.fits[r].beta_full_ml, b.fits[r].beta_full_ml);
  }
  // Replicate 3 is the same whether or not replicates 0..2 are drawn first.
  const auto more = bootstrap_contrast(p, 8, 42);
  EXPECT_EQ(more.rows[3], a.rows[3]);
}

TEST(Bootstrap, WarmStartSameOptimum) {
  const auto p = signal_problem(400, 2.0, 6);
  const auto full = fit_contrast(p);
  const auto cold = bootstrap_contrast(p, 4, 5);
  const auto warm = bootstrap_contrast(p, 4, 5, {}, &full);
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_NEAR(cold.fits[r].value(0.0, p, cold.rows[r]), warm.fits[r].value(0.0, p, warm.rows[r]), 1e-5);
  }
}
