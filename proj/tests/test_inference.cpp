#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace suelogit;

TEST(Sigma2, HandExamples) {
  EXPECT_DOUBLE_EQ(estimate_sigma2(Vector::Zero(5), 2), 0.0);
  EXPECT_DOUBLE_EQ(estimate_sigma2((Vector(4) << 1, -1, 2, 0).finished(), 2), 3.0);
  EXPECT_DOUBLE_EQ(estimate_sigma2((Vector(3) << 0, -1.5, 0).finished(), 2), 2.25);
}

TEST(Sigma2, RequiresMoreObservationsThanCoefficients) {
  EXPECT_THROW(estimate_sigma2(Vector::Ones(2), 2), DegreesOfFreedomError);
  EXPECT_THROW(estimate_sigma2(Vector::Ones(1), 3), DegreesOfFreedomError);
}

TEST(Covariance, IdentityJacobianAndLinearScaling) {
  const CovarianceResult a = coefficient_covariance(Matrix::Identity(3, 3), 2.0);
  EXPECT_LT((a.covariance - 2.0 * Matrix::Identity(3, 3)).norm(), 1e-14);
  EXPECT_DOUBLE_EQ(a.condition_number, 1.0);
  const Matrix j = (Matrix(4, 2) << 1, 2, 0, 1, 3, 0, 1, 1).finished();
  const Matrix c1 = coefficient_covariance(j, 1.5).covariance;
  const Matrix c2 = coefficient_covariance(j, 3.0).covariance;
  EXPECT_LT((c2 - 2.0 * c1).norm(), 1e-14);
}

TEST(Covariance, MatchesOlsOnLinearResponse) {
  // x(θ) = Xθ: the NLLS Jacobian is X and the covariance is the OLS formula.
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(40, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  const Vector beta = (Vector(3) << 1.0, -2.0, 0.5).finished();
  Vector y = x * beta;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += 0.3 * n(rng);
  const Vector b_hat = x.colPivHouseholderQr().solve(y);
  const Vector resid = x * b_hat - y;
  const double s2 = resid.squaredNorm() / 37.0;
  const Matrix ols = s2 * (x.transpose() * x).inverse();
  const CovarianceResult c = coefficient_covariance(x, estimate_sigma2(resid, 3));
  EXPECT_LT((c.covariance - ols).norm(), 1e-12 * ols.norm());
}

TEST(Covariance, SingularNormalMatrixNamesNullSpaceCoefficients) {
  const Matrix j = (Matrix(3, 3) << 1, 2, 0, 2, 4, 0, 3, 6, 1).finished();
  try {
    coefficient_covariance(j, 1.0, {"tt", "c", "s"});
    FAIL() << "expected IdentifiabilityError";
  } catch (const IdentifiabilityError& e) {
    const auto& bad = e.coefficients();
    EXPECT_NE(std::find(bad.begin(), bad.end(), "tt"), bad.end());
    EXPECT_NE(std::find(bad.begin(), bad.end(), "c"), bad.end());
    EXPECT_EQ(std::find(bad.begin(), bad.end(), "s"), bad.end());
  }
  EXPECT_THROW(coefficient_covariance(Matrix::Zero(4, 1), 1.0), IdentifiabilityError);
  EXPECT_THROW(coefficient_covariance(Matrix::Identity(2, 2), -1.0), DomainError);
}

TEST(Covariance, SymmetricPositiveSemidefiniteOnRandomJacobians) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    Matrix j(10, 4);
    for (Eigen::Index i = 0; i < j.size(); ++i) j.data()[i] = n(rng);
    const Matrix c = coefficient_covariance(j, 0.1 + std::abs(n(rng))).covariance;
    EXPECT_LT((c - c.transpose()).norm(), 1e-14 * c.norm());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
    EXPECT_GE(eig.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Covariance, ShrinksWithReplicatedObservations) {
  // Duplicating the rows with fresh noise halves σ²(JᵀJ)⁻¹ in expectation.
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(20, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  const Vector beta = (Vector(2) << 1.0, -1.0).finished();
  Vector small_diag = Vector::Zero(2), large_diag = Vector::Zero(2);
  for (int rep = 0; rep < 200; ++rep) {
    auto fit = [&](const Matrix& design) {
      Vector y = design * beta;
      for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += n(rng);
      const Vector b = design.colPivHouseholderQr().solve(y);
      return coefficient_covariance(design, estimate_sigma2(design * b - y, 2)).covariance.diagonal().eval();
    };
    Matrix doubled(40, 2);
    doubled << x, x;
    small_diag += fit(x);
    large_diag += fit(doubled);
  }
  for (Eigen::Index d = 0; d < 2; ++d) EXPECT_LT(large_diag[d], small_diag[d]);
}

TEST(TTest, NullEqualsEstimateGivesZeroStatistic) {
  const TTestResult r = t_test(-0.7, -0.7, 0.04, 10);
  EXPECT_DOUBLE_EQ(r.t_stat, 0.0);
  EXPECT_DOUBLE_EQ(r.p_value, 1.0);
  EXPECT_FALSE(r.reject);
}

TEST(TTest, StrongEffectRejects) {
  const TTestResult r = t_test(-1.0, 0.0, 0.01, 100);
  EXPECT_NEAR(r.t_stat, -10.0, 1e-12);
  EXPECT_LT(r.p_value, 0.001);
  EXPECT_TRUE(r.reject);
}

TEST(TTest, MatchesTabulatedQuantiles) {
  // t_{10, 0.975} = 2.228138851986; two-sided p at that value is 0.05.
  EXPECT_NEAR(t_test(2.228138851986, 0.0, 1.0, 10).p_value, 0.05, 1e-10);
  // t_{3, 0.995} = 5.840909309733.
  EXPECT_NEAR(t_test(-5.840909309733, 0.0, 1.0, 3).p_value, 0.01, 1e-10);
}

TEST(TTest, RejectsDegenerateInputs) {
  EXPECT_THROW(t_test(1.0, 0.0, 0.0, 5), DomainError);
  EXPECT_THROW(t_test(1.0, 0.0, 1.0, 0), DegreesOfFreedomError);
}

TEST(ConfidenceInterval, NormalLimitAndDegenerateAlpha) {
  const auto [lo, hi] = confidence_interval(2.0, 0.25, 0.05, std::numeric_limits<double>::infinity());
  EXPECT_NEAR(lo, 2.0 - 1.959963984540 * 0.5, 1e-10);
  EXPECT_NEAR(hi, 2.0 + 1.959963984540 * 0.5, 1e-10);
  const auto [a, b] = confidence_interval(2.0, 0.25, 1.0, 30);
  EXPECT_DOUBLE_EQ(a, 2.0);
  EXPECT_DOUBLE_EQ(b, 2.0);
  const auto [c, d] = confidence_interval(2.0, 0.25, 0.05, 1e7);
  EXPECT_NEAR(c, lo, 1e-6);
  EXPECT_NEAR(d, hi, 1e-6);
}

TEST(ConfidenceInterval, ContainsEstimateAndWidensWithConfidence) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const double theta = 10.0 * u(rng) - 5.0;
    const double var = 0.01 + u(rng);
    const double dof = 1.0 + 50.0 * u(rng);
    const auto [lo, hi] = confidence_interval(theta, var, 0.1, dof);
    const auto [lo2, hi2] = confidence_interval(theta, var, 0.01, dof);
    EXPECT_LE(lo, theta);
    EXPECT_GE(hi, theta);
    EXPECT_LT(lo2, lo);
    EXPECT_GT(hi2, hi);
  }
}

TEST(FTest, HandExamples) {
  EXPECT_DOUBLE_EQ(f_test(100.0, 100.0, 1, 3, 20).f_stat, 0.0);
  const FTestResult r = f_test(200.0, 100.0, 1, 3, 20);
  EXPECT_DOUBLE_EQ(r.f_stat, 8.5);
  // F(2, 17) upper tail at 8.5.
  EXPECT_NEAR(r.p_value, 0.0027621358640, 1e-10);
}

TEST(FTest, RejectsViolatedPreconditions) {
  EXPECT_THROW(f_test(2.0, 1.0, 3, 3, 20), DomainError);
  EXPECT_THROW(f_test(2.0, 1.0, 1, 3, 3), DomainError);
  EXPECT_THROW(f_test(2.0, 0.0, 1, 3, 20), DomainError);
}

TEST(FTest, NonNegativeForArbitraryRss) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.01, 100.0);
  for (int rep = 0; rep < 100; ++rep) {
    const FTestResult r = f_test(u(rng), u(rng), 1, 4, 30);
    EXPECT_GE(r.f_stat, 0.0);
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
  }
}

TEST(FitIndicators, PerfectFitAndNullEquivalence) {
  const Vector counts = (Vector(3) << 10, 20, 30).finished();
  const FitIndicators perfect = fit_indicators(Vector::Zero(3), counts, 0, 50.0);
  EXPECT_DOUBLE_EQ(perfect.rmse, 0.0);
  EXPECT_DOUBLE_EQ(perfect.adjusted_pseudo_r2, 1.0);
  const Vector resid = (Vector(3) << 3, -4, 5).finished();
  const FitIndicators null_like = fit_indicators(resid, counts, 0, resid.squaredNorm());
  EXPECT_NEAR(null_like.adjusted_pseudo_r2, 0.0, 1e-15);
  EXPECT_NEAR(null_like.rmse, std::sqrt(50.0 / 3.0), 1e-14);
  EXPECT_NEAR(null_like.nrmse, std::sqrt(50.0 / 3.0) / 20.0, 1e-14);
}

TEST(FitIndicators, AdjustedPseudoR2DecreasesInRss) {
  const Vector counts = Vector::Constant(4, 10.0);
  double last = 2.0;
  for (double scale : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    const double value = fit_indicators(Vector::Constant(4, scale), counts, 2, 100.0).adjusted_pseudo_r2;
    EXPECT_LT(value, last);
    last = value;
  }
}

TEST(FitIndicators, RejectsUndefinedInputs) {
  EXPECT_THROW(fit_indicators(Vector::Ones(2), Vector::Zero(2), 0, 1.0), DomainError);
  EXPECT_THROW(fit_indicators(Vector::Ones(2), Vector::Ones(2), 0, 0.0), DomainError);
  EXPECT_THROW(fit_indicators(Vector::Ones(2), Vector::Ones(3), 0, 1.0), StructuralError);
}

TEST(Stars, Thresholds) {
  EXPECT_EQ(significance_stars(0.005), "***");
  EXPECT_EQ(significance_stars(0.03), "**");
  EXPECT_EQ(significance_stars(0.07), "*");
  EXPECT_EQ(significance_stars(0.5), "");
}

TEST(BuildInference, LinearModelReport) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(30, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 5.0 + n(rng);
  const Vector beta = (Vector(2) << 2.0, 0.0).finished();
  Vector y = x * beta;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += 0.5 * n(rng);
  const Vector b = x.colPivHouseholderQr().solve(y);
  const InferenceReport r = build_inference({"a", "b"}, b, x, x * b - y, y, y.squaredNorm(), 0.1);
  ASSERT_EQ(r.coefficients.size(), 2u);
  EXPECT_EQ(r.n, 30u);
  EXPECT_EQ(r.k, 2u);
  EXPECT_TRUE(r.warnings.empty());
  for (const auto& c : r.coefficients) {
    EXPECT_LE(c.ci_low, c.estimate);
    EXPECT_GE(c.ci_high, c.estimate);
    EXPECT_NEAR(c.t_stat, c.estimate / c.std_error, 1e-12);
  }
  EXPECT_LT(r.coefficients[0].p_value, 0.01);
  EXPECT_EQ(r.coefficients[0].stars, "***");
  EXPECT_GT(r.f_null.f_stat, 0.0);
  EXPECT_NEAR(r.fit.nrmse, r.fit.rmse / y.mean(), 1e-15);
}

TEST(BuildInference, CollinearDesignFlagsCoefficientsInsteadOfThrowing) {
  const Matrix j = (Matrix(4, 2) << 1, 2, 2, 4, 3, 6, 4, 8).finished();
  const Vector resid = (Vector(4) << 0.1, -0.2, 0.1, 0.0).finished();
  const Vector counts = Vector::Constant(4, 10.0);
  const InferenceReport r = build_inference({"tt", "c"}, Vector::Zero(2), j, resid, counts, 10.0);
  ASSERT_FALSE(r.warnings.empty());
  for (const auto& c : r.coefficients) {
    EXPECT_FALSE(c.identified);
    EXPECT_TRUE(std::isnan(c.std_error));
  }
}

TEST(BuildInference, PValuesUniformUnderTheNull) {
  // Linear model with a truly zero coefficient: rejection rate at α = 0.1.
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  const int reps = 2000;
  int rejections = 0;
  Matrix x(25, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  for (int rep = 0; rep < reps; ++rep) {
    Vector y = x.col(0) * 1.5;
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += n(rng);
    const Vector b = x.colPivHouseholderQr().solve(y);
    const InferenceReport r = build_inference({"a", "zero"}, b, x, x * b - y, y, y.squaredNorm(), 0.1);
    rejections += r.coefficients[1].p_value < 0.1 ? 1 : 0;
  }
  const double rate = static_cast<double>(rejections) / reps;
  const double se = std::sqrt(0.1 * 0.9 / reps);
  EXPECT_NEAR(rate, 0.1, 3.0 * se);
}

TEST(BuildInference, ExactFitRejectsEveryNonzeroCoefficient) {
  const Matrix j = (Matrix(3, 2) << 1, 0, 0, 1, 1, 1).finished();
  const InferenceReport r = build_inference({"tt", "c"}, (Vector(2) << -1.0, 0.0).finished(), j, Vector::Zero(3),
                                            Vector::Constant(3, 10.0), 5.0);
  EXPECT_DOUBLE_EQ(r.coefficients[0].p_value, 0.0);
  EXPECT_TRUE(std::isinf(r.coefficients[0].t_stat));
  EXPECT_LT(r.coefficients[0].t_stat, 0.0);
  EXPECT_TRUE(std::isnan(r.coefficients[1].p_value));
}
