#pragma once

#include "suelogit/core.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace suelogit {

/// RSS / (n − k).
inline double estimate_sigma2(const Vector& residuals, std::size_t k) {
  const auto n = static_cast<std::size_t>(residuals.size());
  if (n <= k) {
    throw DegreesOfFreedomError("need more observations (" + std::to_string(n) + ") than coefficients (" +
                                std::to_string(k) + ")");
  }
  return residuals.squaredNorm() / static_cast<double>(n - k);
}

struct CovarianceResult {
  Matrix covariance;
  double condition_number = 0.0;
  std::vector<bool> identified;  // false for coefficients in the numerical null space
};

inline constexpr double kMaxConditionNumber = 1e12;

/// σ² (JᵀJ)⁻¹. Throws IdentifiabilityError naming null-space coefficients when JᵀJ
/// is singular or its condition number exceeds 1e12.
inline CovarianceResult coefficient_covariance(const Matrix& jacobian, double sigma2,
                                               const std::vector<std::string>& names = {}) {
  if (sigma2 < 0.0) throw DomainError("coefficient_covariance: negative sigma2");
  const Matrix a = jacobian.transpose() * jacobian;
  const Eigen::Index k = a.rows();
  CovarianceResult r;
  r.identified.assign(static_cast<std::size_t>(k), true);
  if (k == 0) {
    r.covariance = Matrix(0, 0);
    return r;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  const Vector ev = eig.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  const double bottom = ev.minCoeff();
  r.condition_number = bottom > 0.0 ? top / bottom : std::numeric_limits<double>::infinity();
  if (!(top > 0.0) || r.condition_number > kMaxConditionNumber) {
    std::vector<std::string> bad;
    for (Eigen::Index e = 0; e < k; ++e) {
      if (top > 0.0 && ev[e] * kMaxConditionNumber >= top) continue;
      for (Eigen::Index d = 0; d < k; ++d) {
        if (std::abs(eig.eigenvectors()(d, e)) > 1e-6 && r.identified[static_cast<std::size_t>(d)]) {
          r.identified[static_cast<std::size_t>(d)] = false;
          bad.push_back(static_cast<std::size_t>(d) < names.size() ? names[static_cast<std::size_t>(d)]
                                                                   : std::to_string(d));
        }
      }
    }
    throw IdentifiabilityError("normal matrix JᵀJ is singular or ill-conditioned", bad);
  }
  r.covariance = sigma2 * eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  r.covariance = 0.5 * (r.covariance + r.covariance.transpose()).eval();
  return r;
}

struct TTestResult {
  double t_stat = 0.0;
  double p_value = 1.0;
  bool reject = false;
};

/// Two-sided t-test of H0: θ_d = θ_H0 with `dof` degrees of freedom.
inline TTestResult t_test(double theta_hat, double theta_h0, double variance, double dof, double alpha = 0.1) {
  if (!(variance > 0.0)) throw DomainError("t_test: variance must be positive");
  if (!(dof > 0.0)) throw DegreesOfFreedomError("t_test: degrees of freedom must be positive");
  TTestResult r;
  r.t_stat = (theta_hat - theta_h0) / std::sqrt(variance);
  const boost::math::students_t dist(dof);
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t_stat)));
  r.p_value = std::min(1.0, r.p_value);
  r.reject = r.p_value < alpha;
  return r;
}

/// θ̂ ± t_{dof, 1 − α/2} se.
inline std::pair<double, double> confidence_interval(double theta_hat, double variance, double alpha, double dof) {
  if (!(variance > 0.0)) throw DomainError("confidence_interval: variance must be positive");
  if (!(alpha > 0.0) || alpha > 1.0) throw DomainError("confidence_interval: alpha must be in (0, 1]");
  if (!(dof > 0.0)) throw DegreesOfFreedomError("confidence_interval: degrees of freedom must be positive");
  const double quantile = alpha >= 1.0 ? 0.0
                          : std::isinf(dof)
                              ? boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0)
                              : boost::math::quantile(boost::math::students_t(dof), 1.0 - alpha / 2.0);
  const double half = quantile * std::sqrt(variance);
  return {theta_hat - half, theta_hat + half};
}

struct FTestResult {
  double f_stat = 0.0;
  double p_value = 1.0;
};

/// Restricted model 1 (k1 coefficients) against unrestricted model 2 (k2 > k1).
inline FTestResult f_test(double rss1, double rss2, std::size_t k1, std::size_t k2, std::size_t n) {
  if (k2 <= k1) throw DomainError("f_test: unrestricted model must have more coefficients");
  if (n <= k2) throw DomainError("f_test: need n > k2");
  if (!(rss2 > 0.0)) throw DomainError("f_test: unrestricted RSS must be positive");
  if (rss1 < 0.0) throw DomainError("f_test: negative RSS");
  const double d1 = static_cast<double>(k2 - k1);
  const double d2 = static_cast<double>(n - k2);
  FTestResult r;
  r.f_stat = std::max(0.0, ((rss1 - rss2) / d1) / (rss2 / d2));
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::fisher_f(d1, d2), r.f_stat));
  return r;
}

struct FitIndicators {
  double rmse = 0.0;
  double nrmse = 0.0;
  double adjusted_pseudo_r2 = 0.0;
};

/// rmse = √(RSS/n); nrmse = rmse / mean(counts); adjusted ρ² = 1 − (RSS − k)/RSS_null.
inline FitIndicators fit_indicators(const Vector& residuals, const Vector& counts, std::size_t k, double rss_null) {
  if (residuals.size() == 0 || residuals.size() != counts.size()) {
    throw StructuralError("fit_indicators: residual and count sizes must match and be nonzero");
  }
  if (!(rss_null > 0.0)) throw DomainError("fit_indicators: null-model RSS must be positive");
  const double mean = counts.mean();
  if (mean == 0.0) throw DomainError("fit_indicators: mean count is zero, NRMSE undefined");
  const double rss = residuals.squaredNorm();
  FitIndicators r;
  r.rmse = std::sqrt(rss / static_cast<double>(residuals.size()));
  r.nrmse = r.rmse / mean;
  r.adjusted_pseudo_r2 = 1.0 - (rss - static_cast<double>(k)) / rss_null;
  return r;
}

inline std::string significance_stars(double p_value) {
  if (p_value < 0.01) return "***";
  if (p_value < 0.05) return "**";
  if (p_value < 0.1) return "*";
  return "";
}

struct CoefficientInference {
  std::string name;
  double estimate = 0.0;
  double std_error = std::numeric_limits<double>::quiet_NaN();
  double t_stat = std::numeric_limits<double>::quiet_NaN();
  double p_value = std::numeric_limits<double>::quiet_NaN();
  double ci_low = std::numeric_limits<double>::quiet_NaN();
  double ci_high = std::numeric_limits<double>::quiet_NaN();
  bool identified = true;
  std::string stars;
};

struct InferenceReport {
  std::vector<CoefficientInference> coefficients;
  double sigma2_hat = 0.0;
  Matrix covariance;
  double condition_number = 0.0;
  double rss = 0.0;
  double rss_null = 0.0;
  FTestResult f_null;
  FitIndicators fit;
  std::size_t n = 0;
  std::size_t k = 0;
  double alpha = 0.1;
  std::vector<std::string> warnings;
};

/// Full inference on the estimated coefficients.
///
/// `jacobian` has one column per estimated coefficient; `rss_null` is the RSS at θ = 0.
/// Ill-conditioned normal matrices produce per-coefficient flags and a warning instead
/// of standard errors.
inline InferenceReport build_inference(const std::vector<std::string>& names, const Vector& estimates,
                                       const Matrix& jacobian, const Vector& residuals, const Vector& counts,
                                       double rss_null, double alpha = 0.1) {
  if (static_cast<Eigen::Index>(names.size()) != estimates.size() || jacobian.cols() != estimates.size()) {
    throw StructuralError("build_inference: coefficient dimension mismatch");
  }
  InferenceReport r;
  r.n = static_cast<std::size_t>(residuals.size());
  r.k = names.size();
  r.alpha = alpha;
  r.rss = residuals.squaredNorm();
  r.rss_null = rss_null;
  r.sigma2_hat = estimate_sigma2(residuals, r.k);
  const double dof = static_cast<double>(r.n - r.k);
  for (std::size_t d = 0; d < names.size(); ++d) {
    CoefficientInference c;
    c.name = names[d];
    c.estimate = estimates[static_cast<Eigen::Index>(d)];
    r.coefficients.push_back(c);
  }
  try {
    const CovarianceResult cov = coefficient_covariance(jacobian, r.sigma2_hat, names);
    r.covariance = cov.covariance;
    r.condition_number = cov.condition_number;
    for (std::size_t d = 0; d < names.size(); ++d) {
      auto& c = r.coefficients[d];
      const double var = r.covariance(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      if (r.sigma2_hat == 0.0 && c.estimate != 0.0) {
        // Exact fit: the statistic is unbounded and the null is rejected at any level.
        c.std_error = 0.0;
        c.t_stat = std::copysign(std::numeric_limits<double>::infinity(), c.estimate);
        c.p_value = 0.0;
        c.ci_low = c.ci_high = c.estimate;
        c.stars = significance_stars(0.0);
        continue;
      }
      if (!(var > 0.0)) continue;
      c.std_error = std::sqrt(var);
      const TTestResult t = t_test(c.estimate, 0.0, var, dof, alpha);
      c.t_stat = t.t_stat;
      c.p_value = t.p_value;
      std::tie(c.ci_low, c.ci_high) = confidence_interval(c.estimate, var, alpha, dof);
      c.stars = significance_stars(c.p_value);
    }
  } catch (const IdentifiabilityError& e) {
    r.covariance = Matrix::Constant(static_cast<Eigen::Index>(r.k), static_cast<Eigen::Index>(r.k),
                                    std::numeric_limits<double>::quiet_NaN());
    r.condition_number = std::numeric_limits<double>::infinity();
    for (const auto& bad : e.coefficients()) {
      for (auto& c : r.coefficients) {
        if (c.name == bad) c.identified = false;
      }
    }
    r.warnings.push_back(std::string(e.what()));
  }
  if (r.k > 0 && r.rss > 0.0) r.f_null = f_test(rss_null, r.rss, 0, r.k, r.n);
  if (rss_null > 0.0 && counts.mean() != 0.0) r.fit = fit_indicators(residuals, counts, r.k, rss_null);
  return r;
}

}  // namespace suelogit
