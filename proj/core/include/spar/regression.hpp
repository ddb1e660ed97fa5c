#pragma once

#include "spar/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace spar {

struct RegressionFit {
  Vector xi_hat;
  double sigma_resid2 = 0.0;  // residual variance of the outcome given the treatments
  std::string method;
  double lambda = 0.0;  // penalty used, 0 when unpenalized
  long iterations = 0;
};

/// Least squares without intercept; sigma_resid2 uses the n - p denominator.
/// Throws SingularDesign when X^T X is not invertible.
RegressionFit ols(const Matrix& X, const Vector& Y);

/// (X^T X + n lambda I)^{-1} X^T Y, no intercept.
RegressionFit ridge(const Matrix& X, const Vector& Y, double lambda);

/// Ridge with lambda picked from a 50-point log grid by K-fold CV error.
/// Centers inside each fold, so the intercept is absorbed.
RegressionFit ridge_cv(const Matrix& X, const Vector& Y, int folds, std::uint64_t seed);

/// Penalty grid used by ridge_cv for this design.
std::vector<double> ridge_lambda_grid(const Matrix& X);

// ---------------------------------------------------------------------------
// Lasso family. All lasso fits center X and Y and standardize the columns of X
// internally (unit variance, n denominator); the penalty applies to the
// standardized coefficients and coefficients are returned on the original scale.
// The objective is (1/2n) ||Y - Xb||^2 + lambda ||b||_1.

struct LassoOptions {
  double tol = 1e-7;         // max coefficient change per sweep
  long max_sweeps = 100000;
};

struct LassoFit {
  Vector coef;
  double intercept = 0.0;
  double lambda = 0.0;
  long sweeps = 0;
};

LassoFit lasso_cd(const Matrix& X, const Vector& Y, double lambda, LassoOptions opts = {});

/// max_j |x~_j^T (Y - Ybar)| / n over standardized columns.
double lasso_lambda_max(const Matrix& X, const Vector& Y);

struct LassoCvFit {
  Vector coef;
  double intercept = 0.0;
  double lambda_star = 0.0;
  std::vector<double> lambdas;
  std::vector<double> cv_mse;
};

/// 100-point log grid from lambda_max down to 1e-3 lambda_max; folds assigned
/// from a seeded permutation.
LassoCvFit lasso_cv(const Matrix& X, const Vector& Y, int folds = 10, std::uint64_t seed = 0);

struct ScaledLassoFit {
  Vector coef;
  double sigma_hat = 0.0;
  double lambda0 = 0.0;
  int alternations = 0;
};

/// sqrt(2 log p / n)
double scaled_lasso_lambda0(Index n, Index p);

ScaledLassoFit scaled_lasso(const Matrix& X, const Vector& Y);

/// Node-wise lasso surrogate for the inverse covariance of X.
Matrix nodewise_inverse(const Matrix& X);

/// De-biased lasso: b + M X^T (Y - X b) / n with b from lasso_cv and M from
/// nodewise_inverse; sigma_resid2 from the scaled lasso.
RegressionFit debiased_lasso(const Matrix& X, const Vector& Y, std::uint64_t seed = 0);

}  // namespace spar
