#pragma once

#include "spar/types.hpp"

#include <string>
#include <vector>

namespace spar {

enum class FactorMethod { MLE, PcaPoet };

struct FactorDiagnostics {
  Vector eigenvalues;                // sample covariance spectrum, descending
  int em_iterations = 0;
  bool converged = true;
  std::vector<double> loglik_trace;  // per-sample log-likelihood after each EM step
  double pd_shift = 0.0;             // diagonal inflation applied to sigma_x_hat
};

/// Estimated latent-factor structure of the treatments.
struct FactorFit {
  Matrix alpha_hat;      // p x q loadings
  Matrix sigma_x_hat;    // p x p
  Matrix sigma_eps_hat;  // p x p
  int q = 0;
  FactorMethod method = FactorMethod::MLE;
  FactorDiagnostics diagnostics;
};

struct FaMleOptions {
  double tol = 1e-8;  // on per-sample log-likelihood improvement
  int max_iter = 1000;
  double min_uniqueness = 1e-8;  // floor on diagonal noise variance, relative to var(x_j)
};

/// X^T X / n for already-centered X.
Matrix sample_covariance(const Matrix& X);

/// Descending eigen-decomposition of a symmetric matrix.
struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // columns match `values`
};
SymmetricEigen symmetric_eigen(const Matrix& a);

/// Gaussian factor analysis with diagonal noise, fit by EM from the PCA start.
/// Requires n > p > q >= 1.
FactorFit fa_mle(const Matrix& X, int q, FaMleOptions opts = {});

/// Gaussian factor-model log-likelihood per sample for covariance alpha alpha^T + diag(psi).
double fa_loglik(const Matrix& S, const Matrix& alpha, const Vector& psi);

/// Top-q principal loadings v_k sqrt(lambda_k) of X^T X / n.
Matrix fa_pca(const Matrix& X, int q);

struct PoetResult {
  Matrix sigma_x_hat;
  Matrix sigma_eps_hat;
  Vector eigenvalues;
  double pd_shift = 0.0;
};

/// Principal orthogonal complement thresholding with hard thresholds at
/// C sqrt(log p / n) sqrt(R_ii R_jj) on the residual covariance.
PoetResult poet(const Matrix& X, int q, double thresh_const = 0.5);

/// Adds (|lambda_min| + eps) I when `a` is not positive definite; returns the shift.
double make_positive_definite(Matrix& a, double eps);

/// Solves sigma_x gamma = alpha via Cholesky. Throws SingularCovariance.
Matrix gamma_from(const Matrix& sigma_x, const Matrix& alpha);
Matrix gamma_from(const FactorFit& fit);

struct SelectQResult {
  int q = 0;
  double threshold = 0.0;  // calibrated eigenvalue-gap threshold
  Vector eigenvalues;
  int iterations = 0;
};

/// Eigenvalue-difference selector with a slope-calibrated gap threshold.
SelectQResult select_q(const Matrix& X, int q_max);

/// Largest q_max accepted by select_q for an n x p matrix (-1 when none).
int default_q_max(Index n, Index p);

}  // namespace spar
