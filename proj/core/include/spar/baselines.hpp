#pragma once

#include "spar/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace spar {

struct LmsConfig {
  int n_subsets = 3000;
  long exhaustive_limit = 20000;  // enumerate all q-subsets when C(p, q) is at most this
  std::uint64_t seed = 0;
  bool record_candidates = false;
};

struct NullResult {
  Vector beta_hat;  // dense
  Vector delta_hat;
  double objective = 0.0;  // median squared residual at delta_hat
  bool exhaustive = false;
  std::vector<Vector> candidates;  // filled when record_candidates is set
  std::vector<double> candidate_objectives;
};

/// Median (lower median) of the squared residuals (xi - gamma delta)^2.
double lms_objective(const Vector& xi, const Matrix& gamma, const Vector& delta);

/// Least-median-of-squares fit of xi on gamma with candidates from exact
/// q-subset solves; beta_hat = xi - gamma delta_hat.
NullResult null_treatments(const Vector& xi_hat, const Matrix& gamma_hat, const LmsConfig& cfg = {});

struct PpcaFit {
  Matrix substitute;  // n x k posterior means
  Matrix loadings;    // p x k
  double sigma2 = 0.0;
};

/// Closed-form probabilistic PCA on centered X.
PpcaFit ppca(const Matrix& X, int k);

enum class OutcomeStage { Lasso, Ridge };

struct DeconfConfig {
  int k = 50;
  OutcomeStage outcome_stage = OutcomeStage::Lasso;
  std::uint64_t seed = 0;
  int folds = 10;
};

/// Regresses Y on [X, ppca(X, k)] and keeps the first p coefficients.
Vector deconfounder(const Dataset& d, const DeconfConfig& cfg);

}  // namespace spar
