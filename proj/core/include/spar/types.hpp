#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace spar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Observed data: n samples of p treatments, the outcome, and optionally
/// r measured confounders.
struct Dataset {
  Matrix X;
  Vector Y;
  std::optional<Matrix> W;

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }
  Index r() const { return W ? W->cols() : 0; }
};

/// Generator-side parameters kept for scoring. Fields that a generator has no
/// analogue for are left empty (e.g. the GWAS models have no noise covariance).
struct GroundTruth {
  Vector beta;
  Matrix alpha;  // p x q
  Vector delta;  // q
  std::optional<Matrix> eta;       // p x r
  std::optional<Vector> lambda_w;  // r
  Matrix sigma_eps_x;              // p x p
  Matrix U;                        // n x q
  int q = 0;
};

struct SparsityPattern {
  std::vector<Index> support;  // ascending, 0-based
  Index s() const { return static_cast<Index>(support.size()); }
};

SparsityPattern sparsity_pattern(const Vector& beta, double zero_tol = 0.0);

}  // namespace spar
