#pragma once

#include "spar/types.hpp"

#include <vector>

namespace spar::detail {

/// Centered, column-standardized design in Gram form:
///   G = X~^T X~ / n,  c = X~^T y / n,  yy = y^T y / n
/// where X~ has unit-variance columns. Zero-variance columns get scale 0 and
/// are never updated.
struct Standardized {
  Index n = 0;
  Vector x_mean;
  Vector x_scale;
  Matrix G;
  Vector c;
  double y_mean = 0.0;
  double yy = 0.0;

  static Standardized build(const Matrix& X, const Vector& Y);
  /// Same design, new response (y centered inside).
  void set_response(const Matrix& X, const Vector& Y);

  bool active(Index j) const { return x_scale(j) > 0.0; }
  Index p() const { return G.rows(); }

  /// Converts standardized coefficients to the original scale.
  Vector unscale(const Vector& b) const;
  double intercept(const Vector& coef) const;
};

struct CdResult {
  long sweeps = 0;
  bool converged = false;
};

/// Cyclic coordinate descent on 0.5 b^T G b - c^T b + lambda ||b||_1 with an
/// active-set strategy. `b` is the warm start and holds the solution on exit.
/// Coordinate `skip` (if >= 0) is pinned to 0. After the coefficient changes
/// fall below `tol` the KKT residual is checked against `kkt_target`, and `tol`
/// is tightened until it holds. Throws ConvergenceFailure.
CdResult coordinate_descent(const Matrix& G, const Vector& c, const std::vector<char>& usable,
                            double lambda, Vector& b, double tol, long max_sweeps,
                            Index skip = -1, double kkt_target = 1e-9);

/// (1/n) ||y - X~ b||^2 from the Gram quantities.
double residual_mse(const Standardized& s, const Vector& b);

}  // namespace spar::detail
