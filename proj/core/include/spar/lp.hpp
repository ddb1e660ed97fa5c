#pragma once

#include "spar/types.hpp"

#include <limits>
#include <vector>

namespace spar {

/// Bounded-variable primal simplex for
///
///   maximize c^T x   subject to   A x = 0,   0 <= x <= upper
///
/// with A of shape m x N and m small. The basis starts from m artificial
/// columns pinned to [0, 0], so x = 0 is the initial vertex and no phase one
/// is needed. Dantzig pricing; switches to Bland's rule after a run of
/// degenerate pivots so that the method always terminates.
class BoundedSimplex {
 public:
  enum class Status { Optimal, Unbounded, IterationLimit };

  struct Result {
    Status status = Status::Optimal;
    Vector x;         // length N
    Vector duals;     // length m; reduced cost of column j is c_j - duals^T A_j
    double objective = 0.0;
    long pivots = 0;
  };

  static constexpr double kInf = std::numeric_limits<double>::infinity();

  BoundedSimplex(Matrix A, Vector c, Vector upper);

  Result solve(long max_pivots = 1000000) const;

 private:
  Matrix A_;
  Vector c_;
  Vector upper_;
};

}  // namespace spar
