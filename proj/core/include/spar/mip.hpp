#pragma once

#include "spar/types.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace spar {

/// minimize sum z  subject to  |xi_i - gamma_i delta| <= M z_i + t,  z binary, delta free.
struct MipProblem {
  Vector xi;     // p
  Matrix gamma;  // p x q
  double t = 0.0;
  double M = 30.0;

  Index p() const { return xi.size(); }
  Index q() const { return gamma.cols(); }
};

/// Validates shapes and t >= 0, M > 0. Throws InvalidConfig.
MipProblem build_mip(const Vector& xi, const Matrix& gamma, double t, double M);

struct MipLimits {
  long max_nodes = 1000000;
  double time_budget_s = 60.0;
};

enum class MipStatus { Optimal, FeasibleTimeLimit };

const char* to_string(MipStatus s);

struct MipSolution {
  Eigen::VectorXi z;
  Vector delta;
  int objective = 0;
  MipStatus status = MipStatus::Optimal;
  long nodes_explored = 0;
};

/// Per-row state of a branch-and-bound node.
enum class ZState : signed char { Free = -1, Zero = 0, One = 1 };

struct LpRelaxation {
  double bound = 0.0;  // includes the rows fixed to one
  Vector z_frac;
  Vector delta;
  long pivots = 0;
};

/// LP relaxation with z in [0,1] on free rows. Throws Infeasible when the rows
/// fixed to zero admit no common delta.
LpRelaxation lp_relax(const MipProblem& prob, const std::vector<ZState>& fixed);

/// Best-first branch and bound. Throws Infeasible when no delta keeps every
/// residual within M + t.
MipSolution solve_bnb(const MipProblem& prob, MipLimits limits = {});

/// Enumeration over slab-boundary candidates; exact for q <= 2 in general
/// position. Throws UnsupportedDimension for q > 2.
MipSolution exact_small_oracle(const MipProblem& prob);

/// Absolute slack allowed when checking |r_i| <= M z_i + t.
double feasibility_tol(const MipProblem& prob);

bool is_feasible(const MipProblem& prob, const Eigen::VectorXi& z, const Vector& delta);

nlohmann::json to_json(const MipProblem& prob);
MipProblem mip_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MipSolution& sol);

}  // namespace spar
