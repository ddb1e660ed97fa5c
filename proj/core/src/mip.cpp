#include "spar/mip.hpp"

#include "spar/error.hpp"
#include "spar/lp.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <queue>

namespace spar {

namespace {

constexpr double kFracTol = 1e-9;

Vector residuals(const MipProblem& prob, const Vector& delta) {
  if (prob.q() == 0) return prob.xi;
  return prob.xi - prob.gamma * delta;
}

Eigen::VectorXi round_z(const MipProblem& prob, const Vector& r, bool* feasible) {
  const double tol = feasibility_tol(prob);
  Eigen::VectorXi z(prob.p());
  bool ok = true;
  for (Index i = 0; i < prob.p(); ++i) {
    const double a = std::abs(r(i));
    z(i) = a > prob.t + tol ? 1 : 0;
    if (a > prob.M + prob.t + tol) ok = false;
  }
  if (feasible) *feasible = ok;
  return z;
}

Vector least_squares(const Matrix& A, const Vector& b) {
  if (A.cols() == 0) return Vector(0);
  return A.completeOrthogonalDecomposition().solve(b);
}

// Full least squares, then least squares on the ceil((p+q)/2) rows with the
// smallest residuals.
Vector heuristic_delta(const MipProblem& prob) {
  const Index p = prob.p(), q = prob.q();
  if (q == 0) return Vector(0);
  const Vector d0 = least_squares(prob.gamma, prob.xi);
  const Vector r = (prob.xi - prob.gamma * d0).cwiseAbs();
  std::vector<Index> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return r(a) < r(b); });
  const Index h = std::min<Index>(p, (p + q + 1) / 2);
  Matrix G(h, q);
  Vector x(h);
  for (Index k = 0; k < h; ++k) {
    G.row(k) = prob.gamma.row(idx[static_cast<std::size_t>(k)]);
    x(k) = prob.xi(idx[static_cast<std::size_t>(k)]);
  }
  return least_squares(G, x);
}

struct Incumbent {
  bool valid = false;
  Eigen::VectorXi z;
  Vector delta;
  int objective = 0;

  void offer(const MipProblem& prob, const Vector& d) {
    bool ok = false;
    Eigen::VectorXi cand = round_z(prob, residuals(prob, d), &ok);
    if (!ok) return;
    const int obj = cand.sum();
    if (!valid || obj < objective) {
      valid = true;
      z = std::move(cand);
      delta = d;
      objective = obj;
    }
  }
};

struct Node {
  std::vector<ZState> fixed;
  LpRelaxation lp;
  int depth = 0;
  long id = 0;
};

struct NodeOrder {
  bool operator()(const Node* a, const Node* b) const {
    // priority_queue pops the largest; invert for best-first.
    if (a->lp.bound != b->lp.bound) return a->lp.bound > b->lp.bound;
    if (a->depth != b->depth) return a->depth < b->depth;
    return a->id > b->id;
  }
};

// Rotates gamma to U S with a deterministic sign convention so that gamma and
// gamma R present the same problem to the solver. Returns V with gamma = gamma_c V^T.
Matrix canonicalize(const Matrix& gamma, Matrix& gamma_c) {
  const Index q = gamma.cols();
  if (q == 0) {
    gamma_c = gamma;
    return Matrix(0, 0);
  }
  Eigen::JacobiSVD<Matrix> svd(gamma, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix U = svd.matrixU();
  Matrix V = svd.matrixV();
  for (Index k = 0; k < q; ++k) {
    Index arg = 0;
    U.col(k).cwiseAbs().maxCoeff(&arg);
    if (U(arg, k) < 0) {
      U.col(k) *= -1.0;
      V.col(k) *= -1.0;
    }
  }
  gamma_c = U * svd.singularValues().asDiagonal();
  return V;
}

}  // namespace

const char* to_string(MipStatus s) {
  return s == MipStatus::Optimal ? "Optimal" : "FeasibleTimeLimit";
}

MipProblem build_mip(const Vector& xi, const Matrix& gamma, double t, double M) {
  require(gamma.rows() == xi.size(), ErrorCode::InvalidConfig, "mip: gamma must have one row per entry of xi");
  require(std::isfinite(t) && t >= 0.0, ErrorCode::InvalidConfig, "mip: t must be finite and >= 0");
  require(std::isfinite(M) && M > 0.0, ErrorCode::InvalidConfig, "mip: M must be finite and > 0");
  require(xi.allFinite() && gamma.allFinite(), ErrorCode::InvalidConfig, "mip: non-finite xi or gamma");
  return MipProblem{xi, gamma, t, M};
}

double feasibility_tol(const MipProblem& prob) {
  const double scale = std::max(prob.xi.size() ? prob.xi.cwiseAbs().maxCoeff() : 0.0, prob.t);
  return 1e-9 * (1.0 + scale);
}

bool is_feasible(const MipProblem& prob, const Eigen::VectorXi& z, const Vector& delta) {
  if (z.size() != prob.p() || delta.size() != prob.q()) return false;
  const Vector r = residuals(prob, delta);
  const double tol = feasibility_tol(prob);
  for (Index i = 0; i < prob.p(); ++i) {
    if (z(i) != 0 && z(i) != 1) return false;
    if (std::abs(r(i)) > prob.M * z(i) + prob.t + tol) return false;
  }
  return true;
}

// The relaxation is solved through its dual: maximize sum_i (xi_i a_i - f_i*(a_i))
// subject to sum_i a_i gamma_i = 0, where f_i is the per-row cost of a residual.
// The simplex multipliers of the equality rows are the primal delta.
LpRelaxation lp_relax(const MipProblem& prob, const std::vector<ZState>& fixed) {
  const Index p = prob.p(), q = prob.q();
  require(static_cast<Index>(fixed.size()) == p, ErrorCode::DimensionMismatch, "lp_relax: fixed has wrong length");
  const double inf = BoundedSimplex::kInf;
  const double M = prob.M, t = prob.t;

  Index ncols = 0;
  int ones = 0;
  for (ZState s : fixed) {
    ncols += s == ZState::Free ? 4 : 2;
    ones += s == ZState::One ? 1 : 0;
  }
  Matrix A(q, ncols);
  Vector c(ncols), u(ncols);
  Index k = 0;
  auto add = [&](Index i, double sign, double cost, double upper) {
    A.col(k) = sign * prob.gamma.row(i).transpose();
    c(k) = cost;
    u(k) = upper;
    ++k;
  };
  for (Index i = 0; i < p; ++i) {
    const double x = prob.xi(i);
    switch (fixed[static_cast<std::size_t>(i)]) {
      case ZState::Free:
        add(i, 1.0, x - t, 1.0 / M);
        add(i, -1.0, -x - t, 1.0 / M);
        add(i, 1.0, x - t - M, inf);
        add(i, -1.0, -x - t - M, inf);
        break;
      case ZState::Zero:
        add(i, 1.0, x - t, inf);
        add(i, -1.0, -x - t, inf);
        break;
      case ZState::One:
        add(i, 1.0, x - t - M, inf);
        add(i, -1.0, -x - t - M, inf);
        break;
    }
  }

  const BoundedSimplex lp(std::move(A), std::move(c), std::move(u));
  const auto res = lp.solve();
  if (res.status == BoundedSimplex::Status::Unbounded) {
    raise(ErrorCode::Infeasible, "lp_relax: rows fixed to zero admit no common delta");
  }
  if (res.status != BoundedSimplex::Status::Optimal) {
    raise(ErrorCode::ConvergenceFailure, "lp_relax: simplex pivot limit reached");
  }

  LpRelaxation out;
  out.delta = res.duals;
  out.pivots = res.pivots;
  out.bound = ones + std::max(0.0, res.objective);
  out.z_frac = Vector::Zero(p);
  const Vector r = residuals(prob, out.delta);
  for (Index i = 0; i < p; ++i) {
    switch (fixed[static_cast<std::size_t>(i)]) {
      case ZState::Free:
        out.z_frac(i) = std::clamp((std::abs(r(i)) - t) / M, 0.0, 1.0);
        break;
      case ZState::Zero:
        break;
      case ZState::One:
        out.z_frac(i) = 1.0;
        break;
    }
  }
  return out;
}

MipSolution solve_bnb(const MipProblem& input, MipLimits limits) {
  build_mip(input.xi, input.gamma, input.t, input.M);
  const auto start = std::chrono::steady_clock::now();
  const Index p = input.p();

  MipProblem prob = input;
  const Matrix V = canonicalize(input.gamma, prob.gamma);

  Incumbent inc;
  inc.offer(prob, heuristic_delta(prob));

  std::vector<ZState> root_fixed(static_cast<std::size_t>(p), ZState::Free);
  long next_id = 0;
  long nodes = 0;
  std::vector<std::unique_ptr<Node>> storage;
  std::priority_queue<Node*, std::vector<Node*>, NodeOrder> open;

  auto prunable = [&](double bound) {
    return inc.valid && std::ceil(bound - 1e-9) >= inc.objective;
  };

  // Returns nullptr when the node is infeasible.
  auto evaluate = [&](std::vector<ZState> fixed, int depth) -> Node* {
    ++nodes;
    auto node = std::make_unique<Node>();
    try {
      node->lp = lp_relax(prob, fixed);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Infeasible) return nullptr;
      throw;
    }
    node->fixed = std::move(fixed);
    node->depth = depth;
    node->id = next_id++;
    inc.offer(prob, node->lp.delta);
    storage.push_back(std::move(node));
    return storage.back().get();
  };

  Node* root = nullptr;
  try {
    root = evaluate(root_fixed, 0);
  } catch (const Error& e) {
    rethrow_with_stage(e, "mip root");
  }
  if (!root) raise(ErrorCode::Infeasible, "mip: no delta keeps every residual within M + t");
  if (!inc.valid) raise(ErrorCode::Infeasible, "mip: relaxation feasible but no integer solution found");
  if (!prunable(root->lp.bound)) open.push(root);

  MipStatus status = MipStatus::Optimal;
  while (!open.empty()) {
    Node* node = open.top();
    open.pop();
    if (prunable(node->lp.bound)) break;  // best-first: the rest are no better

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (nodes >= limits.max_nodes || elapsed > limits.time_budget_s) {
      status = MipStatus::FeasibleTimeLimit;
      break;
    }

    Index branch = -1;
    double best = 2.0;
    for (Index i = 0; i < p; ++i) {
      if (node->fixed[static_cast<std::size_t>(i)] != ZState::Free) continue;
      const double f = node->lp.z_frac(i);
      if (f <= kFracTol || f >= 1.0 - kFracTol) continue;
      const double dist = std::abs(f - 0.5);
      if (dist < best) {
        best = dist;
        branch = i;
      }
    }
    if (branch < 0) continue;  // integral relaxation; its rounding is already offered

    for (ZState s : {ZState::One, ZState::Zero}) {
      std::vector<ZState> fixed = node->fixed;
      fixed[static_cast<std::size_t>(branch)] = s;
      Node* child = evaluate(std::move(fixed), node->depth + 1);
      if (child && !prunable(child->lp.bound)) open.push(child);
    }
  }

  MipSolution sol;
  sol.z = inc.z;
  sol.delta = input.q() ? Vector(V * inc.delta) : Vector(0);
  sol.objective = inc.objective;
  sol.status = status;
  sol.nodes_explored = nodes;
  if (!is_feasible(input, sol.z, sol.delta)) {
    // Rotating back can move a residual across the tolerance; re-derive z.
    bool ok = false;
    sol.z = round_z(input, residuals(input, sol.delta), &ok);
    require(ok, ErrorCode::Infeasible, "mip: incumbent lost feasibility after rotation");
    sol.objective = sol.z.sum();
  }
  return sol;
}

MipSolution exact_small_oracle(const MipProblem& prob) {
  const Index p = prob.p(), q = prob.q();
  if (q > 2) raise(ErrorCode::UnsupportedDimension, "exact_small_oracle: q must be <= 2");

  std::vector<Vector> candidates;
  if (q == 0) {
    candidates.emplace_back(0);
  } else if (q == 1) {
    std::vector<double> pts;
    for (Index i = 0; i < p; ++i) {
      const double g = prob.gamma(i, 0);
      if (g == 0.0) continue;
      for (double off : {prob.t, -prob.t, prob.M + prob.t, -(prob.M + prob.t)}) {
        pts.push_back((prob.xi(i) + off) / g);
      }
    }
    std::sort(pts.begin(), pts.end());
    std::vector<double> all = pts;
    for (std::size_t k = 1; k < pts.size(); ++k) all.push_back(0.5 * (pts[k - 1] + pts[k]));
    if (!pts.empty()) {
      all.push_back(pts.front() - 1.0);
      all.push_back(pts.back() + 1.0);
    }
    all.push_back(0.0);
    for (double d : all) candidates.push_back(Vector::Constant(1, d));
  } else {
    // Boundary lines g . delta = b.
    struct Line {
      Eigen::Vector2d g;
      double b;
    };
    std::vector<Line> lines;
    for (Index i = 0; i < p; ++i) {
      const Eigen::Vector2d g = prob.gamma.row(i).transpose();
      if (g.squaredNorm() == 0.0) continue;
      for (double off : {prob.t, -prob.t, prob.M + prob.t, -(prob.M + prob.t)}) {
        lines.push_back({g, prob.xi(i) + off});
      }
    }
    candidates.push_back(Vector::Zero(2));
    for (const Line& l : lines) candidates.push_back(l.g * (l.b / l.g.squaredNorm()));
    for (std::size_t a = 0; a < lines.size(); ++a) {
      for (std::size_t b = a + 1; b < lines.size(); ++b) {
        Eigen::Matrix2d G;
        G.row(0) = lines[a].g.transpose();
        G.row(1) = lines[b].g.transpose();
        const double det = G.determinant();
        if (std::abs(det) <= 1e-12 * lines[a].g.norm() * lines[b].g.norm()) continue;
        candidates.push_back(G.inverse() * Eigen::Vector2d(lines[a].b, lines[b].b));
      }
    }
  }

  bool found = false;
  MipSolution best;
  for (const Vector& d : candidates) {
    bool ok = false;
    Eigen::VectorXi z = round_z(prob, residuals(prob, d), &ok);
    if (!ok) continue;
    const int obj = z.sum();
    bool better = !found || obj < best.objective;
    if (!better && obj == best.objective) {
      // Smallest delta (lexicographic), then smallest z.
      bool decided = false;
      for (Index k = 0; k < q && !decided; ++k) {
        if (d(k) != best.delta(k)) {
          better = d(k) < best.delta(k);
          decided = true;
        }
      }
      for (Index i = 0; i < p && !decided; ++i) {
        if (z(i) != best.z(i)) {
          better = z(i) < best.z(i);
          decided = true;
        }
      }
    }
    if (better) {
      found = true;
      best.z = std::move(z);
      best.delta = d;
      best.objective = obj;
    }
  }
  if (!found) raise(ErrorCode::Infeasible, "exact_small_oracle: no feasible candidate");
  best.status = MipStatus::Optimal;
  best.nodes_explored = static_cast<long>(candidates.size());
  return best;
}

nlohmann::json to_json(const MipProblem& prob) {
  nlohmann::json g = nlohmann::json::array();
  for (Index i = 0; i < prob.p(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index k = 0; k < prob.q(); ++k) row.push_back(prob.gamma(i, k));
    g.push_back(std::move(row));
  }
  return {{"xi", std::vector<double>(prob.xi.data(), prob.xi.data() + prob.xi.size())},
          {"gamma", g},
          {"t", prob.t},
          {"M", prob.M}};
}

MipProblem mip_from_json(const nlohmann::json& j) {
  try {
    const auto xi = j.at("xi").get<std::vector<double>>();
    const auto rows = j.at("gamma").get<std::vector<std::vector<double>>>();
    const Index p = static_cast<Index>(xi.size());
    const Index q = rows.empty() ? 0 : static_cast<Index>(rows.front().size());
    require(static_cast<Index>(rows.size()) == p, ErrorCode::InvalidConfig, "mip json: gamma needs one row per xi entry");
    Matrix gamma(p, q);
    for (Index i = 0; i < p; ++i) {
      require(static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) == q, ErrorCode::InvalidConfig,
              "mip json: ragged gamma");
      for (Index k = 0; k < q; ++k) gamma(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    return build_mip(Eigen::Map<const Vector>(xi.data(), p), gamma, j.at("t").get<double>(),
                     j.value("M", 30.0));
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::InvalidConfig, std::string("mip json: ") + e.what());
  }
}

nlohmann::json to_json(const MipSolution& sol) {
  return {{"z", std::vector<int>(sol.z.data(), sol.z.data() + sol.z.size())},
          {"delta", std::vector<double>(sol.delta.data(), sol.delta.data() + sol.delta.size())},
          {"objective", sol.objective},
          {"status", to_string(sol.status)},
          {"nodes_explored", sol.nodes_explored}};
}

}  // namespace spar
