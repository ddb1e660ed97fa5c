#include "spar/baselines.hpp"

#include "spar/dataset.hpp"
#include "spar/error.hpp"
#include "spar/factor.hpp"
#include "spar/regression.hpp"
#include "spar/rng.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spar {

namespace {

// C(p, q) saturating at limit + 1.
long choose_capped(Index p, Index q, long limit) {
  double c = 1.0;
  for (Index i = 0; i < q; ++i) {
    c = c * static_cast<double>(p - i) / static_cast<double>(i + 1);
    if (c > static_cast<double>(limit)) return limit + 1;
  }
  return static_cast<long>(std::llround(c));
}

bool next_combination(std::vector<Index>& idx, Index p) {
  const Index q = static_cast<Index>(idx.size());
  for (Index k = q - 1; k >= 0; --k) {
    if (idx[static_cast<std::size_t>(k)] < p - q + k) {
      ++idx[static_cast<std::size_t>(k)];
      for (Index j = k + 1; j < q; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

double lms_objective(const Vector& xi, const Matrix& gamma, const Vector& delta) {
  Vector r2 = (xi - gamma * delta).array().square();
  const Index p = r2.size();
  const auto mid = r2.data() + (p + 1) / 2 - 1;
  std::nth_element(r2.data(), mid, r2.data() + p);
  return *mid;
}

NullResult null_treatments(const Vector& xi, const Matrix& gamma, const LmsConfig& cfg) {
  const Index p = xi.size(), q = gamma.cols();
  require(gamma.rows() == p, ErrorCode::DimensionMismatch, "null_treatments: gamma rows must match xi");
  require(p > q, ErrorCode::InvalidConfig, "null_treatments: need p > q");
  require(cfg.n_subsets >= 1, ErrorCode::InvalidConfig, "null_treatments: n_subsets must be >= 1");

  NullResult out;
  if (q == 0) {
    out.delta_hat = Vector(0);
    out.beta_hat = xi;
    out.objective = lms_objective(xi, gamma, out.delta_hat);
    out.exhaustive = true;
    return out;
  }

  bool have = false;
  auto consider = [&](const std::vector<Index>& rows) {
    Matrix G(q, q);
    Vector x(q);
    for (Index k = 0; k < q; ++k) {
      G.row(k) = gamma.row(rows[static_cast<std::size_t>(k)]);
      x(k) = xi(rows[static_cast<std::size_t>(k)]);
    }
    Eigen::FullPivLU<Matrix> lu(G);
    if (lu.rank() < q) return;
    const Vector d = lu.solve(x);
    const double obj = lms_objective(xi, gamma, d);
    if (cfg.record_candidates) {
      out.candidates.push_back(d);
      out.candidate_objectives.push_back(obj);
    }
    if (!have || obj < out.objective) {
      have = true;
      out.objective = obj;
      out.delta_hat = d;
    }
  };

  std::vector<Index> rows(static_cast<std::size_t>(q));
  if (choose_capped(p, q, cfg.exhaustive_limit) <= cfg.exhaustive_limit) {
    out.exhaustive = true;
    std::iota(rows.begin(), rows.end(), Index{0});
    do {
      consider(rows);
    } while (next_combination(rows, p));
  } else {
    Rng rng(cfg.seed);
    std::vector<Index> perm(static_cast<std::size_t>(p));
    for (int s = 0; s < cfg.n_subsets; ++s) {
      std::iota(perm.begin(), perm.end(), Index{0});
      for (Index k = 0; k < q; ++k) {
        const auto j = k + static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(p - k));
        std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(j)]);
      }
      std::copy(perm.begin(), perm.begin() + q, rows.begin());
      std::sort(rows.begin(), rows.end());
      consider(rows);
    }
  }
  if (!have) {
    // Every subset was singular; fall back to least squares.
    out.delta_hat = gamma.completeOrthogonalDecomposition().solve(xi);
    out.objective = lms_objective(xi, gamma, out.delta_hat);
  }
  out.beta_hat = xi - gamma * out.delta_hat;
  return out;
}

PpcaFit ppca(const Matrix& X, int k) {
  const Index n = X.rows(), p = X.cols();
  require(k >= 0 && k < std::min(n, p), ErrorCode::InvalidConfig, "ppca: need 0 <= k < min(n, p)");
  PpcaFit out;
  if (k == 0) {
    out.substitute = Matrix(n, 0);
    out.loadings = Matrix(p, 0);
    out.sigma2 = sample_covariance(X).diagonal().mean();
    return out;
  }
  const SymmetricEigen eig = symmetric_eigen(sample_covariance(X));
  out.sigma2 = std::max(0.0, eig.values.tail(p - k).mean());
  const Vector scale = (eig.values.head(k).array() - out.sigma2).max(0.0).sqrt();
  out.loadings = eig.vectors.leftCols(k) * scale.asDiagonal();
  Matrix Mk = out.loadings.transpose() * out.loadings;
  Mk.diagonal().array() += out.sigma2;
  out.substitute = Mk.completeOrthogonalDecomposition().solve(out.loadings.transpose() * X.transpose()).transpose();
  return out;
}

Vector deconfounder(const Dataset& d, const DeconfConfig& cfg) {
  validate_dataset(d);
  const Dataset prepared = prepare(d);
  const Index p = prepared.p();
  const PpcaFit fa = ppca(prepared.X, cfg.k);
  Matrix aug(prepared.n(), p + cfg.k);
  aug << prepared.X, fa.substitute;
  if (cfg.outcome_stage == OutcomeStage::Lasso) {
    return lasso_cv(aug, prepared.Y, cfg.folds, cfg.seed).coef.head(p);
  }
  return ridge_cv(aug, prepared.Y, cfg.folds, cfg.seed).xi_hat.head(p);
}

}  // namespace spar
