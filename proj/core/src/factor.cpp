#include "spar/factor.hpp"

#include "spar/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace spar {

Matrix sample_covariance(const Matrix& X) {
  require(X.rows() > 0, ErrorCode::EmptyMatrix, "sample covariance needs rows");
  Matrix S(X.cols(), X.cols());
  S.setZero();
  S.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), 1.0 / static_cast<double>(X.rows()));
  S.triangularView<Eigen::StrictlyUpper>() = S.transpose();
  return S;
}

SymmetricEigen symmetric_eigen(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) raise(ErrorCode::ConvergenceFailure, "eigensolver failed");
  SymmetricEigen out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

namespace {

// Flip each column so its largest-magnitude entry is positive.
void fix_signs(Matrix& v) {
  for (Index k = 0; k < v.cols(); ++k) {
    Index arg = 0;
    v.col(k).cwiseAbs().maxCoeff(&arg);
    if (v(arg, k) < 0) v.col(k) *= -1.0;
  }
}

Matrix principal_loadings(const SymmetricEigen& es, int q) {
  Matrix v = es.vectors.leftCols(q);
  fix_signs(v);
  const Vector scale = es.values.head(q).cwiseMax(0.0).cwiseSqrt();
  return v * scale.asDiagonal();
}

}  // namespace

double fa_loglik(const Matrix& S, const Matrix& alpha, const Vector& psi) {
  const Index p = S.rows();
  const Index q = alpha.cols();
  const Vector psi_inv = psi.cwiseInverse();
  const Matrix a_scaled = psi_inv.asDiagonal() * alpha;  // Psi^{-1} alpha
  const Matrix inner = Matrix::Identity(q, q) + alpha.transpose() * a_scaled;
  Eigen::LLT<Matrix> llt(inner);
  const double logdet_inner = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double logdet = psi.array().log().sum() + logdet_inner;
  const Matrix sa = S * a_scaled;  // S Psi^{-1} alpha
  const double trace = (S.diagonal().array() * psi_inv.array()).sum() -
                       (a_scaled.transpose() * sa).cwiseProduct(llt.solve(Matrix::Identity(q, q))).sum();
  return -0.5 * (static_cast<double>(p) * std::log(2.0 * std::numbers::pi) + logdet + trace);
}

FactorFit fa_mle(const Matrix& X, int q, FaMleOptions opts) {
  const Index n = X.rows();
  const Index p = X.cols();
  require(q >= 1, ErrorCode::InvalidConfig, "factor analysis needs q >= 1");
  require(n > p && p > q, ErrorCode::InvalidConfig, "factor analysis MLE needs n > p > q");

  const Matrix S = sample_covariance(X);
  const SymmetricEigen es = symmetric_eigen(S);
  const Vector floor = (opts.min_uniqueness * S.diagonal().array() + 1e-12).matrix();

  Matrix alpha = principal_loadings(es, q);
  Vector psi = (S.diagonal() - alpha.rowwise().squaredNorm()).cwiseMax(floor);

  FactorFit fit;
  fit.q = q;
  fit.method = FactorMethod::MLE;
  fit.diagnostics.eigenvalues = es.values;
  fit.diagnostics.converged = false;

  double ll = fa_loglik(S, alpha, psi);
  fit.diagnostics.loglik_trace.push_back(ll);
  const Matrix eye = Matrix::Identity(q, q);

  for (int it = 1; it <= opts.max_iter; ++it) {
    const Vector psi_inv = psi.cwiseInverse();
    const Matrix at_psi = alpha.transpose() * psi_inv.asDiagonal();  // q x p
    const Matrix G = (eye + at_psi * alpha).llt().solve(eye);
    const Matrix B = G * at_psi;  // E[z|x] = B x
    const Matrix SB = S * B.transpose();
    const Matrix Ezz = G + B * SB;
    alpha = SB * Ezz.llt().solve(eye);
    psi = (S.diagonal() - (alpha.cwiseProduct(SB)).rowwise().sum()).cwiseMax(floor);

    const double next = fa_loglik(S, alpha, psi);
    if (!std::isfinite(next) || !alpha.allFinite()) {
      raise(ErrorCode::ConvergenceFailure, "factor analysis EM produced non-finite values");
    }
    fit.diagnostics.loglik_trace.push_back(next);
    fit.diagnostics.em_iterations = it;
    const double gain = next - ll;
    ll = next;
    if (std::abs(gain) < opts.tol) {
      fit.diagnostics.converged = true;
      break;
    }
  }

  fit.alpha_hat = alpha;
  fit.sigma_eps_hat = psi.asDiagonal();
  fit.sigma_x_hat = alpha * alpha.transpose();
  fit.sigma_x_hat.diagonal() += psi;
  return fit;
}

Matrix fa_pca(const Matrix& X, int q) {
  require(q >= 1, ErrorCode::InvalidConfig, "PCA loadings need q >= 1");
  require(q <= std::min(X.rows(), X.cols()), ErrorCode::InvalidConfig, "PCA needs q <= min(n, p)");
  return principal_loadings(symmetric_eigen(sample_covariance(X)), q);
}

double make_positive_definite(Matrix& a, double eps) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin > 0.0) return 0.0;
  const double shift = std::abs(lmin) + eps;
  a.diagonal().array() += shift;
  return shift;
}

PoetResult poet(const Matrix& X, int q, double thresh_const) {
  const Index n = X.rows();
  const Index p = X.cols();
  require(q >= 0 && q <= std::min(n, p), ErrorCode::InvalidConfig, "POET needs 0 <= q <= min(n, p)");
  require(thresh_const >= 0.0, ErrorCode::InvalidConfig, "POET threshold constant must be >= 0");

  const Matrix S = sample_covariance(X);
  PoetResult out;
  Matrix low_rank = Matrix::Zero(p, p);
  if (q > 0) {
    const SymmetricEigen es = symmetric_eigen(S);
    out.eigenvalues = es.values;
    const Matrix loadings = principal_loadings(es, q);
    low_rank = loadings * loadings.transpose();
  }

  Matrix R = S - low_rank;
  const Vector rd = R.diagonal().cwiseMax(0.0);
  const bool kill_all = std::isinf(thresh_const);
  const double level =
      kill_all ? 0.0 : thresh_const * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < p; ++i) {
      if (i == j) continue;
      if (kill_all || std::abs(R(i, j)) < level * std::sqrt(rd(i) * rd(j))) R(i, j) = 0.0;
    }
  }

  out.sigma_eps_hat = R;
  out.sigma_x_hat = low_rank + R;
  out.pd_shift = make_positive_definite(out.sigma_x_hat, 1e-6);
  return out;
}

Matrix gamma_from(const Matrix& sigma_x, const Matrix& alpha) {
  require(sigma_x.rows() == sigma_x.cols() && sigma_x.rows() == alpha.rows(),
          ErrorCode::DimensionMismatch, "covariance and loadings disagree in p");
  if (alpha.cols() == 0) return Matrix(alpha.rows(), 0);
  Eigen::LLT<Matrix> llt(sigma_x);
  if (llt.info() != Eigen::Success) {
    raise(ErrorCode::SingularCovariance, "covariance is not positive definite");
  }
  Matrix gamma = llt.solve(alpha);
  const double target = 1e-8 * std::max(alpha.norm(), std::numeric_limits<double>::min());
  for (int refine = 0; refine < 3; ++refine) {
    const Matrix resid = alpha - sigma_x * gamma;
    if (resid.norm() < target) break;
    gamma += llt.solve(resid);
  }
  if (!gamma.allFinite() || (sigma_x * gamma - alpha).norm() >= target) {
    raise(ErrorCode::SingularCovariance, "covariance is too ill-conditioned to solve");
  }
  return gamma;
}

Matrix gamma_from(const FactorFit& fit) { return gamma_from(fit.sigma_x_hat, fit.alpha_hat); }

int default_q_max(Index n, Index p) {
  const Index m = std::min(n, p);
  const Index cap = std::min<Index>({8, (p - 1) / 2, m - 3});
  return static_cast<int>(std::max<Index>(cap, -1));
}

SelectQResult select_q(const Matrix& X, int q_max) {
  const Index m = std::min(X.rows(), X.cols());
  require(q_max >= 0, ErrorCode::InvalidConfig, "q_max must be >= 0");
  require(q_max < m - 2, ErrorCode::InvalidConfig, "select_q needs q_max < min(n, p) - 2");

  SelectQResult out;
  if (q_max == 0) return out;

  Eigen::SelfAdjointEigenSolver<Matrix> es(sample_covariance(X), Eigen::EigenvaluesOnly);
  const Vector lambda = es.eigenvalues().reverse().head(m);
  out.eigenvalues = lambda;

  // lambda is 0-based here; eigenvalue k (1-based) is lambda(k - 1).
  auto gap_count = [&](double threshold) {
    int q = 0;
    for (int k = 1; k <= q_max; ++k) {
      if (lambda(k - 1) - lambda(k) >= threshold) q = k;
    }
    return q;
  };

  int j = q_max + 1;
  int q_hat = 0;
  for (int iter = 1; iter <= 50; ++iter) {
    out.iterations = iter;
    const Index last = std::min<Index>(j + 4, m);
    const Index count = last - j + 1;
    // Least-squares slope of lambda_k on (k - 1)^{2/3} over the window.
    Vector xs(count);
    Vector ys(count);
    for (Index i = 0; i < count; ++i) {
      const Index k = j + i;
      xs(i) = std::pow(static_cast<double>(k - 1), 2.0 / 3.0);
      ys(i) = lambda(k - 1);
    }
    const double xbar = xs.mean();
    const double ybar = ys.mean();
    const double sxx = (xs.array() - xbar).square().sum();
    const double sxy = ((xs.array() - xbar) * (ys.array() - ybar)).sum();
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    out.threshold = 2.0 * std::abs(slope);
    q_hat = gap_count(out.threshold);
    const int next = q_hat + 1;
    if (next == j) break;
    j = next;
  }
  out.q = q_hat;
  return out;
}

}  // namespace spar
