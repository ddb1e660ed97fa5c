#include "spar/regression.hpp"

#include "spar/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace spar {

RegressionFit ols(const Matrix& X, const Vector& Y) {
  const Index n = X.rows();
  const Index p = X.cols();
  require(Y.size() == n, ErrorCode::DimensionMismatch, "ols: Y length must equal rows of X");
  require(n > p, ErrorCode::SingularDesign, "ols needs n > p");
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) raise(ErrorCode::SingularDesign, "X^T X is singular");
  RegressionFit fit;
  fit.xi_hat = qr.solve(Y);
  fit.sigma_resid2 = (Y - X * fit.xi_hat).squaredNorm() / static_cast<double>(n - p);
  fit.method = "ols";
  return fit;
}

namespace {

// Ridge coefficients for every lambda from one thin SVD of X.
class RidgeSvd {
 public:
  explicit RidgeSvd(const Matrix& X) : svd_(X, Eigen::ComputeThinU | Eigen::ComputeThinV), n_(X.rows()) {}

  Vector solve(const Vector& Y, double lambda) const {
    const Vector uty = svd_.matrixU().transpose() * Y;
    const Vector& d = svd_.singularValues();
    Vector scaled(d.size());
    const double pen = static_cast<double>(n_) * lambda;
    for (Index k = 0; k < d.size(); ++k) {
      const double denom = d(k) * d(k) + pen;
      scaled(k) = denom > 0.0 ? d(k) * uty(k) / denom : 0.0;
    }
    return svd_.matrixV() * scaled;
  }

 private:
  Eigen::BDCSVD<Matrix> svd_;
  Index n_;
};

}  // namespace

RegressionFit ridge(const Matrix& X, const Vector& Y, double lambda) {
  require(lambda >= 0.0, ErrorCode::InvalidConfig, "ridge penalty must be >= 0");
  require(Y.size() == X.rows(), ErrorCode::DimensionMismatch, "ridge: Y length must equal rows of X");
  RegressionFit fit;
  if (lambda == 0.0) {
    fit = ols(X, Y);
  } else {
    fit.xi_hat = RidgeSvd(X).solve(Y, lambda);
    const Index dof = std::max<Index>(1, X.rows() - std::min(X.rows(), X.cols()));
    fit.sigma_resid2 = (Y - X * fit.xi_hat).squaredNorm() / static_cast<double>(dof);
  }
  fit.method = "ridge";
  fit.lambda = lambda;
  return fit;
}

std::vector<double> ridge_lambda_grid(const Matrix& X) {
  const Matrix Xc = X.rowwise() - X.colwise().mean();
  double base = Xc.squaredNorm() / static_cast<double>(X.rows() * std::max<Index>(1, X.cols()));
  if (!(base > 0.0)) base = 1.0;
  std::vector<double> grid(50);
  for (int k = 0; k < 50; ++k) {
    // From 1e3 * base down to 1e-5 * base.
    grid[static_cast<std::size_t>(k)] = base * std::pow(10.0, 3.0 - 8.0 * k / 49.0);
  }
  return grid;
}

RegressionFit ridge_cv(const Matrix& X, const Vector& Y, int folds, std::uint64_t seed) {
  const Index n = X.rows();
  require(Y.size() == n, ErrorCode::DimensionMismatch, "ridge_cv: Y length must equal rows of X");
  require(folds >= 2 && n >= folds, ErrorCode::InvalidConfig, "ridge_cv needs 2 <= folds <= n");

  const std::vector<double> grid = ridge_lambda_grid(X);
  std::vector<double> cv(grid.size(), 0.0);

  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 eng(seed);
  std::shuffle(perm.begin(), perm.end(), eng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) fold[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = static_cast<int>(i % folds);

  for (int f = 0; f < folds; ++f) {
    std::vector<Index> train;
    std::vector<Index> test;
    for (Index i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    Matrix Xtr(static_cast<Index>(train.size()), X.cols());
    Vector Ytr(static_cast<Index>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i) {
      Xtr.row(static_cast<Index>(i)) = X.row(train[i]);
      Ytr(static_cast<Index>(i)) = Y(train[i]);
    }
    const Eigen::RowVectorXd xm = Xtr.colwise().mean();
    const double ym = Ytr.mean();
    const RidgeSvd svd(Xtr.rowwise() - xm);
    const Vector yc = Ytr.array() - ym;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Vector b = svd.solve(yc, grid[k]);
      for (Index i : test) {
        const double pred = ym + (X.row(i) - xm).dot(b.transpose());
        cv[k] += (Y(i) - pred) * (Y(i) - pred);
      }
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(cv.begin(), cv.end()) - cv.begin());

  const Matrix Xc = X.rowwise() - X.colwise().mean();
  const Vector Yc = Y.array() - Y.mean();
  RegressionFit fit = ridge(Xc, Yc, grid[best]);
  fit.method = "ridge-cv";
  return fit;
}

}  // namespace spar
