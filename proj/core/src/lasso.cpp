#include "gram_lasso.hpp"

#include "spar/error.hpp"
#include "spar/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace spar {
namespace detail {

Standardized Standardized::build(const Matrix& X, const Vector& Y) {
  require(X.rows() >= 1, ErrorCode::EmptyMatrix, "lasso needs at least one row");
  require(Y.size() == X.rows(), ErrorCode::DimensionMismatch, "lasso: Y length must equal rows of X");
  Standardized s;
  s.n = X.rows();
  const double inv_n = 1.0 / static_cast<double>(s.n);
  s.x_mean = X.colwise().mean().transpose();
  Matrix Xs = X.rowwise() - s.x_mean.transpose();
  s.x_scale = (Xs.colwise().squaredNorm() * inv_n).cwiseSqrt().transpose();
  for (Index j = 0; j < Xs.cols(); ++j) {
    const double magnitude = std::max(1.0, X.col(j).cwiseAbs().maxCoeff());
    if (s.x_scale(j) <= 1e-12 * magnitude) {
      s.x_scale(j) = 0.0;
      Xs.col(j).setZero();
    } else {
      Xs.col(j) /= s.x_scale(j);
    }
  }
  s.G.setZero(Xs.cols(), Xs.cols());
  s.G.selfadjointView<Eigen::Lower>().rankUpdate(Xs.transpose(), inv_n);
  s.G.triangularView<Eigen::StrictlyUpper>() = s.G.transpose();
  s.y_mean = Y.mean();
  const Vector yc = Y.array() - s.y_mean;
  s.c = Xs.transpose() * yc * inv_n;
  s.yy = yc.squaredNorm() * inv_n;
  return s;
}

void Standardized::set_response(const Matrix& X, const Vector& Y) {
  const double inv_n = 1.0 / static_cast<double>(n);
  y_mean = Y.mean();
  const Vector yc = Y.array() - y_mean;
  Vector raw = (X.transpose() * yc - x_mean * yc.sum()) * inv_n;
  for (Index j = 0; j < raw.size(); ++j) raw(j) = active(j) ? raw(j) / x_scale(j) : 0.0;
  c = raw;
  yy = yc.squaredNorm() * inv_n;
}

Vector Standardized::unscale(const Vector& b) const {
  Vector out = Vector::Zero(b.size());
  for (Index j = 0; j < b.size(); ++j) {
    if (active(j)) out(j) = b(j) / x_scale(j);
  }
  return out;
}

double Standardized::intercept(const Vector& coef) const { return y_mean - x_mean.dot(coef); }

double residual_mse(const Standardized& s, const Vector& b) {
  return std::max(0.0, s.yy - 2.0 * s.c.dot(b) + b.dot(s.G * b));
}

namespace {

inline double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

double kkt_violation(const Vector& grad, const Vector& b, const std::vector<char>& usable,
                     double lambda, Index skip) {
  double worst = 0.0;
  for (Index j = 0; j < b.size(); ++j) {
    if (!usable[static_cast<std::size_t>(j)] || j == skip) continue;
    const double v = b(j) == 0.0 ? std::max(0.0, std::abs(grad(j)) - lambda)
                                 : std::abs(grad(j) - lambda * (b(j) > 0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace

CdResult coordinate_descent(const Matrix& G, const Vector& c, const std::vector<char>& usable,
                            double lambda, Vector& b, double tol, long max_sweeps, Index skip,
                            double kkt_target) {
  const Index p = G.rows();
  CdResult res;
  Vector grad(p);
  std::vector<Index> active;
  active.reserve(static_cast<std::size_t>(p));

  auto update = [&](Index j) {
    const double gjj = G(j, j);
    const double z = grad(j) + gjj * b(j);
    const double next = soft_threshold(z, lambda) / gjj;
    const double delta = next - b(j);
    if (delta != 0.0) {
      grad.noalias() -= G.col(j) * delta;
      b(j) = next;
    }
    return std::abs(delta);
  };

  double current_tol = tol;
  while (true) {
    grad = c - G * b;
    double change = 0.0;
    for (Index j = 0; j < p; ++j) {
      if (!usable[static_cast<std::size_t>(j)] || j == skip) continue;
      change = std::max(change, update(j));
    }
    ++res.sweeps;
    if (change < current_tol) {
      // Tighten until the KKT conditions hold well inside the reported tolerance.
      if (kkt_violation(grad, b, usable, lambda, skip) <= kkt_target || current_tol < 1e-13) {
        res.converged = true;
        return res;
      }
      current_tol *= 0.1;
      continue;
    }

    active.clear();
    for (Index j = 0; j < p; ++j) {
      if (b(j) != 0.0 && usable[static_cast<std::size_t>(j)] && j != skip) active.push_back(j);
    }
    // Inner sweeps over the active set work on a compact copy of G.
    const Index m = static_cast<Index>(active.size());
    Matrix Ga(m, m);
    Vector ba(m), ga(m);
    for (Index a = 0; a < m; ++a) {
      const Index ja = active[static_cast<std::size_t>(a)];
      for (Index k = 0; k < m; ++k) Ga(k, a) = G(active[static_cast<std::size_t>(k)], ja);
      ba(a) = b(ja);
      ga(a) = grad(ja);
    }
    while (true) {
      double inner = 0.0;
      for (Index a = 0; a < m; ++a) {
        const double gaa = Ga(a, a);
        const double next = soft_threshold(ga(a) + gaa * ba(a), lambda) / gaa;
        const double delta = next - ba(a);
        if (delta != 0.0) {
          ga.noalias() -= Ga.col(a) * delta;
          ba(a) = next;
          inner = std::max(inner, std::abs(delta));
        }
      }
      ++res.sweeps;
      if (res.sweeps > max_sweeps) {
        raise(ErrorCode::ConvergenceFailure, "coordinate descent exceeded the sweep limit");
      }
      if (inner < current_tol) break;
    }
    for (Index a = 0; a < m; ++a) b(active[static_cast<std::size_t>(a)]) = ba(a);
  }
}

std::vector<char> usable_mask(const Standardized& s) {
  std::vector<char> mask(static_cast<std::size_t>(s.p()));
  for (Index j = 0; j < s.p(); ++j) mask[static_cast<std::size_t>(j)] = s.active(j) ? 1 : 0;
  return mask;
}

// Path fits only feed CV errors and warm starts, so a looser KKT target suffices.
constexpr double kPathKkt = 1e-6;

/// Warm-started path over decreasing lambdas. Stops early (repeating the last
/// solution) once 99.9% of the response variance is explained.
std::vector<Vector> lasso_path(const Standardized& s, const std::vector<double>& lambdas,
                               const LassoOptions& opts) {
  const std::vector<char> usable = usable_mask(s);
  std::vector<Vector> path;
  path.reserve(lambdas.size());
  Vector b = Vector::Zero(s.p());
  bool saturated = false;
  for (double lam : lambdas) {
    if (!saturated) {
      coordinate_descent(s.G, s.c, usable, lam, b, opts.tol, opts.max_sweeps, -1, kPathKkt);
      if (s.yy > 0.0 && residual_mse(s, b) < 1e-3 * s.yy) saturated = true;
    }
    path.push_back(b);
  }
  return path;
}

double lambda_max(const Standardized& s) {
  return s.c.size() == 0 ? 0.0 : s.c.cwiseAbs().maxCoeff();
}

std::vector<double> lasso_grid(double lmax) {
  std::vector<double> grid(100);
  for (int k = 0; k < 100; ++k) {
    grid[static_cast<std::size_t>(k)] = lmax * std::pow(1e-3, static_cast<double>(k) / 99.0);
  }
  return grid;
}

std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 eng(seed);
  std::shuffle(perm.begin(), perm.end(), eng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) fold[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = static_cast<int>(i % folds);
  return fold;
}

Matrix select_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

Vector select_rows(const Vector& v, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = v(rows[i]);
  return out;
}

LassoCvFit lasso_cv_impl(const Matrix& X, const Vector& Y, const Standardized& full, int folds,
                         std::uint64_t seed) {
  const Index n = X.rows();
  require(folds >= 2, ErrorCode::InvalidConfig, "lasso_cv needs at least 2 folds");
  require(n >= folds, ErrorCode::InvalidConfig, "lasso_cv needs n >= folds");

  LassoCvFit out;
  const double lmax = lambda_max(full);
  if (!(lmax > 0.0)) {
    out.coef = Vector::Zero(X.cols());
    out.intercept = full.y_mean;
    out.lambdas.assign(100, 0.0);
    out.cv_mse.assign(100, 0.0);
    return out;
  }
  out.lambdas = lasso_grid(lmax);
  out.cv_mse.assign(out.lambdas.size(), 0.0);

  const LassoOptions opts;
  const std::vector<int> fold = fold_assignment(n, folds, seed);
  for (int f = 0; f < folds; ++f) {
    std::vector<Index> train;
    std::vector<Index> test;
    for (Index i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    const Matrix Xtr = select_rows(X, train);
    const Standardized s = Standardized::build(Xtr, select_rows(Y, train));
    const std::vector<Vector> path = lasso_path(s, out.lambdas, opts);
    const Matrix Xte = select_rows(X, test);
    const Vector Yte = select_rows(Y, test);
    for (std::size_t k = 0; k < path.size(); ++k) {
      const Vector coef = s.unscale(path[k]);
      const Vector pred = (Xte * coef).array() + s.intercept(coef);
      out.cv_mse[k] += (Yte - pred).squaredNorm();
    }
  }
  for (double& e : out.cv_mse) e /= static_cast<double>(n);

  const auto best = static_cast<std::size_t>(
      std::min_element(out.cv_mse.begin(), out.cv_mse.end()) - out.cv_mse.begin());
  out.lambda_star = out.lambdas[best];
  const std::vector<double> head(out.lambdas.begin(), out.lambdas.begin() + static_cast<long>(best) + 1);
  const std::vector<Vector> path = lasso_path(full, head, opts);
  out.coef = full.unscale(path.back());
  out.intercept = full.intercept(out.coef);
  return out;
}

ScaledLassoFit scaled_lasso_impl(const Standardized& s) {
  ScaledLassoFit out;
  out.lambda0 = scaled_lasso_lambda0(s.n, s.p());
  const std::vector<char> usable = usable_mask(s);
  Vector b = Vector::Zero(s.p());
  double sigma = std::sqrt(s.yy);
  if (!(sigma > 0.0)) {
    out.coef = Vector::Zero(s.p());
    return out;
  }
  const double floor = 1e-10 * sigma;
  for (int it = 1; it <= 100; ++it) {
    coordinate_descent(s.G, s.c, usable, sigma * out.lambda0, b, 1e-7, 100000);
    const double next = std::sqrt(residual_mse(s, b));
    out.alternations = it;
    const bool done = std::abs(next - sigma) < 1e-6 || next < floor;
    sigma = next;
    if (done) {
      out.sigma_hat = sigma;
      out.coef = s.unscale(b);
      return out;
    }
  }
  raise(ErrorCode::ConvergenceFailure, "scaled lasso did not converge in 100 alternations");
}

Matrix nodewise_impl(const Standardized& s) {
  const Index p = s.p();
  require(p >= 2, ErrorCode::InvalidConfig, "nodewise inverse needs p >= 2");
  const std::vector<char> usable = usable_mask(s);
  const double rate = std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(s.n));
  Matrix M = Matrix::Zero(p, p);
  Vector b(p);
  for (Index j = 0; j < p; ++j) {
    if (!s.active(j)) continue;
    const double sd = s.x_scale(j);
    const Vector cj = s.G.col(j) * sd;
    b.setZero();
    coordinate_descent(s.G, cj, usable, rate * sd, b, 1e-7, 100000, j);
    double tau2 = sd * sd - b.dot(cj);
    tau2 = std::max(tau2, 1e-12 * sd * sd);
    const Vector gamma = s.unscale(b);
    M.row(j) = -gamma.transpose() / tau2;
    M(j, j) = 1.0 / tau2;
  }
  return M;
}

}  // namespace detail

using detail::Standardized;

LassoFit lasso_cd(const Matrix& X, const Vector& Y, double lambda, LassoOptions opts) {
  require(lambda >= 0.0, ErrorCode::InvalidConfig, "lasso penalty must be >= 0");
  const Standardized s = Standardized::build(X, Y);
  Vector b = Vector::Zero(s.p());
  const detail::CdResult cd =
      detail::coordinate_descent(s.G, s.c, detail::usable_mask(s), lambda, b, opts.tol, opts.max_sweeps);
  LassoFit fit;
  fit.coef = s.unscale(b);
  fit.intercept = s.intercept(fit.coef);
  fit.lambda = lambda;
  fit.sweeps = cd.sweeps;
  return fit;
}

double lasso_lambda_max(const Matrix& X, const Vector& Y) {
  return detail::lambda_max(Standardized::build(X, Y));
}

LassoCvFit lasso_cv(const Matrix& X, const Vector& Y, int folds, std::uint64_t seed) {
  require(folds >= 2, ErrorCode::InvalidConfig, "lasso_cv needs at least 2 folds");
  require(X.rows() >= folds, ErrorCode::InvalidConfig, "lasso_cv needs n >= folds");
  return detail::lasso_cv_impl(X, Y, Standardized::build(X, Y), folds, seed);
}

double scaled_lasso_lambda0(Index n, Index p) {
  return std::sqrt(2.0 * std::log(static_cast<double>(p)) / static_cast<double>(n));
}

ScaledLassoFit scaled_lasso(const Matrix& X, const Vector& Y) {
  require(X.rows() >= 2, ErrorCode::InvalidConfig, "scaled lasso needs n >= 2");
  return detail::scaled_lasso_impl(Standardized::build(X, Y));
}

Matrix nodewise_inverse(const Matrix& X) {
  require(X.cols() >= 2, ErrorCode::InvalidConfig, "nodewise inverse needs p >= 2");
  return detail::nodewise_impl(Standardized::build(X, Vector::Zero(X.rows())));
}

RegressionFit debiased_lasso(const Matrix& X, const Vector& Y, std::uint64_t seed) {
  require(X.rows() == Y.size(), ErrorCode::DimensionMismatch, "debiased lasso: Y length must equal rows of X");
  require(X.cols() >= 2, ErrorCode::InvalidConfig, "debiased lasso needs p >= 2");
  const Standardized s = Standardized::build(X, Y);
  const LassoCvFit cv = detail::lasso_cv_impl(X, Y, s, 10, seed);
  const Matrix M = detail::nodewise_impl(s);
  const ScaledLassoFit sl = detail::scaled_lasso_impl(s);

  const Matrix Xc = X.rowwise() - s.x_mean.transpose();
  const Vector resid = (Y.array() - s.y_mean).matrix() - Xc * cv.coef;
  RegressionFit fit;
  fit.xi_hat = cv.coef + M * (Xc.transpose() * resid) / static_cast<double>(X.rows());
  fit.sigma_resid2 = sl.sigma_hat * sl.sigma_hat;
  fit.method = "debiased-lasso";
  fit.lambda = cv.lambda_star;
  fit.iterations = sl.alternations;
  return fit;
}

}  // namespace spar
