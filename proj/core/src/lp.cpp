#include "spar/lp.hpp"

#include "spar/error.hpp"

#include <Eigen/LU>

#include <cmath>

namespace spar {

BoundedSimplex::BoundedSimplex(Matrix A, Vector c, Vector upper)
    : A_(std::move(A)), c_(std::move(c)), upper_(std::move(upper)) {
  require(A_.cols() == c_.size() && c_.size() == upper_.size(), ErrorCode::DimensionMismatch,
          "simplex: A, c and upper disagree in the number of columns");
  require((upper_.array() >= 0.0).all(), ErrorCode::InvalidConfig, "simplex: upper bounds must be >= 0");
}

BoundedSimplex::Result BoundedSimplex::solve(long max_pivots) const {
  constexpr double kPriceTol = 1e-9;
  constexpr double kPivotTol = 1e-9;
  constexpr int kRefactorEvery = 50;
  constexpr int kDegenerateRun = 50;

  const Index m = A_.rows();
  const Index N = A_.cols();
  const Index total = N + m;  // real columns then artificials

  enum : signed char { kBasic, kLower, kUpper };
  std::vector<signed char> state(static_cast<std::size_t>(total), kLower);
  std::vector<Index> basis(static_cast<std::size_t>(m));
  Vector x = Vector::Zero(total);
  for (Index k = 0; k < m; ++k) {
    basis[static_cast<std::size_t>(k)] = N + k;
    state[static_cast<std::size_t>(N + k)] = kBasic;
  }

  auto upper = [&](Index j) { return j < N ? upper_(j) : 0.0; };
  auto cost = [&](Index j) { return j < N ? c_(j) : 0.0; };
  auto column = [&](Index j) -> Vector {
    if (j < N) return A_.col(j);
    Vector e = Vector::Zero(m);
    e(j - N) = 1.0;
    return e;
  };

  Matrix Binv = Matrix::Identity(m, m);
  Result res;
  int since_refactor = 0;
  int degenerate = 0;
  bool bland = false;

  auto refactor = [&] {
    Matrix B(m, m);
    for (Index k = 0; k < m; ++k) B.col(k) = column(basis[static_cast<std::size_t>(k)]);
    Binv = Eigen::PartialPivLU<Matrix>(B).inverse();
    Vector rhs = Vector::Zero(m);
    for (Index j = 0; j < total; ++j) {
      if (state[static_cast<std::size_t>(j)] == kUpper) rhs -= column(j) * upper(j);
    }
    const Vector xb = Binv * rhs;
    for (Index k = 0; k < m; ++k) x(basis[static_cast<std::size_t>(k)]) = xb(k);
    since_refactor = 0;
  };

  while (true) {
    if (since_refactor >= kRefactorEvery) refactor();

    Vector cb(m);
    for (Index k = 0; k < m; ++k) cb(k) = cost(basis[static_cast<std::size_t>(k)]);
    const Vector y = Binv.transpose() * cb;
    const Vector reduced = c_ - A_.transpose() * y;

    Index enter = -1;
    double best = 0.0;
    for (Index j = 0; j < N; ++j) {
      const signed char s = state[static_cast<std::size_t>(j)];
      if (s == kBasic || upper_(j) <= 0.0) continue;
      const double d = reduced(j);
      const bool eligible = (s == kLower && d > kPriceTol) || (s == kUpper && d < -kPriceTol);
      if (!eligible) continue;
      if (bland) {
        enter = j;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        enter = j;
      }
    }

    if (enter < 0) {
      res.status = Status::Optimal;
      res.duals = y;
      break;
    }
    if (res.pivots >= max_pivots) {
      res.status = Status::IterationLimit;
      res.duals = y;
      break;
    }

    const double sigma = state[static_cast<std::size_t>(enter)] == kLower ? 1.0 : -1.0;
    const Vector alpha = Binv * A_.col(enter);

    double theta = upper_(enter);
    Index leave = -1;
    for (Index k = 0; k < m; ++k) {
      const double s = sigma * alpha(k);
      const Index b = basis[static_cast<std::size_t>(k)];
      double lim = 0.0;
      if (s > kPivotTol) {
        lim = x(b) / s;
      } else if (s < -kPivotTol) {
        const double ub = upper(b);
        if (std::isinf(ub)) continue;
        lim = (ub - x(b)) / (-s);
      } else {
        continue;
      }
      lim = std::max(lim, 0.0);
      bool take = lim < theta - 1e-12;
      if (!take && leave >= 0 && std::abs(lim - theta) <= 1e-12) {
        const Index other = basis[static_cast<std::size_t>(leave)];
        take = bland ? b < other : std::abs(alpha(k)) > std::abs(alpha(leave));
      } else if (!take && leave < 0 && std::abs(lim - theta) <= 1e-12 && !std::isinf(theta)) {
        // Prefer a basis change over a bound flip at equal step length.
        take = true;
      }
      if (take) {
        theta = lim;
        leave = k;
      }
    }

    if (std::isinf(theta)) {
      res.status = Status::Unbounded;
      res.duals = y;
      break;
    }

    for (Index k = 0; k < m; ++k) x(basis[static_cast<std::size_t>(k)]) -= sigma * theta * alpha(k);
    x(enter) += sigma * theta;

    if (leave < 0) {
      // Bound flip.
      const bool to_upper = state[static_cast<std::size_t>(enter)] == kLower;
      state[static_cast<std::size_t>(enter)] = to_upper ? kUpper : kLower;
      x(enter) = to_upper ? upper_(enter) : 0.0;
    } else {
      const Index out = basis[static_cast<std::size_t>(leave)];
      const bool hit_lower = sigma * alpha(leave) > 0.0;
      state[static_cast<std::size_t>(out)] = hit_lower ? kLower : kUpper;
      x(out) = hit_lower ? 0.0 : upper(out);
      basis[static_cast<std::size_t>(leave)] = enter;
      state[static_cast<std::size_t>(enter)] = kBasic;

      const double piv = alpha(leave);
      Binv.row(leave) /= piv;
      for (Index k = 0; k < m; ++k) {
        if (k != leave && alpha(k) != 0.0) Binv.row(k) -= alpha(k) * Binv.row(leave);
      }
      ++since_refactor;
    }

    ++res.pivots;
    if (theta <= 1e-12) {
      if (++degenerate > kDegenerateRun) bland = true;
    } else {
      degenerate = 0;
      bland = false;
    }
  }

  res.x = x.head(N);
  res.objective = c_.dot(res.x);
  return res;
}

}  // namespace spar
