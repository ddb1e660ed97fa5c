#include "spar/dataset.hpp"
#include "spar/error.hpp"
#include "spar/factor.hpp"
#include "spar/rng.hpp"
#include "spar/simulate.hpp"

#include "oracles.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <cmath>

using namespace spar;

namespace {

Matrix factor_data(Index n, Index p, Index q, double noise_sd, std::uint64_t seed, Matrix* alpha_out = nullptr) {
  Rng rng(seed);
  const Matrix alpha = rng.uniform_matrix(p, q, -1.0, 1.0);
  const Matrix U = rng.normal_matrix(n, q);
  Matrix X = U * alpha.transpose() + noise_sd * rng.normal_matrix(n, p);
  if (alpha_out) *alpha_out = alpha;
  return center_columns(X);
}

double rel_frob(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_SUITE("factor") {
  TEST_CASE("fa_mle: guards") {
    const Matrix X = factor_data(50, 5, 1, 1.0, 1);
    CHECK_THROWS_AS(fa_mle(X, 0), Error);
    CHECK_THROWS_AS(fa_mle(X.topRows(5), 1), Error);
    CHECK_THROWS_AS(fa_mle(X, 5), Error);
  }

  TEST_CASE("fa_mle: noiseless rank-1 data") {
    Rng rng(2);
    Vector a(6);
    a << 1.0, -0.5, 0.8, 0.3, -1.2, 0.6;
    const Vector u = rng.normal_matrix(200, 1).col(0);
    const Matrix X = center_columns(u * a.transpose());
    const double var_u = center(u).squaredNorm() / 200.0;
    const FactorFit fit = fa_mle(X, 1);
    const Matrix aat = fit.alpha_hat * fit.alpha_hat.transpose();
    CHECK(rel_frob(aat, a * a.transpose() * var_u) < 1e-4);
  }

  TEST_CASE("fa_mle: matches an EM oracle with random restarts") {
    const Matrix X = factor_data(400, 5, 2, 0.7, 3);
    const FactorFit fit = fa_mle(X, 2);
    const Matrix S = sample_covariance(X);
    const Matrix ref = oracle::factor_em(S, 2, 10, 99);
    CHECK(rel_frob(fit.sigma_x_hat, ref) < 0.10);
  }

  TEST_CASE("fa_mle: structure and monotone log-likelihood") {
    const Matrix X = factor_data(500, 12, 3, 1.0, 4);
    const FactorFit fit = fa_mle(X, 3);
    CHECK(fit.diagnostics.converged);
    const Matrix& E = fit.sigma_eps_hat;
    CHECK((E - Matrix(E.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
    CHECK((fit.sigma_x_hat - fit.sigma_x_hat.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::LLT<Matrix> llt(fit.sigma_x_hat);
    CHECK(llt.info() == Eigen::Success);
    const auto& tr = fit.diagnostics.loglik_trace;
    for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr[i] >= tr[i - 1] - 1e-10);
    CHECK(fit.alpha_hat.allFinite());
  }

  TEST_CASE("fa_pca: exact rank one") {
    Rng rng(5);
    const Vector a = rng.uniform_vector(8, -1.0, 1.0);
    const Vector u = rng.normal_matrix(40, 1).col(0);
    const Matrix X = center_columns(u * a.transpose());
    const Matrix L = fa_pca(X, 3);
    const Vector l0 = L.col(0).normalized();
    CHECK(std::abs(std::abs(l0.dot(a.normalized())) - 1.0) < 1e-10);
    CHECK(L.col(1).norm() < 1e-6);
    CHECK(L.col(2).norm() < 1e-6);
  }

  TEST_CASE("fa_pca: homogeneity and guards") {
    const Matrix X = factor_data(60, 10, 2, 1.0, 6);
    const Matrix L = fa_pca(X, 2);
    const Matrix L3 = fa_pca(3.0 * X, 2);
    CHECK((L3 - 3.0 * L).cwiseAbs().maxCoeff() < 1e-10);
    CHECK_THROWS_AS(fa_pca(X, 0), Error);
    CHECK_THROWS_AS(fa_pca(X, 11), Error);
  }

  TEST_CASE("fa_pca: matches the rank-q truncation from a dense eigensolver") {
    Rng rng(7);
    const Matrix X = center_columns(rng.normal_matrix(50, 20));
    const Matrix S = X.transpose() * X / 50.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    for (int q : {1, 3, 5}) {
      Matrix trunc = Matrix::Zero(20, 20);
      for (int k = 0; k < q; ++k) {
        const Index idx = 19 - k;
        trunc += es.eigenvalues()(idx) * es.eigenvectors().col(idx) * es.eigenvectors().col(idx).transpose();
      }
      const Matrix L = fa_pca(X, q);
      CHECK((L * L.transpose() - trunc).cwiseAbs().maxCoeff() < 1e-10);
      const Matrix LtL = L.transpose() * L;
      for (int i = 0; i < q; ++i) {
        for (int j = 0; j < q; ++j)
          if (i != j) CHECK(std::abs(LtL(i, j)) < 1e-10);
        if (i > 0) CHECK(LtL(i, i) <= LtL(i - 1, i - 1));
      }
    }
  }

  TEST_CASE("poet: limiting thresholds") {
    const Matrix X = factor_data(80, 15, 2, 1.0, 8);
    const Matrix S = sample_covariance(X);
    const PoetResult a = poet(X, 0, 0.0);
    CHECK((a.sigma_x_hat - S).cwiseAbs().maxCoeff() == 0.0);
    const PoetResult b = poet(X, 0, std::numeric_limits<double>::infinity());
    CHECK((b.sigma_x_hat - Matrix(S.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
    const PoetResult c = poet(X, 2, 1e12);
    CHECK((c.sigma_eps_hat - Matrix(c.sigma_eps_hat.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(poet(X, -1, 0.5), Error);
  }

  TEST_CASE("poet: beats the sample covariance on factor data") {
    int wins = 0;
    for (int rep = 0; rep < 20; ++rep) {
      Rng rng(100 + static_cast<std::uint64_t>(rep));
      const Index n = 300, p = 200, q = 3;
      const Matrix alpha = rng.uniform_matrix(p, q, -1.0, 1.0);
      const Matrix X = center_columns(rng.normal_matrix(n, q) * alpha.transpose() +
                                      std::sqrt(2.0) * rng.normal_matrix(n, p));
      Matrix truth = alpha * alpha.transpose();
      truth.diagonal().array() += 2.0;
      const PoetResult pr = poet(X, 3, 0.5);
      wins += rel_frob(pr.sigma_x_hat, truth) < rel_frob(sample_covariance(X), truth);
    }
    CHECK(wins == 20);
  }

  TEST_CASE("poet: output symmetric positive definite when p > n") {
    const Matrix X = factor_data(40, 90, 3, 1.0, 9);
    const PoetResult pr = poet(X, 3, 0.5);
    CHECK((pr.sigma_x_hat - pr.sigma_x_hat.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::LLT<Matrix> llt(pr.sigma_x_hat);
    CHECK(llt.info() == Eigen::Success);
  }

  TEST_CASE("gamma_from: identity, scaling and singular input") {
    Rng rng(10);
    const Matrix a = rng.uniform_matrix(5, 2, -1.0, 1.0);
    CHECK((gamma_from(Matrix::Identity(5, 5), a) - a).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((gamma_from(2.0 * Matrix::Identity(5, 5), a) - a / 2.0).cwiseAbs().maxCoeff() < 1e-14);
    Matrix sing = Matrix::Identity(5, 5);
    sing(4, 4) = 0.0;
    CHECK_THROWS_AS(gamma_from(sing, a), Error);
  }

  TEST_CASE("gamma_from: 4x2 instance against an explicit inverse") {
    Matrix S(4, 4);
    S << 2, 0.3, 0.1, 0, 0.3, 1.5, 0.2, 0.1, 0.1, 0.2, 1.2, 0.4, 0, 0.1, 0.4, 1.8;
    Matrix a(4, 2);
    a << 1, 0.2, 0.5, -0.3, 0.2, 0.8, -0.4, 0.6;
    Matrix frozen(4, 2);
    frozen << 0.4554727551397918, 0.11634339270299313, 0.23645684688969926, -0.32267498194246247,
        0.18117435653506686, 0.6411570917675246, -0.2756196818349982, 0.2087803674929091;
    const Matrix g = gamma_from(S, a);
    CHECK((g - frozen).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g - S.inverse() * a).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((S * g - a).norm() < 1e-8 * a.norm());
  }

  TEST_CASE("gamma_from: rotation of the loadings rotates gamma") {
    Rng rng(11);
    const Matrix X = factor_data(300, 10, 2, 1.0, 12);
    const FactorFit fit = fa_mle(X, 2);
    const Matrix R = random_orthogonal(2, rng);
    const Matrix g = gamma_from(fit);
    const Matrix gr = gamma_from(fit.sigma_x_hat, fit.alpha_hat * R);
    CHECK((gr - g * R).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("select_q: guards and empty search") {
    const Matrix X = factor_data(50, 10, 1, 1.0, 13);
    CHECK(select_q(X, 0).q == 0);
    CHECK_THROWS_AS(select_q(X, 8), Error);
    CHECK_THROWS_AS(select_q(X, -1), Error);
    CHECK(default_q_max(1000, 13) == 6);
    CHECK(default_q_max(300, 300) == 8);
  }

  TEST_CASE("select_q: pure noise gives zero") {
    int zeros = 0;
    for (int rep = 0; rep < 50; ++rep) {
      Rng rng(200 + static_cast<std::uint64_t>(rep));
      const Matrix X = center_columns(rng.normal_matrix(500, 100));
      zeros += select_q(X, default_q_max(500, 100)).q == 0;
    }
    CHECK(zeros >= 45);
  }

  TEST_CASE("select_q: strong three-factor data") {
    int hits = 0;
    for (int rep = 0; rep < 50; ++rep) {
      LowDimConfig c;
      c.seed = 300 + static_cast<std::uint64_t>(rep);
      const Simulated s = gen_lowdim(c);
      hits += select_q(center_columns(s.data.X), default_q_max(1000, 13)).q == 3;
    }
    CHECK(hits >= 45);
  }
}
