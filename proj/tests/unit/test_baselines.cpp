#include "spar/baselines.hpp"
#include "spar/dataset.hpp"
#include "spar/error.hpp"
#include "spar/metrics.hpp"
#include "spar/regression.hpp"
#include "spar/rng.hpp"
#include "spar/simulate.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace spar;

TEST_SUITE("baselines") {
  TEST_CASE("null_treatments: single large outlier") {
    Vector xi(5);
    xi << 1, 1, 1, 1, 10;
    const NullResult r = null_treatments(xi, Matrix::Ones(5, 1));
    CHECK(r.exhaustive);
    CHECK(r.delta_hat(0) == doctest::Approx(1.0).epsilon(1e-14));
    Vector expect = Vector::Zero(5);
    expect(4) = 9.0;
    CHECK((r.beta_hat - expect).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(r.objective == 0.0);
  }

  TEST_CASE("null_treatments: consistent system and guards") {
    Rng rng(1);
    const Matrix g = rng.normal_matrix(8, 2);
    const NullResult r = null_treatments(g * Eigen::Vector2d(0.5, -2.0), g);
    CHECK(r.beta_hat.cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(null_treatments(Vector::Ones(2), Matrix::Ones(2, 2)), Error);
    LmsConfig bad;
    bad.n_subsets = 0;
    CHECK_THROWS_AS(null_treatments(Vector::Ones(4), Matrix::Ones(4, 1), bad), Error);
  }

  TEST_CASE("null_treatments: the returned fit minimizes over its candidates") {
    Rng rng(2);
    for (int rep = 0; rep < 20; ++rep) {
      const Index p = 30 + rep, q = 1 + rep % 3;
      const Matrix g = rng.normal_matrix(p, q);
      Vector xi = g * rng.normal_matrix(q, 1).col(0) + 0.1 * rng.normal_matrix(p, 1).col(0);
      for (Index i = 0; i < p / 4; ++i) xi(i) += 5.0;
      LmsConfig cfg;
      cfg.record_candidates = true;
      cfg.exhaustive_limit = rep % 2 ? 20000 : 10;
      cfg.seed = static_cast<std::uint64_t>(rep);
      const NullResult r = null_treatments(xi, g, cfg);
      CHECK(r.exhaustive == (rep % 2 == 1));
      REQUIRE_FALSE(r.candidates.empty());
      for (std::size_t k = 0; k < r.candidates.size(); ++k) {
        CHECK(r.objective <= r.candidate_objectives[k]);
        CHECK(r.candidate_objectives[k] == lms_objective(xi, g, r.candidates[k]));
      }
      CHECK(r.objective == lms_objective(xi, g, r.delta_hat));
    }
  }

  TEST_CASE("lms_objective uses the lower median") {
    Vector xi(4);
    xi << 1, 2, 3, 4;
    CHECK(lms_objective(xi, Matrix(4, 0), Vector(0)) == 4.0);
  }

  TEST_CASE("ppca: k=0 and guards") {
    Rng rng(3);
    const Matrix X = center_columns(rng.normal_matrix(20, 5));
    const PpcaFit f = ppca(X, 0);
    CHECK(f.substitute.rows() == 20);
    CHECK(f.substitute.cols() == 0);
    CHECK_THROWS_AS(ppca(X, 5), Error);
    CHECK_THROWS_AS(ppca(X, -1), Error);
  }

  TEST_CASE("ppca: noiseless rank-k data") {
    Rng rng(4);
    const Matrix X = center_columns(rng.normal_matrix(30, 2) * rng.normal_matrix(2, 7));
    const PpcaFit f = ppca(X, 2);
    CHECK(f.sigma2 < 1e-12);
    CHECK((f.substitute * f.loadings.transpose() - X).cwiseAbs().maxCoeff() < 1e-8);
  }

  TEST_CASE("ppca: 20x5 instance against EM") {
    Rng rng(5);
    const Matrix X = center_columns(rng.normal_matrix(20, 2) * rng.normal_matrix(2, 5) + 0.5 * rng.normal_matrix(20, 5));
    const PpcaFit f = ppca(X, 2);
    const oracle::PpcaEm em = oracle::ppca_em(X, 2, 6);
    CHECK(f.sigma2 == doctest::Approx(em.sigma2).epsilon(1e-6));
    CHECK((f.loadings * f.loadings.transpose() - em.wwt).cwiseAbs().maxCoeff() < 1e-6);
  }

  TEST_CASE("deconfounder: k=0 equals the plain outcome regression") {
    Rng rng(6);
    Dataset d;
    d.X = rng.normal_matrix(60, 10);
    d.Y = d.X.col(0) - d.X.col(3) + rng.normal_matrix(60, 1).col(0);
    const Dataset prep = prepare(d);
    DeconfConfig c;
    c.k = 0;
    c.seed = 9;
    CHECK(deconfounder(d, c) == lasso_cv(prep.X, prep.Y, 10, 9).coef);
    c.outcome_stage = OutcomeStage::Ridge;
    CHECK(deconfounder(d, c) == ridge_cv(prep.X, prep.Y, 10, 9).xi_hat);
  }

  TEST_CASE("deconfounder: no worse than lasso on the high-dimensional design") {
    double mae_deconf = 0.0, mae_lasso = 0.0;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
      HighDimConfig c;
      c.seed = 500 + rep;
      const Simulated s = gen_highdim(c);
      const Dataset prep = prepare(s.data);
      DeconfConfig dc;
      dc.seed = rep;
      mae_deconf += metrics(deconfounder(s.data, dc), s.truth.beta).mae;
      mae_lasso += metrics(lasso_cv(prep.X, prep.Y, 10, rep).coef, s.truth.beta).mae;
    }
    MESSAGE("deconf " << mae_deconf / 20 << " lasso " << mae_lasso / 20);
    CHECK(mae_deconf <= mae_lasso);
  }

  TEST_CASE("deconfounder: ridge stage tracks plain ridge on GWAS data") {
    double mae_deconf = 0.0, mae_ridge = 0.0;
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
      GwasConfig g;
      g.n = 500;
      g.p = 500;
      g.seed = 700 + rep;
      const Simulated s = gen_gwas(g);
      const Dataset prep = prepare(s.data);
      DeconfConfig dc;
      dc.outcome_stage = OutcomeStage::Ridge;
      dc.seed = rep;
      mae_deconf += metrics(deconfounder(s.data, dc), s.truth.beta).mae;
      mae_ridge += metrics(ridge_cv(prep.X, prep.Y, 10, rep).xi_hat, s.truth.beta).mae;
    }
    MESSAGE("deconf-ridge " << mae_deconf / 5 << " ridge " << mae_ridge / 5);
    CHECK(std::abs(mae_deconf / mae_ridge - 1.0) <= 0.15);
  }
}
