#include "spar/error.hpp"
#include "spar/mip.hpp"
#include "spar/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace spar;

namespace {

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

Vector vec(std::initializer_list<double> v) { return col(v).col(0); }

// xi = gamma delta0 plus a few large shifts and small noise.
MipProblem random_problem(Rng& rng, Index p, Index q) {
  const Matrix gamma = rng.uniform_matrix(p, q, -1.0, 1.0);
  const Vector d0 = rng.uniform_vector(q, -1.0, 1.0);
  Vector xi = gamma * d0 + 0.05 * rng.normal_matrix(p, 1).col(0);
  for (Index i = 0; i < p; ++i)
    if (rng.bernoulli(0.3)) xi(i) += rng.uniform(-3.0, 3.0);
  return build_mip(xi, gamma, rng.uniform(0.01, 0.3), 30.0);
}

}  // namespace

TEST_SUITE("mip") {
  TEST_CASE("build_mip guards") {
    CHECK_NOTHROW(build_mip(vec({1, 2, 3}), col({1, 1, 1}), 0.1, 30));
    CHECK_THROWS_AS(build_mip(vec({1, 2, 3}), col({1, 1, 1}), -0.1, 30), Error);
    CHECK_THROWS_AS(build_mip(vec({1, 2, 3}), col({1, 1, 1}), 0.1, 0), Error);
    CHECK_THROWS_AS(build_mip(vec({1, 2, 3}), col({1, 1}), 0.1, 30), Error);
  }

  TEST_CASE("exactly consistent system") {
    Rng rng(1);
    const Matrix g = rng.normal_matrix(6, 2);
    const Vector d = vec({0.4, -1.3});
    const MipSolution s = solve_bnb(build_mip(g * d, g, 0.0, 30));
    CHECK(s.objective == 0);
    CHECK(s.z.sum() == 0);
  }

  TEST_CASE("p=3 single outlier") {
    const MipProblem prob = build_mip(vec({2, 1, 1}), col({1, 1, 1}), 0.1, 30);
    for (const MipSolution& s : {solve_bnb(prob), exact_small_oracle(prob)}) {
      CHECK(s.objective == 1);
      CHECK(s.z == Eigen::Vector3i(1, 0, 0));
      CHECK(s.delta(0) >= 0.9 - 1e-9);
      CHECK(s.delta(0) <= 1.1 + 1e-9);
      CHECK(s.status == MipStatus::Optimal);
    }
  }

  TEST_CASE("p=4 single violated row") {
    const MipProblem prob = build_mip(vec({1, 2, 5, 1.05}), col({1, 2, 1, 1}), 0.1, 30);
    const MipSolution b = solve_bnb(prob);
    const MipSolution o = exact_small_oracle(prob);
    CHECK(b.objective == 1);
    CHECK(b.z == Eigen::Vector4i(0, 0, 1, 0));
    CHECK(b.delta(0) >= 0.95 - 1e-9);
    CHECK(b.delta(0) <= 1.05 + 1e-9);
    CHECK(o.objective == b.objective);
    CHECK(o.z == b.z);
  }

  TEST_CASE("oracle: huge threshold and q=3 guard") {
    const MipProblem prob = build_mip(vec({1, -2, 0.5}), col({1, 1, 1}), 10.0, 30);
    CHECK(exact_small_oracle(prob).objective == 0);
    Rng rng(2);
    const MipProblem q3 = build_mip(rng.normal_matrix(5, 1).col(0), rng.normal_matrix(5, 3), 0.1, 30);
    try {
      exact_small_oracle(q3);
      FAIL("expected UnsupportedDimension");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnsupportedDimension);
    }
  }

  TEST_CASE("infeasible when M + t cannot cover a row") {
    const MipProblem prob = build_mip(vec({0, 100}), col({1, 0}), 0.1, 1.0);
    try {
      solve_bnb(prob);
      FAIL("expected Infeasible");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Infeasible);
    }
  }

  TEST_CASE("lp_relax: fixed assignments") {
    Rng rng(3);
    const Matrix g = rng.normal_matrix(5, 2);
    const MipProblem consistent = build_mip(g * vec({1, 2}), g, 0.05, 30);
    const LpRelaxation zero = lp_relax(consistent, std::vector<ZState>(5, ZState::Zero));
    CHECK(zero.bound == doctest::Approx(0.0));
    const LpRelaxation one = lp_relax(consistent, std::vector<ZState>(5, ZState::One));
    CHECK(one.bound == doctest::Approx(5.0));

    const MipProblem clash = build_mip(vec({0, 5}), col({1, 1}), 0.1, 30);
    CHECK_THROWS_AS(lp_relax(clash, std::vector<ZState>(2, ZState::Zero)), Error);
  }

  TEST_CASE("lp_relax: bound never exceeds the integer optimum") {
    Rng rng(4);
    for (int rep = 0; rep < 50; ++rep) {
      const MipProblem prob = random_problem(rng, 4 + rep % 7, 1 + rep % 2);
      const LpRelaxation lp = lp_relax(prob, std::vector<ZState>(static_cast<std::size_t>(prob.p()), ZState::Free));
      CHECK(lp.bound <= exact_small_oracle(prob).objective + 1e-9);
    }
  }

  TEST_CASE("fuzz: branch and bound matches the enumeration oracle") {
    Rng rng(5);
    int checked = 0;
    for (int rep = 0; rep < 500; ++rep) {
      const Index p = 2 + rep % 11, q = 1 + rep % 2;
      const MipProblem prob = random_problem(rng, p, q);
      const MipSolution b = solve_bnb(prob);
      const MipSolution o = exact_small_oracle(prob);
      REQUIRE(b.status == MipStatus::Optimal);
      CHECK(is_feasible(prob, b.z, b.delta));
      CHECK(is_feasible(prob, o.z, o.delta));
      CHECK(b.objective == b.z.sum());
      CHECK(b.objective == o.objective);
      ++checked;
    }
    CHECK(checked == 500);
  }

  TEST_CASE("fuzz: q=1 against exhaustive search") {
    Rng rng(6);
    for (int rep = 0; rep < 100; ++rep) {
      const MipProblem prob = random_problem(rng, 3 + rep % 8, 1);
      const int brute = oracle::mip_bruteforce_q1(prob.xi, prob.gamma.col(0), prob.t, prob.M);
      CHECK(solve_bnb(prob).objective == brute);
    }
  }

  TEST_CASE("rotating gamma rotates delta and keeps z") {
    Rng rng(7);
    for (int rep = 0; rep < 30; ++rep) {
      const MipProblem prob = random_problem(rng, 10, 2);
      const Matrix R = random_orthogonal(2, rng);
      const MipProblem rot = build_mip(prob.xi, prob.gamma * R, prob.t, prob.M);
      const MipSolution a = solve_bnb(prob);
      const MipSolution b = solve_bnb(rot);
      CHECK(a.objective == b.objective);
      CHECK(a.z == b.z);
      CHECK((R * b.delta - a.delta).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  TEST_CASE("enlarging t never increases the optimum") {
    Rng rng(8);
    for (int rep = 0; rep < 30; ++rep) {
      const MipProblem prob = random_problem(rng, 9, 1 + rep % 2);
      int last = static_cast<int>(prob.p()) + 1;
      for (double t : {0.0, 0.05, 0.2, 0.5, 1.0, 5.0}) {
        const int obj = solve_bnb(build_mip(prob.xi, prob.gamma, t, prob.M)).objective;
        CHECK(obj <= last);
        last = obj;
      }
    }
  }

  TEST_CASE("node limit yields a feasible incumbent") {
    Rng rng(9);
    const MipProblem prob = random_problem(rng, 40, 3);
    MipLimits lim;
    lim.max_nodes = 1;
    const MipSolution s = solve_bnb(prob, lim);
    CHECK(is_feasible(prob, s.z, s.delta));
    CHECK(s.objective == s.z.sum());
  }

  TEST_CASE("q=0 counts rows outside the threshold") {
    const MipProblem prob = build_mip(vec({0.05, -0.5, 0.2, 0.01}), Matrix(4, 0), 0.1, 30);
    const MipSolution s = solve_bnb(prob);
    CHECK(s.objective == 2);
    CHECK(s.z == Eigen::Vector4i(0, 1, 1, 0));
  }

  TEST_CASE("json round trip") {
    Rng rng(10);
    const MipProblem prob = random_problem(rng, 6, 2);
    const MipProblem back = mip_from_json(nlohmann::json::parse(to_json(prob).dump()));
    CHECK(back.xi == prob.xi);
    CHECK(back.gamma == prob.gamma);
    CHECK(back.t == prob.t);
    CHECK(back.M == prob.M);
    const nlohmann::json sol = to_json(solve_bnb(prob));
    CHECK(sol.contains("z"));
    CHECK(sol.contains("delta"));
    CHECK(sol.contains("objective"));
    CHECK_THROWS_AS(mip_from_json(nlohmann::json::parse(R"({"xi":[1,2],"gamma":[[1]],"t":0.1,"M":30})")), Error);
  }
}
