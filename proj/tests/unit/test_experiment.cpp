#include "spar/dataset.hpp"
#include "spar/error.hpp"
#include "spar/experiment.hpp"
#include "spar/metrics.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace spar;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "spar_experiment_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentSpec small_lowdim(std::vector<std::string> methods, int reps) {
  ExperimentSpec s;
  s.name = "t";
  s.scenario = "lowdim";
  s.generator = {{"n", 200}, {"p", 13}, {"q", 3}, {"s", 3}};
  s.methods = std::move(methods);
  s.replications = reps;
  s.base_seed = 5;
  return s;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("metrics examples") {
    const Vector b = Eigen::Vector4d(1, 2, 3, 4);
    CHECK(metrics(b, b).mae == 0.0);
    CHECK(metrics(b, b).rmse == 0.0);
    const ErrorMetrics e = metrics(b + Eigen::Vector4d(1, 0, 0, 0), b);
    CHECK(e.mae == doctest::Approx(0.25));
    CHECK(e.rmse == doctest::Approx(0.5));
    const ErrorMetrics c = metrics(b.array() - 0.3, b);
    CHECK(c.mae == doctest::Approx(0.3));
    CHECK(c.rmse == doctest::Approx(0.3));
    CHECK_THROWS_AS(metrics(b, Vector::Zero(3)), Error);
  }

  TEST_CASE("tpr_fpr examples") {
    const Vector truth = Eigen::Vector4d(1, 1, 0, 0);
    const SupportMetrics perfect = tpr_fpr(Eigen::Vector4d(0.5, 2, 0, 0), truth);
    CHECK(*perfect.tpr == 1.0);
    CHECK(*perfect.fpr == 0.0);
    const SupportMetrics none = tpr_fpr(Vector::Zero(4), truth);
    CHECK(*none.tpr == 0.0);
    CHECK(*none.fpr == 0.0);
    const SupportMetrics half = tpr_fpr(Eigen::Vector4d(1, 0, 1e-11, 0.2), truth);
    CHECK(*half.tpr == 0.5);
    CHECK(*half.fpr == 0.5);
    CHECK_FALSE(tpr_fpr(Vector::Ones(3), Vector::Zero(3)).tpr.has_value());
    CHECK_FALSE(tpr_fpr(Vector::Ones(3), Vector::Ones(3)).fpr.has_value());
  }

  TEST_CASE("single replication smoke") {
    const ExperimentResult r = run_experiment(small_lowdim({"ols"}, 1));
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].method == "ols");
    CHECK(r.rows[0].status == "ok");
    CHECK(std::isfinite(*r.rows[0].mae));
    CHECK_FALSE(r.partial_failure());
  }

  TEST_CASE("repeated runs write identical files") {
    ExperimentSpec s = small_lowdim({"spar", "null", "ols", "lasso"}, 3);
    s.record_timings = false;
    const fs::path dir = scratch("determinism");
    write_results(run_experiment(s, 1).rows, dir / "a.csv");
    write_results(run_experiment(s, 3).rows, dir / "b.csv");
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(slurp(dir / "a_summary.csv") == slurp(dir / "b_summary.csv"));
  }

  TEST_CASE("rows are ordered by method then replication") {
    const ExperimentResult r = run_experiment(small_lowdim({"ols", "spar"}, 3), 2);
    REQUIRE(r.rows.size() == 6);
    const char* expect[] = {"ols", "ols", "ols", "spar", "spar", "spar"};
    for (int i = 0; i < 6; ++i) {
      CHECK(r.rows[static_cast<std::size_t>(i)].method == expect[i]);
      CHECK(r.rows[static_cast<std::size_t>(i)].rep == i % 3);
    }
  }

  TEST_CASE("every method in a replication sees the same dataset") {
    const ExperimentSpec s = small_lowdim({"spar", "null", "ols", "ridge"}, 2);
    const ExperimentResult r = run_experiment(s);
    for (const auto& row : r.rows) {
      const Simulated sim = generate(s.scenario, s.generator, s.base_seed + static_cast<std::uint64_t>(row.rep));
      CHECK(row.dataset_hash == dataset_hash(sim.data));
    }
  }

  TEST_CASE("empty rows give a header-only file") {
    const fs::path dir = scratch("empty");
    write_results({}, dir / "e.csv");
    CHECK(slurp(dir / "e.csv") == "method,rep,mae,rmse,tpr,fpr,wall_ms_total\n");
  }

  TEST_CASE("csv formatting uses 17 significant digits") {
    ResultRow row;
    row.method = "ols";
    row.mae = 0.1;
    row.rmse = 2.0;
    const fs::path dir = scratch("format");
    write_results({row}, dir / "f.csv");
    CHECK(slurp(dir / "f.csv").find("ols,0,0.10000000000000001,2,,,0") != std::string::npos);
  }

  TEST_CASE("json round trip") {
    const ExperimentResult r = run_experiment(small_lowdim({"spar", "ols"}, 2));
    const fs::path dir = scratch("json");
    write_results(r.rows, dir / "r.json", "json");
    const std::vector<ResultRow> back = read_results_json(dir / "r.json");
    REQUIRE(back.size() == r.rows.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].method == r.rows[i].method);
      CHECK(back[i].rep == r.rows[i].rep);
      CHECK(back[i].mae == r.rows[i].mae);
      CHECK(back[i].rmse == r.rows[i].rmse);
      CHECK(back[i].tpr == r.rows[i].tpr);
      CHECK(back[i].fpr == r.rows[i].fpr);
      CHECK(back[i].wall_ms == r.rows[i].wall_ms);
      CHECK(back[i].status == r.rows[i].status);
    }
    CHECK_THROWS_AS(write_results(r.rows, dir / "r.txt", "xml"), Error);
  }

  TEST_CASE("summary means equal the per-row means") {
    const ExperimentResult r = run_experiment(small_lowdim({"spar", "null"}, 4));
    for (const SummaryRow& s : summarize(r.rows)) {
      double mae = 0.0, rmse = 0.0;
      int n = 0;
      for (const auto& row : r.rows) {
        if (row.method != s.method) continue;
        mae += *row.mae;
        rmse += *row.rmse;
        ++n;
      }
      CHECK(s.n == n);
      CHECK(s.mae_mean == doctest::Approx(mae / n).epsilon(1e-14));
      CHECK(s.rmse_mean == doctest::Approx(rmse / n).epsilon(1e-14));
    }
  }

  TEST_CASE("method failures become tagged rows") {
    ExperimentSpec s;
    s.scenario = "highdim";
    s.generator = {{"n", 30}, {"p", 40}, {"q", 2}, {"s", 2}};
    s.methods = {"ols", "ridge"};
    s.replications = 2;
    const ExperimentResult r = run_experiment(s);
    REQUIRE(r.rows.size() == 4);
    CHECK(r.rows[0].status == "SingularDesign");
    CHECK_FALSE(r.rows[0].mae.has_value());
    CHECK(r.rows[2].status == "ok");
    CHECK(r.partial_failure());
    const auto sum = summarize(r.rows);
    CHECK(sum[0].n == 0);
    CHECK(sum[1].n == 2);
  }

  TEST_CASE("q grid expands spar and null") {
    ExperimentSpec s = small_lowdim({"spar", "null", "ols"}, 1);
    s.q_grid = {2, 3};
    const ExperimentResult r = run_experiment(s);
    REQUIRE(r.rows.size() == 5);
    CHECK(r.rows[0].method == "spar@q2");
    CHECK(r.rows[1].method == "spar@q3");
    CHECK(r.rows[4].method == "ols");
  }

  TEST_CASE("spec json validation and round trip") {
    const ExperimentSpec s = small_lowdim({"spar", "lasso"}, 2);
    const ExperimentSpec back = spec_from_json(to_json(s));
    CHECK(back.methods == s.methods);
    CHECK(back.replications == 2);
    CHECK(back.generator == s.generator);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json{{"scenario", "nope"}, {"methods", {"ols"}}}), Error);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json{{"methods", {"magic"}}}), Error);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json{{"methods", {"ols"}}, {"replications", 0}}), Error);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json{{"methods", {"ols"}}, {"replications", "x"}}), Error);
  }

  TEST_CASE("presets") {
    const auto fig2 = preset_specs("fig2", 0.1);
    CHECK(fig2.size() == 13);
    CHECK(fig2[0].replications == 100);
    CHECK(fig2[12].generator["s"] == 13);
    const auto t1 = preset_specs("table1", 0.2);
    REQUIRE(t1.size() == 1);
    CHECK(t1[0].replications == 20);
    CHECK(t1[0].methods == std::vector<std::string>{"spar", "null", "lasso", "deconf-lasso"});
    const auto f7 = preset_specs("fig7-bn", 0.01, Index{200}, Index{200});
    CHECK(f7.size() == 10);
    CHECK(f7[0].replications == 1);
    CHECK(f7[0].scenario == "gwas-bn");
    CHECK(f7[0].generator["n"] == 200);
    for (const auto& name : preset_names()) CHECK_NOTHROW(preset_specs(name, 0.01));
    CHECK_THROWS_AS(preset_specs("fig9", 0.5), Error);
    CHECK_THROWS_AS(preset_specs("fig2", 0.0), Error);
  }
}
