// Command-line front end: simulate, fit, solve-mip, bench.

#include "spar/error.hpp"
#include "spar/experiment.hpp"
#include "spar/io.hpp"
#include "spar/methods.hpp"
#include "spar/metrics.hpp"
#include "spar/mip.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace spar;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInvalidConfig = 2;
constexpr int kExitPartialFailure = 3;

std::optional<int> parse_q(const std::string& text) {
  if (text == "AUTO" || text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const int q = std::stoi(text, &used);
    if (used != text.size() || q < 0) throw std::invalid_argument(text);
    return q;
  } catch (const std::exception&) {
    raise(ErrorCode::InvalidConfig, "--q must be AUTO or a non-negative integer");
  }
}

struct SimulateArgs {
  std::string model = "lowdim";
  std::string config;
  std::optional<long> n, p, q, s, r;
  std::optional<double> snr, offdiag_mean, offdiag_sd;
  bool perturb_null = false;
  std::uint64_t seed = 0;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  nlohmann::json gen = a.config.empty() ? nlohmann::json::object() : read_json_file(a.config);
  std::string scenario = a.model;
  std::uint64_t seed = a.seed;
  if (gen.contains("model")) scenario = gen["model"].get<std::string>();
  if (gen.contains("seed")) seed = gen["seed"].get<std::uint64_t>();
  auto set = [&](const char* key, const auto& v) {
    if (v) gen[key] = *v;
  };
  set("n", a.n);
  set("p", a.p);
  set("q", a.q);
  set("s", a.s);
  set("r", a.r);
  set("snr", a.snr);
  set("noise_offdiag_mean", a.offdiag_mean);
  set("noise_offdiag_sd", a.offdiag_sd);
  if (a.perturb_null) gen["perturb_null_beta"] = true;
  gen.erase("model");
  gen.erase("seed");

  const Simulated sim = generate(scenario, gen, seed);
  const nlohmann::json meta{{"seed", seed}, {"generator", scenario}, {"params", gen}};
  write_bundle(a.out, sim.data, meta, &sim.truth);
  std::cout << "wrote " << a.out << " (n=" << sim.data.n() << ", p=" << sim.data.p() << ")\n";
  return kExitOk;
}

struct FitArgs {
  std::string in, method = "spar", q = "AUTO", out;
  double M = 30.0;
  std::uint64_t seed = 0;
  long max_nodes = 1000000;
  double time_budget = 60.0;
  int deconf_k = 50;
  bool verbose = false;
};

int run_fit(const FitArgs& a) {
  const Bundle b = read_bundle(a.in);
  MethodContext ctx;
  ctx.seed = a.seed;
  ctx.q = parse_q(a.q);
  ctx.M = a.M;
  ctx.limits.max_nodes = a.max_nodes;
  ctx.limits.time_budget_s = a.time_budget;
  ctx.deconf_k = a.deconf_k;
  const MethodOutput out = run_method(a.method, b.data, ctx);
  nlohmann::json j = out.result;
  j["status"] = out.status;
  if (b.truth && b.truth->beta.size() == out.beta_hat.size()) {
    const ErrorMetrics em = metrics(out.beta_hat, b.truth->beta);
    const SupportMetrics sm = tpr_fpr(out.beta_hat, b.truth->beta);
    j["metrics"] = {{"mae", em.mae},
                    {"rmse", em.rmse},
                    {"tpr", sm.tpr ? nlohmann::json(*sm.tpr) : nlohmann::json(nullptr)},
                    {"fpr", sm.fpr ? nlohmann::json(*sm.fpr) : nlohmann::json(nullptr)}};
  }
  if (a.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(a.out, j);
    if (a.verbose) {
      std::cout << "method " << a.method << ", status " << out.status << '\n';
      if (j.contains("diagnostics") && !j["diagnostics"].is_null()) std::cout << j["diagnostics"].dump(2) << '\n';
      if (j.contains("metrics")) std::cout << j["metrics"].dump() << '\n';
    }
  }
  return kExitOk;
}

struct SolveArgs {
  std::string in, out;
  bool oracle = false;
  long max_nodes = 1000000;
  double time_budget = 60.0;
};

int run_solve(const SolveArgs& a) {
  const MipProblem prob = mip_from_json(read_json_file(a.in));
  MipSolution sol;
  if (a.oracle) {
    sol = exact_small_oracle(prob);
  } else {
    sol = solve_bnb(prob, MipLimits{a.max_nodes, a.time_budget});
  }
  const nlohmann::json j = to_json(sol);
  if (a.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(a.out, j);
  }
  return kExitOk;
}

struct BenchArgs {
  std::string spec, preset, out = "bench_out", format = "csv";
  double scale = 0.1;
  std::optional<long> n, p;
  std::optional<long> max_nodes;
  int jobs = 1;
  bool no_timings = false;
};

int run_bench(const BenchArgs& a) {
  if (a.spec.empty() == a.preset.empty()) raise(ErrorCode::InvalidConfig, "bench needs exactly one of --spec or --preset");
  std::optional<std::uint64_t> env_seed;
  if (const char* s = std::getenv("SPAR_SEED")) {
    try {
      env_seed = std::stoull(s);
    } catch (const std::exception&) {
      raise(ErrorCode::InvalidConfig, "SPAR_SEED must be a non-negative integer");
    }
  }

  std::vector<ExperimentSpec> specs;
  if (!a.spec.empty()) {
    specs.push_back(spec_from_json(read_json_file(a.spec)));
  } else {
    specs = preset_specs(a.preset, a.scale, a.n, a.p, env_seed.value_or(0));
  }
  bool partial = false;
  fs::create_directories(a.out);
  for (auto& s : specs) {
    if (env_seed) s.base_seed = *env_seed;
    if (a.max_nodes) s.limits.max_nodes = *a.max_nodes;
    if (a.no_timings) s.record_timings = false;
    const ExperimentResult res = run_experiment(s, a.jobs);
    partial = partial || res.partial_failure();
    const fs::path path = fs::path(a.out) / (s.name + (a.format == "json" ? ".json" : ".csv"));
    write_results(res.rows, path, a.format);
    std::cout << s.name << ": " << res.rows.size() << " rows -> " << path.string() << '\n';
    for (const auto& sm : summarize(res.rows)) {
      std::cout << "  " << sm.method << "  n=" << sm.n << "  mae=" << format_double(sm.mae_mean)
                << "  rmse=" << format_double(sm.rmse_mean);
      if (sm.tpr_mean) std::cout << "  tpr=" << format_double(*sm.tpr_mean);
      if (sm.fpr_mean) std::cout << "  fpr=" << format_double(*sm.fpr_mean);
      std::cout << '\n';
    }
  }
  return partial ? kExitPartialFailure : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse causal effect estimation under latent confounding"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a dataset bundle directory");
  c_sim->add_option("--model", sim.model, "lowdim|highdim|gwas-bn|gwas-psd|gwas-spatial")
      ->check(CLI::IsMember({"lowdim", "highdim", "gwas-bn", "gwas-psd", "gwas-spatial"}));
  c_sim->add_option("--config", sim.config, "JSON generator config");
  c_sim->add_option("--n", sim.n);
  c_sim->add_option("--p", sim.p);
  c_sim->add_option("--q", sim.q);
  c_sim->add_option("--s", sim.s);
  c_sim->add_option("--r", sim.r, "number of measured confounders");
  c_sim->add_option("--snr", sim.snr);
  c_sim->add_option("--offdiag-mean", sim.offdiag_mean);
  c_sim->add_option("--offdiag-sd", sim.offdiag_sd);
  c_sim->add_flag("--perturb-null-beta", sim.perturb_null);
  c_sim->add_option("--seed", sim.seed);
  c_sim->add_option("--out", sim.out)->required();

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit one estimator on a bundle");
  c_fit->add_option("--in", fit.in)->required();
  c_fit->add_option("--method", fit.method)->check(CLI::IsMember(method_names()));
  c_fit->add_option("--q", fit.q, "AUTO or a factor count");
  c_fit->add_option("--M", fit.M);
  c_fit->add_option("--seed", fit.seed);
  c_fit->add_option("--max-nodes", fit.max_nodes);
  c_fit->add_option("--time-budget", fit.time_budget, "seconds per MIP solve");
  c_fit->add_option("--deconf-k", fit.deconf_k);
  c_fit->add_option("--out", fit.out, "result JSON (stdout when omitted)");
  c_fit->add_flag("--verbose", fit.verbose);

  SolveArgs sol;
  auto* c_sol = app.add_subcommand("solve-mip", "Solve a MIP problem stored as JSON");
  c_sol->add_option("--in", sol.in)->required();
  c_sol->add_option("--out", sol.out);
  c_sol->add_flag("--oracle", sol.oracle, "use the enumeration oracle (q <= 2)");
  c_sol->add_option("--max-nodes", sol.max_nodes);
  c_sol->add_option("--time-budget", sol.time_budget);

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "Run an experiment spec or a preset");
  c_bench->add_option("--spec", bench.spec, "ExperimentSpec JSON");
  c_bench->add_option("--preset", bench.preset)->check(CLI::IsMember(preset_names()));
  c_bench->add_option("--scale", bench.scale)->check(CLI::Range(0.001, 1.0));
  c_bench->add_option("--n", bench.n);
  c_bench->add_option("--p", bench.p);
  c_bench->add_option("--max-nodes", bench.max_nodes);
  c_bench->add_option("--jobs", bench.jobs)->check(CLI::PositiveNumber);
  c_bench->add_option("--out", bench.out);
  c_bench->add_option("--format", bench.format)->check(CLI::IsMember({"csv", "json"}));
  c_bench->add_flag("--no-timings", bench.no_timings, "write wall_ms as 0 for reproducible files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalidConfig;
  }

  try {
    if (*c_sim) return run_simulate(sim);
    if (*c_fit) return run_fit(fit);
    if (*c_sol) return run_solve(sol);
    if (*c_bench) return run_bench(bench);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::InvalidConfig ? kExitInvalidConfig : kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
