#pragma once

#include "spar/mip.hpp"
#include "spar/simulate.hpp"
#include "spar/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spar {

/// One Monte-Carlo experiment: a data generator, the methods to compare and
/// the number of replications.
struct ExperimentSpec {
  std::string name = "experiment";
  std::string scenario = "lowdim";  // lowdim | highdim | gwas-bn | gwas-psd | gwas-spatial
  nlohmann::json generator = nlohmann::json::object();
  std::vector<std::string> methods;
  int replications = 1;
  std::uint64_t base_seed = 0;
  std::vector<int> q_grid;  // when non-empty, spar and null run once per q
  double M = 30.0;
  MipLimits limits;
  int deconf_k = 50;
  /// When false wall_ms is written as 0 so repeated runs give identical files.
  bool record_timings = true;
};

/// Throws InvalidConfig on unknown fields values or methods.
ExperimentSpec spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentSpec& s);

/// Draws the replication dataset. `seed` replaces any seed in the generator config.
Simulated generate(const std::string& scenario, const nlohmann::json& generator, std::uint64_t seed);

struct ResultRow {
  std::string method;
  int rep = 0;
  std::optional<double> mae, rmse, tpr, fpr;
  double wall_ms = 0.0;
  std::string status = "ok";
  std::string message;
  std::uint64_t dataset_hash = 0;
};

struct SummaryRow {
  std::string method;
  int n = 0;  // rows with metrics
  double mae_mean = 0, mae_sd = 0, rmse_mean = 0, rmse_sd = 0;
  std::optional<double> tpr_mean, tpr_sd, fpr_mean, fpr_sd;
  double wall_ms_mean = 0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;  // ordered by (method order in ExperimentSpec::methods, rep)
  bool partial_failure() const;
};

/// Replication r uses seed base_seed + r; method seeds are derived from it and
/// the method name. Runs replications on up to `jobs` threads.
ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs = 1);

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

/// format is "csv" or "json". CSV output also writes <stem>_summary.csv and
/// <stem>_status.csv next to `path`.
void write_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path,
                   const std::string& format = "csv");
std::vector<ResultRow> read_results_json(const std::filesystem::path& path);

const std::vector<std::string>& preset_names();

/// Desk-scale versions of the published experiments. `scale` multiplies the
/// published replication counts (at least one replication is kept).
std::vector<ExperimentSpec> preset_specs(const std::string& name, double scale,
                                         std::optional<Index> n = std::nullopt,
                                         std::optional<Index> p = std::nullopt,
                                         std::uint64_t base_seed = 0);

}  // namespace spar
