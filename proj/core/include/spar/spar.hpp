#pragma once

#include "spar/factor.hpp"
#include "spar/mip.hpp"
#include "spar/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spar {

struct SparConfig {
  std::optional<int> q;  // estimated by select_q when empty
  double M = 30.0;
  std::optional<double> threshold_override;
  MipLimits limits;
  std::uint64_t seed = 0;  // CV folds of the de-biased lasso
  double poet_c = 0.5;
};

struct SparTimings {
  double prepare_ms = 0.0;
  double factor_ms = 0.0;
  double regression_ms = 0.0;
  double mip_ms = 0.0;
  double refine_ms = 0.0;
  double total_ms = 0.0;
};

/// Everything estimated before the threshold: xi_hat, gamma_hat and the
/// two noise scales. Shared with the null-treatments baseline.
struct SparComponents {
  Vector xi_hat;
  Matrix gamma_hat;      // p x q
  Matrix sigma_eps_hat;  // p x p
  double sigma_resid2 = 0.0;
  int q = 0;
  bool high_dim = false;  // n <= p branch
  FactorDiagnostics factor_diagnostics;
  std::string regression_method;
  double factor_ms = 0.0;
  double regression_ms = 0.0;
};

struct SparResult {
  Vector beta_hat;
  Vector delta_hat;
  Eigen::VectorXi z;
  Vector beta_mip;  // xi_hat - gamma_hat delta_mip, unmasked
  Vector delta_mip;
  double t = 0.0;
  double sigma2_hat = 0.0;
  int q_used = 0;
  std::vector<Index> refine_index;
  MipStatus status = MipStatus::Optimal;
  long mip_nodes = 0;
  bool refine_fallback = false;
  bool high_dim = false;
  SparTimings timings;
  FactorDiagnostics factor_diagnostics;
  std::string regression_method;
};

/// (mean diag(sigma_eps_hat) + sigma_resid2) / 2
double estimate_sigma2(const Matrix& sigma_eps_hat, double sigma_resid2);

/// sqrt(2 ln(p) sigma2 / n). Throws InvalidConfig unless n >= 1, p >= 2, sigma2 >= 0.
double compute_threshold(Index n, Index p, double sigma2);

struct Refinement {
  Vector delta_hat;
  Vector beta_hat;
  std::vector<Index> index_set;
};

/// Least squares for delta on the floor((p+q)/2) rows with the smallest |beta_mip|
/// (ties by ascending index), then beta = (xi - gamma delta) masked by z.
/// Throws RankDeficientSubmatrix when gamma restricted to those rows has rank < q.
Refinement refine(const Vector& xi_hat, const Matrix& gamma_hat, const Vector& beta_mip,
                  const Eigen::VectorXi& z, int q);

/// Factor and regression stages on an already prepared (centered) dataset.
SparComponents estimate_components(const Dataset& prepared, std::optional<int> q,
                                   std::uint64_t seed, double poet_c = 0.5);

/// Threshold, MIP and refinement on top of existing components.
SparResult spar_from_components(const SparComponents& comp, Index n, const SparConfig& cfg);

SparResult spar_fit(const Dataset& d, const SparConfig& cfg = {});

nlohmann::json to_json(const SparResult& r);

}  // namespace spar
