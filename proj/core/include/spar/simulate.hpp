#pragma once

#include "spar/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spar {

/// Low-dimensional design: delta = 1, alpha ~ U(-1,1), unit noise.
struct LowDimConfig {
  Index n = 1000;
  Index p = 13;
  Index q = 3;
  Index s = 3;
  Index r = 0;  // measured confounders W ~ N(0, I_r), eta ~ U(-1,1), lambda = 1
  std::uint64_t seed = 0;
};

/// High-dimensional design: alpha, delta ~ U(-1,1), noise covariance 2I or
/// a sparse non-diagonal matrix when the off-diagonal parameters are non-zero.
struct HighDimConfig {
  Index n = 300;
  Index p = 300;
  Index q = 3;
  Index s = 5;
  double noise_offdiag_mean = 0.0;
  double noise_offdiag_sd = 0.0;
  double noise_sparsity_rate = 0.05;
  Index r = 0;  // W ~ N(0, I_r), eta and lambda ~ U(-1,1)
  std::uint64_t seed = 0;
};

enum class GwasModel { BN, PSD, Spatial };

std::string to_string(GwasModel m);
GwasModel parse_gwas_model(const std::string& name);

/// (allele frequency, F_ST) pair used by the Balding-Nichols draw.
using AlleleParams = std::pair<double, double>;

struct GwasConfig {
  GwasModel model = GwasModel::BN;
  Index n = 1000;
  Index p = 1000;
  Index d = 3;
  double snr = 1.0;
  double causal_fraction = 0.01;
  double causal_value = 0.5;
  bool perturb_null_beta = false;
  std::uint64_t seed = 0;
  /// When non-empty, BN/PSD allele parameters are sampled from these pairs
  /// instead of the synthetic p ~ U(0.05,0.95), F ~ U(0.01,0.10) draws.
  std::vector<AlleleParams> allele_table;
};

struct SnrWeights {
  double v_gene = 0.0;
  double v_conf = 0.0;
  double v_noise = 0.0;
};

/// The three additive parts of the GWAS trait, kept for diagnostics.
struct GwasComponents {
  Vector gene;
  Vector confounder;
  Vector noise;
  std::vector<int> cluster;  // 1..3
  Matrix S;                  // n x d
  Matrix Gamma;              // d x p
};

struct Simulated {
  Dataset data;
  GroundTruth truth;
  std::optional<GwasComponents> gwas;
};

Simulated gen_lowdim(const LowDimConfig& cfg);
Simulated gen_highdim(const HighDimConfig& cfg);
Simulated gen_gwas(const GwasConfig& cfg);

/// Symmetric p x p matrix with diagonal 2 and a random `sparsity_rate` share
/// of off-diagonal pairs drawn from N(mean, sd^2); inflated to be positive definite.
Matrix gen_sparse_noise_cov(Index p, double mean, double sd, double sparsity_rate,
                            std::uint64_t seed);

SnrWeights snr_weights(double snr);

struct PopulationStructure {
  Matrix S;      // n x d
  Matrix Gamma;  // d x p
};

PopulationStructure population_structure(GwasModel model, Index n, Index p, Index d,
                                         std::uint64_t seed,
                                         const std::vector<AlleleParams>& allele_table = {});

/// Rescales confounder and noise vectors so that their spread relative to the
/// gene signal matches the variance shares in `w`.
std::pair<Vector, Vector> snr_rescale(const Vector& lambda, const Vector& eps,
                                      const Vector& gene_signal, const SnrWeights& w);

/// Sample standard deviation (n - 1 denominator).
double sample_sd(const Vector& v);

/// Subpopulation mixing weights of the BN model.
Vector bn_mixing_probabilities();

/// SNR grid used in the GWAS experiments.
const std::vector<double>& gwas_snr_grid();

}  // namespace spar
