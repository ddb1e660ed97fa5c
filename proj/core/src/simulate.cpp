#include "spar/simulate.hpp"

#include "spar/error.hpp"
#include "spar/kmeans.hpp"
#include "spar/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace spar {

std::string to_string(GwasModel m) {
  switch (m) {
    case GwasModel::BN: return "bn";
    case GwasModel::PSD: return "psd";
    case GwasModel::Spatial: return "spatial";
  }
  return "bn";
}

GwasModel parse_gwas_model(const std::string& name) {
  if (name == "bn" || name == "BN") return GwasModel::BN;
  if (name == "psd" || name == "PSD") return GwasModel::PSD;
  if (name == "spatial" || name == "Spatial") return GwasModel::Spatial;
  raise(ErrorCode::InvalidConfig, "unknown GWAS model '" + name + "'");
}

Vector bn_mixing_probabilities() {
  Vector w(3);
  w << 60.0 / 210.0, 60.0 / 210.0, 90.0 / 210.0;
  return w;
}

const std::vector<double>& gwas_snr_grid() {
  static const std::vector<double> grid{0.1, 0.5, 0.7, 1.0, 3.0, 5.0, 7.0, 9.0, 11.0, 13.0};
  return grid;
}

double sample_sd(const Vector& v) {
  if (v.size() < 2) return 0.0;
  const double mu = v.mean();
  return std::sqrt((v.array() - mu).square().sum() / static_cast<double>(v.size() - 1));
}

namespace {

Vector leading_ones(Index p, Index s, double value) {
  Vector beta = Vector::Zero(p);
  beta.head(s).setConstant(value);
  return beta;
}

/// Draws n rows from N(0, sigma) via the Cholesky factor of sigma.
Matrix correlated_normal(Index n, const Matrix& sigma, Rng& rng) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    raise(ErrorCode::NotPositiveDefinite, "noise covariance has no Cholesky factor");
  }
  const Matrix z = rng.normal_matrix(n, sigma.rows());
  return z * llt.matrixL().transpose();
}

}  // namespace

Simulated gen_lowdim(const LowDimConfig& cfg) {
  require(cfg.n >= 1 && cfg.p >= 1 && cfg.q >= 1, ErrorCode::InvalidConfig,
          "lowdim needs n, p, q >= 1");
  require(cfg.s >= 1 && cfg.s <= cfg.p, ErrorCode::InvalidConfig, "lowdim needs 1 <= s <= p");
  require(cfg.q <= cfg.p, ErrorCode::InvalidConfig, "lowdim needs q <= p");
  require(cfg.r >= 0, ErrorCode::InvalidConfig, "lowdim needs r >= 0");

  Rng rng(cfg.seed);
  GroundTruth truth;
  truth.q = static_cast<int>(cfg.q);
  truth.beta = leading_ones(cfg.p, cfg.s, 1.0);
  truth.delta = Vector::Ones(cfg.q);
  truth.alpha = rng.uniform_matrix(cfg.p, cfg.q, -1.0, 1.0);
  truth.sigma_eps_x = Matrix::Identity(cfg.p, cfg.p);
  truth.U = rng.normal_matrix(cfg.n, cfg.q);
  const Matrix eps_x = rng.normal_matrix(cfg.n, cfg.p);
  const Vector eps_y = rng.normal_matrix(cfg.n, 1).col(0);

  Simulated out;
  out.data.X = truth.U * truth.alpha.transpose() + eps_x;
  out.data.Y = out.data.X * truth.beta + truth.U * truth.delta + eps_y;

  if (cfg.r > 0) {
    const Matrix W = rng.normal_matrix(cfg.n, cfg.r);
    truth.eta = rng.uniform_matrix(cfg.p, cfg.r, -1.0, 1.0);
    truth.lambda_w = Vector::Ones(cfg.r);
    const Matrix shift = W * truth.eta->transpose();
    out.data.X += shift;
    out.data.Y += shift * truth.beta + W * *truth.lambda_w;
    out.data.W = W;
  }
  out.truth = std::move(truth);
  return out;
}

Matrix gen_sparse_noise_cov(Index p, double mean, double sd, double sparsity_rate,
                            std::uint64_t seed) {
  require(p >= 1, ErrorCode::InvalidConfig, "noise covariance needs p >= 1");
  require(sd >= 0.0, ErrorCode::InvalidConfig, "noise covariance needs sd >= 0");
  require(sparsity_rate >= 0.0 && sparsity_rate <= 1.0, ErrorCode::InvalidConfig,
          "sparsity rate must lie in [0, 1]");

  Rng rng(seed);
  Matrix sigma = 2.0 * Matrix::Identity(p, p);
  for (Index j = 1; j < p; ++j) {
    for (Index i = 0; i < j; ++i) {
      if (!rng.bernoulli(sparsity_rate)) continue;
      const double v = sd > 0.0 ? rng.normal(mean, sd) : mean;
      sigma(i, j) = v;
      sigma(j, i) = v;
    }
  }
  if (p > 1) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    if (lmin <= 0.0) sigma.diagonal().array() += std::abs(lmin) + 0.05;
  }
  return sigma;
}

Simulated gen_highdim(const HighDimConfig& cfg) {
  require(cfg.n >= 1 && cfg.p >= 1 && cfg.q >= 1, ErrorCode::InvalidConfig,
          "highdim needs n, p, q >= 1");
  require(cfg.s >= 0 && cfg.s <= cfg.p, ErrorCode::InvalidConfig, "highdim needs 0 <= s <= p");
  require(cfg.noise_offdiag_sd >= 0.0, ErrorCode::InvalidConfig, "off-diagonal sd must be >= 0");
  require(cfg.r >= 0, ErrorCode::InvalidConfig, "highdim needs r >= 0");

  Rng rng(cfg.seed);
  GroundTruth truth;
  truth.q = static_cast<int>(cfg.q);
  truth.beta = leading_ones(cfg.p, cfg.s, 1.0);
  truth.alpha = rng.uniform_matrix(cfg.p, cfg.q, -1.0, 1.0);
  truth.delta = rng.uniform_vector(cfg.q, -1.0, 1.0);
  truth.U = rng.normal_matrix(cfg.n, cfg.q);

  const bool diagonal = cfg.noise_offdiag_mean == 0.0 && cfg.noise_offdiag_sd == 0.0;
  Matrix eps_x;
  if (diagonal) {
    truth.sigma_eps_x = 2.0 * Matrix::Identity(cfg.p, cfg.p);
    eps_x = std::sqrt(2.0) * rng.normal_matrix(cfg.n, cfg.p);
  } else {
    truth.sigma_eps_x =
        gen_sparse_noise_cov(cfg.p, cfg.noise_offdiag_mean, cfg.noise_offdiag_sd,
                             cfg.noise_sparsity_rate, derive_seed(cfg.seed, "noise-cov"));
    eps_x = correlated_normal(cfg.n, truth.sigma_eps_x, rng);
  }
  const Vector eps_y = rng.normal_matrix(cfg.n, 1).col(0);

  Simulated out;
  out.data.X = truth.U * truth.alpha.transpose() + eps_x;
  out.data.Y = out.data.X * truth.beta + truth.U * truth.delta + eps_y;

  if (cfg.r > 0) {
    const Matrix W = rng.normal_matrix(cfg.n, cfg.r);
    truth.eta = rng.uniform_matrix(cfg.p, cfg.r, -1.0, 1.0);
    truth.lambda_w = rng.uniform_vector(cfg.r, -1.0, 1.0);
    const Matrix shift = W * truth.eta->transpose();
    out.data.X += shift;
    out.data.Y += shift * truth.beta + W * *truth.lambda_w;
    out.data.W = W;
  }
  out.truth = std::move(truth);
  return out;
}

SnrWeights snr_weights(double snr) {
  require(snr > 0.0 && std::isfinite(snr), ErrorCode::InvalidConfig, "snr must be positive");
  SnrWeights w;
  w.v_noise = 1.0 / (1.0 + snr);
  w.v_gene = snr / (2.0 * (1.0 + snr));
  w.v_conf = w.v_gene;
  return w;
}

PopulationStructure population_structure(GwasModel model, Index n, Index p, Index d,
                                         std::uint64_t seed,
                                         const std::vector<AlleleParams>& allele_table) {
  require(d == 3, ErrorCode::InvalidConfig, "population models are defined for d = 3");
  require(n >= 1 && p >= 1, ErrorCode::InvalidConfig, "population structure needs n, p >= 1");

  Rng rng(seed);
  PopulationStructure ps;
  ps.S = Matrix::Zero(n, d);
  ps.Gamma = Matrix::Zero(d, p);

  if (model == GwasModel::BN || model == GwasModel::PSD) {
    for (Index i = 0; i < p; ++i) {
      double freq = 0.0;
      double fst = 0.0;
      if (allele_table.empty()) {
        freq = rng.uniform(0.05, 0.95);
        fst = rng.uniform(0.01, 0.10);
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, allele_table.size() - 1);
        std::tie(freq, fst) = allele_table[pick(rng.engine())];
        require(freq > 0.0 && freq < 1.0 && fst > 0.0 && fst < 1.0, ErrorCode::InvalidConfig,
                "allele table entries need 0 < p < 1 and 0 < F < 1");
      }
      const double a = freq * (1.0 - fst) / fst;
      const double b = (1.0 - freq) * (1.0 - fst) / fst;
      for (Index k = 0; k < d; ++k) ps.Gamma(k, i) = rng.beta(a, b);
    }
    if (model == GwasModel::BN) {
      const Vector mix = bn_mixing_probabilities();
      for (Index j = 0; j < n; ++j) ps.S(j, rng.categorical(mix)) = 1.0;
    } else {
      const Vector conc = Vector::Constant(d, 0.5);
      for (Index j = 0; j < n; ++j) ps.S.row(j) = rng.dirichlet(conc).transpose();
    }
  } else {
    for (Index i = 0; i < p; ++i) {
      ps.Gamma(0, i) = 0.9 * rng.uniform(0.0, 0.5);
      ps.Gamma(1, i) = 0.9 * rng.uniform(0.0, 0.5);
      ps.Gamma(2, i) = 0.05;
    }
    for (Index j = 0; j < n; ++j) {
      ps.S(j, 0) = rng.beta(0.1, 0.1);
      ps.S(j, 1) = rng.beta(0.1, 0.1);
      ps.S(j, 2) = 1.0;
    }
  }
  return ps;
}

std::pair<Vector, Vector> snr_rescale(const Vector& lambda, const Vector& eps,
                                      const Vector& gene_signal, const SnrWeights& w) {
  require(lambda.size() == eps.size() && eps.size() == gene_signal.size(),
          ErrorCode::DimensionMismatch, "snr_rescale vectors must share a length");
  const double sd_gene = sample_sd(gene_signal);
  const double sd_lambda = sample_sd(lambda);
  const double sd_eps = sample_sd(eps);
  if (!(sd_gene > 0.0) || !(sd_lambda > 0.0) || !(sd_eps > 0.0)) {
    raise(ErrorCode::DegenerateSignal, "snr_rescale needs non-constant signal, confounder and noise");
  }
  require(w.v_gene > 0.0, ErrorCode::InvalidConfig, "v_gene must be positive");
  const double unit = sd_gene / std::sqrt(w.v_gene);
  Vector lam = lambda * (unit * std::sqrt(w.v_conf) / sd_lambda);
  Vector e = eps * (unit * std::sqrt(w.v_noise) / sd_eps);
  return {std::move(lam), std::move(e)};
}

Simulated gen_gwas(const GwasConfig& cfg) {
  require(cfg.causal_fraction > 0.0 && cfg.causal_fraction < 1.0, ErrorCode::InvalidConfig,
          "causal_fraction must lie in (0, 1)");
  require(cfg.snr > 0.0, ErrorCode::InvalidConfig, "snr must be positive");
  require(cfg.n >= 2 && cfg.p >= 1, ErrorCode::InvalidConfig, "gwas needs n >= 2, p >= 1");

  Rng rng(cfg.seed);
  PopulationStructure ps = population_structure(cfg.model, cfg.n, cfg.p, cfg.d,
                                                derive_seed(cfg.seed, "population"),
                                                cfg.allele_table);
  const Matrix P = (ps.S * ps.Gamma).cwiseMax(0.01).cwiseMin(0.99);

  Matrix A(cfg.n, cfg.p);
  for (Index j = 0; j < cfg.n; ++j)
    for (Index i = 0; i < cfg.p; ++i) A(j, i) = rng.binomial(2, P(j, i));

  const auto n_causal = static_cast<Index>(
      std::ceil(cfg.causal_fraction * static_cast<double>(cfg.p) - 1e-9));
  Vector beta = Vector::Zero(cfg.p);
  beta.head(n_causal).setConstant(cfg.causal_value);
  if (cfg.perturb_null_beta) {
    for (Index i = n_causal; i < cfg.p; ++i) beta(i) = rng.uniform(-0.05, 0.05);
  }

  const KMeansResult km = kmeans(ps.S, 3, derive_seed(cfg.seed, "kmeans"));
  Vector tau2(3);
  for (Index k = 0; k < 3; ++k) tau2(k) = rng.inv_gamma(3.0, 1.0);

  Vector lambda(cfg.n);
  Vector eps(cfg.n);
  for (Index j = 0; j < cfg.n; ++j) {
    const int k = km.labels[static_cast<std::size_t>(j)];
    lambda(j) = k;
    eps(j) = rng.normal(0.0, std::sqrt(tau2(k - 1)));
  }

  const Vector gene = A * beta;
  auto [lam, e] = snr_rescale(lambda, eps, gene, snr_weights(cfg.snr));

  Simulated out;
  out.data.X = A;
  out.data.Y = gene + lam + e;
  out.truth.beta = beta;
  out.truth.alpha = ps.Gamma.transpose();
  out.truth.U = ps.S;
  out.truth.q = static_cast<int>(cfg.d);
  GwasComponents comp;
  comp.gene = gene;
  comp.confounder = std::move(lam);
  comp.noise = std::move(e);
  comp.cluster = km.labels;
  comp.S = std::move(ps.S);
  comp.Gamma = std::move(ps.Gamma);
  out.gwas = std::move(comp);
  return out;
}

}  // namespace spar
