#include "spar/spar.hpp"

#include "spar/dataset.hpp"
#include "spar/error.hpp"
#include "spar/regression.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace spar {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    rethrow_with_stage(e, stage);
  }
}

std::vector<double> to_vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

double estimate_sigma2(const Matrix& sigma_eps_hat, double sigma_resid2) {
  const double diag_mean = sigma_eps_hat.size() ? sigma_eps_hat.diagonal().mean() : 0.0;
  return 0.5 * (diag_mean + sigma_resid2);
}

double compute_threshold(Index n, Index p, double sigma2) {
  require(n >= 1, ErrorCode::InvalidConfig, "threshold: n must be >= 1");
  require(p >= 2, ErrorCode::InvalidConfig, "threshold: p must be >= 2");
  require(std::isfinite(sigma2) && sigma2 >= 0.0, ErrorCode::InvalidConfig, "threshold: sigma2 must be >= 0");
  return std::sqrt(2.0 * std::log(static_cast<double>(p)) * sigma2 / static_cast<double>(n));
}

Refinement refine(const Vector& xi_hat, const Matrix& gamma_hat, const Vector& beta_mip,
                  const Eigen::VectorXi& z, int q) {
  const Index p = xi_hat.size();
  require(gamma_hat.rows() == p && beta_mip.size() == p && z.size() == p && gamma_hat.cols() == q,
          ErrorCode::DimensionMismatch, "refine: inconsistent shapes");
  Refinement out;
  const Index h = (p + q) / 2;
  require(h >= q, ErrorCode::RankDeficientSubmatrix, "refine: fewer rows than factors");

  std::vector<Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Index{0});
  // Magnitudes are compared on a 1e-9 relative grid so that rows sitting on the
  // same slab boundary tie exactly and fall back to index order.
  const double grid = 1e-9 * (1.0 + (p > 0 ? beta_mip.cwiseAbs().maxCoeff() : 0.0));
  std::vector<double> key(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) key[static_cast<std::size_t>(i)] = std::round(std::abs(beta_mip(i)) / grid);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)];
  });
  out.index_set.assign(order.begin(), order.begin() + h);
  std::sort(out.index_set.begin(), out.index_set.end());

  if (q == 0) {
    out.delta_hat = Vector(0);
    out.beta_hat = xi_hat.cwiseProduct(z.cast<double>());
    return out;
  }

  Matrix G(h, q);
  Vector x(h);
  for (Index k = 0; k < h; ++k) {
    G.row(k) = gamma_hat.row(out.index_set[static_cast<std::size_t>(k)]);
    x(k) = xi_hat(out.index_set[static_cast<std::size_t>(k)]);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(G);
  qr.setThreshold(1e-10);
  if (qr.rank() < q) raise(ErrorCode::RankDeficientSubmatrix, "refine: gamma_I is rank deficient");
  out.delta_hat = qr.solve(x);
  out.beta_hat = (xi_hat - gamma_hat * out.delta_hat).cwiseProduct(z.cast<double>());
  return out;
}

SparComponents estimate_components(const Dataset& d, std::optional<int> q_opt, std::uint64_t seed,
                                   double poet_c) {
  const Index n = d.n(), p = d.p();
  SparComponents c;
  c.high_dim = !(n > p);

  auto t0 = Clock::now();
  int q = 0;
  if (q_opt) {
    q = *q_opt;
    require(q >= 0 && q < p, ErrorCode::InvalidConfig, "q must satisfy 0 <= q < p");
  } else {
    q = staged("select_q", [&] {
      const int q_max = default_q_max(n, p);
      return q_max <= 0 ? 0 : select_q(d.X, q_max).q;
    });
  }
  c.q = q;

  Matrix alpha;
  Matrix sigma_x;
  staged("factor", [&] {
    if (!c.high_dim) {
      sigma_x = sample_covariance(d.X);
      if (q > 0) {
        FactorFit fit = fa_mle(d.X, q);
        alpha = fit.alpha_hat;
        c.sigma_eps_hat = fit.sigma_eps_hat;
        c.factor_diagnostics = fit.diagnostics;
      } else {
        alpha = Matrix(p, 0);
        c.sigma_eps_hat = Matrix(sigma_x.diagonal().asDiagonal());
      }
      c.factor_diagnostics.pd_shift = make_positive_definite(sigma_x, 1e-6);
    } else {
      alpha = q > 0 ? fa_pca(d.X, q) : Matrix(p, 0);
      PoetResult pr = poet(d.X, q, poet_c);
      sigma_x = std::move(pr.sigma_x_hat);
      c.sigma_eps_hat = std::move(pr.sigma_eps_hat);
      c.factor_diagnostics.eigenvalues = pr.eigenvalues;
      c.factor_diagnostics.pd_shift = pr.pd_shift;
    }
    return 0;
  });
  c.gamma_hat = staged("gamma", [&] { return gamma_from(sigma_x, alpha); });
  c.factor_ms = ms_since(t0);

  t0 = Clock::now();
  RegressionFit reg = staged("regression", [&] {
    return c.high_dim ? debiased_lasso(d.X, d.Y, seed) : ols(d.X, d.Y);
  });
  c.xi_hat = std::move(reg.xi_hat);
  c.sigma_resid2 = reg.sigma_resid2;
  c.regression_method = reg.method;
  c.regression_ms = ms_since(t0);
  return c;
}

SparResult spar_from_components(const SparComponents& c, Index n, const SparConfig& cfg) {
  require(cfg.M > 0.0, ErrorCode::InvalidConfig, "M must be > 0");
  const Index p = c.xi_hat.size();
  SparResult r;
  r.q_used = c.q;
  r.high_dim = c.high_dim;
  r.factor_diagnostics = c.factor_diagnostics;
  r.regression_method = c.regression_method;
  r.timings.factor_ms = c.factor_ms;
  r.timings.regression_ms = c.regression_ms;

  r.sigma2_hat = estimate_sigma2(c.sigma_eps_hat, c.sigma_resid2);
  if (cfg.threshold_override) {
    require(*cfg.threshold_override >= 0.0, ErrorCode::InvalidConfig, "threshold override must be >= 0");
    r.t = *cfg.threshold_override;
  } else {
    r.t = staged("threshold", [&] { return compute_threshold(n, p, r.sigma2_hat); });
  }

  auto t0 = Clock::now();
  const MipSolution sol = staged("mip", [&] {
    return solve_bnb(build_mip(c.xi_hat, c.gamma_hat, r.t, cfg.M), cfg.limits);
  });
  r.timings.mip_ms = ms_since(t0);
  r.z = sol.z;
  r.delta_mip = sol.delta;
  r.status = sol.status;
  r.mip_nodes = sol.nodes_explored;
  r.beta_mip = c.q ? Vector(c.xi_hat - c.gamma_hat * sol.delta) : c.xi_hat;

  t0 = Clock::now();
  try {
    Refinement ref = refine(c.xi_hat, c.gamma_hat, r.beta_mip, r.z, c.q);
    r.delta_hat = std::move(ref.delta_hat);
    r.beta_hat = std::move(ref.beta_hat);
    r.refine_index = std::move(ref.index_set);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RankDeficientSubmatrix) rethrow_with_stage(e, "refine");
    r.refine_fallback = true;
    r.delta_hat = sol.delta;
    r.beta_hat = r.beta_mip.cwiseProduct(r.z.cast<double>());
  }
  r.timings.refine_ms = ms_since(t0);
  return r;
}

SparResult spar_fit(const Dataset& d, const SparConfig& cfg) {
  const auto start = Clock::now();
  auto t0 = Clock::now();
  const Dataset prepared = staged("prepare", [&] {
    validate_dataset(d);
    return prepare(d);
  });
  const double prepare_ms = ms_since(t0);

  const SparComponents comp = estimate_components(prepared, cfg.q, cfg.seed, cfg.poet_c);
  SparResult r = spar_from_components(comp, prepared.n(), cfg);
  r.timings.prepare_ms = prepare_ms;
  r.timings.total_ms = ms_since(start);
  return r;
}

nlohmann::json to_json(const SparResult& r) {
  nlohmann::json j;
  j["beta_hat"] = to_vec(r.beta_hat);
  j["delta_hat"] = to_vec(r.delta_hat);
  j["z"] = std::vector<int>(r.z.data(), r.z.data() + r.z.size());
  j["beta_mip"] = to_vec(r.beta_mip);
  j["delta_mip"] = to_vec(r.delta_mip);
  j["t"] = r.t;
  j["sigma2_hat"] = r.sigma2_hat;
  j["q_used"] = r.q_used;
  j["refine_index"] = r.refine_index;
  j["solver_status"] = to_string(r.status);
  j["diagnostics"] = {
      {"branch", r.high_dim ? "highdim" : "lowdim"},
      {"mip_nodes", r.mip_nodes},
      {"refine_fallback", r.refine_fallback},
      {"regression_method", r.regression_method},
      {"factor_eigenvalues", to_vec(r.factor_diagnostics.eigenvalues)},
      {"em_iterations", r.factor_diagnostics.em_iterations},
      {"em_converged", r.factor_diagnostics.converged},
      {"pd_shift", r.factor_diagnostics.pd_shift},
  };
  j["timings_ms"] = {{"prepare", r.timings.prepare_ms}, {"factor", r.timings.factor_ms},
                     {"regression", r.timings.regression_ms}, {"mip", r.timings.mip_ms},
                     {"refine", r.timings.refine_ms}, {"total", r.timings.total_ms}};
  return j;
}

}  // namespace spar
