#include "spar/methods.hpp"

#include "spar/baselines.hpp"
#include "spar/dataset.hpp"
#include "spar/error.hpp"
#include "spar/io.hpp"
#include "spar/regression.hpp"

#include <algorithm>

namespace spar {

namespace {

nlohmann::json empty_result(const std::string& method, const Vector& beta) {
  return {{"method", method},
          {"beta_hat", vector_to_json(beta)},
          {"delta_hat", nullptr},
          {"z", nullptr},
          {"beta_mip", nullptr},
          {"delta_mip", nullptr},
          {"t", nullptr},
          {"sigma2_hat", nullptr},
          {"q_used", nullptr},
          {"refine_index", nullptr},
          {"solver_status", nullptr},
          {"diagnostics", nullptr},
          {"timings_ms", nullptr}};
}

SparComponents components_for(const Dataset& prepared, const MethodContext& ctx) {
  if (ctx.components) return *ctx.components;
  return estimate_components(prepared, ctx.q, ctx.seed);
}

}  // namespace

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"spar", "null", "ols", "ridge", "lasso", "deconf-lasso",
                                              "deconf-ridge"};
  return names;
}

bool is_method(const std::string& name) {
  const auto& n = method_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

bool uses_components(const std::string& name) { return name == "spar" || name == "null"; }

MethodOutput run_method(const std::string& name, const Dataset& d, const MethodContext& ctx) {
  if (!is_method(name)) raise(ErrorCode::InvalidConfig, "unknown method '" + name + "'");
  validate_dataset(d);
  const Dataset prepared = prepare(d);
  MethodOutput out;

  if (name == "spar") {
    SparConfig cfg;
    cfg.q = ctx.q;
    cfg.M = ctx.M;
    cfg.limits = ctx.limits;
    cfg.seed = ctx.seed;
    const SparComponents comp = components_for(prepared, ctx);
    const SparResult r = spar_from_components(comp, prepared.n(), cfg);
    out.beta_hat = r.beta_hat;
    out.result = to_json(r);
    out.result["method"] = name;
    out.status = r.status == MipStatus::Optimal ? "ok" : to_string(r.status);
    return out;
  }
  if (name == "null") {
    const SparComponents comp = components_for(prepared, ctx);
    LmsConfig cfg;
    cfg.seed = ctx.seed;
    const NullResult r = null_treatments(comp.xi_hat, comp.gamma_hat, cfg);
    out.beta_hat = r.beta_hat;
    out.result = empty_result(name, r.beta_hat);
    out.result["delta_hat"] = vector_to_json(r.delta_hat);
    out.result["q_used"] = comp.q;
    out.result["diagnostics"] = {{"lms_objective", r.objective}, {"exhaustive", r.exhaustive}};
    return out;
  }

  const int k = std::min<int>(ctx.deconf_k, static_cast<int>(std::min(prepared.n(), prepared.p())) - 1);
  if (name == "ols") {
    out.beta_hat = ols(prepared.X, prepared.Y).xi_hat;
  } else if (name == "ridge") {
    out.beta_hat = ridge_cv(prepared.X, prepared.Y, ctx.folds, ctx.seed).xi_hat;
  } else if (name == "lasso") {
    out.beta_hat = lasso_cv(prepared.X, prepared.Y, ctx.folds, ctx.seed).coef;
  } else {
    DeconfConfig cfg;
    cfg.k = std::max(k, 0);
    cfg.seed = ctx.seed;
    cfg.folds = ctx.folds;
    cfg.outcome_stage = name == "deconf-lasso" ? OutcomeStage::Lasso : OutcomeStage::Ridge;
    out.beta_hat = deconfounder(prepared, cfg);
  }
  out.result = empty_result(name, out.beta_hat);
  return out;
}

}  // namespace spar
