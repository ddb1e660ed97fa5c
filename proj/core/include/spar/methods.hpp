#pragma once

#include "spar/mip.hpp"
#include "spar/spar.hpp"
#include "spar/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spar {

struct MethodContext {
  std::uint64_t seed = 0;
  std::optional<int> q;
  double M = 30.0;
  MipLimits limits;
  int deconf_k = 50;  // clamped to min(n, p) - 1
  int folds = 10;
  /// Precomputed factor and regression stages for spar/null; computed on demand when null.
  const SparComponents* components = nullptr;
};

struct MethodOutput {
  Vector beta_hat;
  nlohmann::json result;  // common result schema, inapplicable fields null
  std::string status = "ok";
};

/// spar, null, ols, ridge, lasso, deconf-lasso, deconf-ridge
const std::vector<std::string>& method_names();
bool is_method(const std::string& name);

/// Methods that consume SparComponents.
bool uses_components(const std::string& name);

MethodOutput run_method(const std::string& name, const Dataset& d, const MethodContext& ctx);

}  // namespace spar
