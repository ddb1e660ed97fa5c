#pragma once

#include "spar/types.hpp"

#include <optional>

namespace spar {

struct ErrorMetrics {
  double mae = 0.0;
  double rmse = 0.0;
};

/// Per-coefficient errors (both normalized by p). Throws DimensionMismatch.
ErrorMetrics metrics(const Vector& beta_hat, const Vector& beta_true);

struct SupportMetrics {
  std::optional<double> tpr;  // empty when beta_true has no nonzero entry
  std::optional<double> fpr;  // empty when beta_true has no zero entry
};

SupportMetrics tpr_fpr(const Vector& beta_hat, const Vector& beta_true, double zero_tol = 1e-10);

}  // namespace spar
