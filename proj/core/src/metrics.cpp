#include "spar/metrics.hpp"

#include "spar/error.hpp"

#include <cmath>

namespace spar {

ErrorMetrics metrics(const Vector& beta_hat, const Vector& beta_true) {
  require(beta_hat.size() == beta_true.size(), ErrorCode::DimensionMismatch, "metrics: length mismatch");
  require(beta_true.size() >= 1, ErrorCode::DimensionMismatch, "metrics: empty vectors");
  const Vector e = beta_hat - beta_true;
  const double p = static_cast<double>(e.size());
  return {e.cwiseAbs().sum() / p, std::sqrt(e.squaredNorm() / p)};
}

SupportMetrics tpr_fpr(const Vector& beta_hat, const Vector& beta_true, double zero_tol) {
  require(beta_hat.size() == beta_true.size(), ErrorCode::DimensionMismatch, "tpr_fpr: length mismatch");
  long pos = 0, neg = 0, tp = 0, fp = 0;
  for (Index i = 0; i < beta_true.size(); ++i) {
    const bool selected = std::abs(beta_hat(i)) > zero_tol;
    if (beta_true(i) != 0.0) {
      ++pos;
      tp += selected;
    } else {
      ++neg;
      fp += selected;
    }
  }
  SupportMetrics out;
  if (pos > 0) out.tpr = static_cast<double>(tp) / static_cast<double>(pos);
  if (neg > 0) out.fpr = static_cast<double>(fp) / static_cast<double>(neg);
  return out;
}

}  // namespace spar
