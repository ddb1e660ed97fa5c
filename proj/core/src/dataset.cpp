#include "spar/dataset.hpp"

#include "spar/error.hpp"

#include <cstring>
#include <string>

namespace spar {

SparsityPattern sparsity_pattern(const Vector& beta, double zero_tol) {
  SparsityPattern out;
  for (Index i = 0; i < beta.size(); ++i) {
    if (std::abs(beta(i)) > zero_tol) out.support.push_back(i);
  }
  return out;
}

void validate_dataset(const Dataset& d) {
  if (d.Y.size() != d.X.rows()) {
    raise(ErrorCode::DimensionMismatch,
          "Y has length " + std::to_string(d.Y.size()) + " but X has " +
              std::to_string(d.X.rows()) + " rows");
  }
  if (d.W && d.W->rows() != d.X.rows()) {
    raise(ErrorCode::DimensionMismatch,
          "W has " + std::to_string(d.W->rows()) + " rows but X has " +
              std::to_string(d.X.rows()));
  }
  if (d.X.rows() == 0 || d.X.cols() == 0) raise(ErrorCode::DimensionMismatch, "X is empty");
  if (!d.X.allFinite()) raise(ErrorCode::NonFiniteEntry, "X contains NaN or Inf");
  if (!d.Y.allFinite()) raise(ErrorCode::NonFiniteEntry, "Y contains NaN or Inf");
  if (d.W && !d.W->allFinite()) raise(ErrorCode::NonFiniteEntry, "W contains NaN or Inf");
}

Vector column_means(const Matrix& m) {
  require(m.rows() > 0, ErrorCode::EmptyMatrix, "cannot center a matrix with no rows");
  return m.colwise().mean().transpose();
}

Matrix center_columns(const Matrix& m) {
  const Vector mu = column_means(m);
  return m.rowwise() - mu.transpose();
}

Vector center(const Vector& v) {
  require(v.size() > 0, ErrorCode::EmptyMatrix, "cannot center an empty vector");
  return v.array() - v.mean();
}

Dataset residualize_on_confounders(const Dataset& d) {
  validate_dataset(d);
  require(d.W.has_value(), ErrorCode::InvalidConfig, "residualization needs W");
  const Index n = d.n();
  const Index r = d.r();
  require(n > r, ErrorCode::SingularDesign, "need more samples than measured confounders");

  const Matrix Wc = center_columns(*d.W);
  Eigen::ColPivHouseholderQR<Matrix> qr(Wc);
  qr.setThreshold(1e-10);
  if (Wc.colwise().norm().minCoeff() <= 1e-12 || qr.rank() < r) {
    raise(ErrorCode::SingularDesign, "centered W is rank deficient");
  }

  const Matrix Xc = center_columns(d.X);
  const Vector Yc = center(d.Y);

  Dataset out;
  out.X = Xc - Wc * qr.solve(Xc);
  out.Y = Yc - Wc * qr.solve(Yc);
  return out;
}

Dataset prepare(const Dataset& d) {
  validate_dataset(d);
  if (d.W && d.W->cols() > 0) return residualize_on_confounders(d);
  Dataset out;
  out.X = center_columns(d.X);
  out.Y = center(d.Y);
  return out;
}

namespace {

void fnv_mix(std::uint64_t& h, const double* data, Index count) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  const std::size_t len = static_cast<std::size_t>(count) * sizeof(double);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
}

}  // namespace

std::uint64_t dataset_hash(const Dataset& d) {
  std::uint64_t h = 1469598103934665603ULL;
  const Index dims[3] = {d.X.rows(), d.X.cols(), d.r()};
  for (Index v : dims) {
    const double x = static_cast<double>(v);
    fnv_mix(h, &x, 1);
  }
  fnv_mix(h, d.X.data(), d.X.size());
  fnv_mix(h, d.Y.data(), d.Y.size());
  if (d.W) fnv_mix(h, d.W->data(), d.W->size());
  return h;
}

}  // namespace spar
