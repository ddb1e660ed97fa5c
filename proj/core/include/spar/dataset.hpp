#pragma once

#include "spar/types.hpp"

namespace spar {

/// Throws DimensionMismatch or NonFiniteEntry when the Dataset invariants fail.
void validate_dataset(const Dataset& d);

/// Subtracts each column's sample mean. Throws EmptyMatrix for zero rows.
Matrix center_columns(const Matrix& m);
Vector center(const Vector& v);

/// Column means of `m` (length m.cols()).
Vector column_means(const Matrix& m);

/// Replaces X and Y by their residuals from a least-squares fit on W plus an
/// intercept, and drops W. Throws SingularDesign when centered W is rank deficient.
Dataset residualize_on_confounders(const Dataset& d);

/// Centers X and Y; residualizes on W first when present.
Dataset prepare(const Dataset& d);

/// Stable 64-bit hash of X, Y and W contents (FNV-1a over raw doubles).
std::uint64_t dataset_hash(const Dataset& d);

}  // namespace spar
