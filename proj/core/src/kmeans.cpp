#include "spar/kmeans.hpp"

#include "spar/error.hpp"
#include "spar/rng.hpp"

#include <limits>

namespace spar {
namespace {

Matrix seed_plus_plus(const Matrix& x, int K, Rng& rng) {
  const Index n = x.rows();
  Matrix centers(K, x.cols());
  std::uniform_int_distribution<Index> pick(0, n - 1);
  centers.row(0) = x.row(pick(rng.engine()));
  Vector d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int k = 1; k < K; ++k) {
    const double total = d2.sum();
    Index chosen = 0;
    if (total <= 0.0) {
      chosen = pick(rng.engine());
    } else {
      chosen = rng.categorical(d2);
    }
    centers.row(k) = x.row(chosen);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(k)).rowwise().squaredNorm());
  }
  return centers;
}

double assign(const Matrix& x, const Matrix& centers, std::vector<int>& labels) {
  double wcss = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Index k = 0; k < centers.rows(); ++k) {
      const double d = (x.row(i) - centers.row(k)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(k);
      }
    }
    labels[static_cast<std::size_t>(i)] = arg;
    wcss += best;
  }
  return wcss;
}

}  // namespace

KMeansResult kmeans(const Matrix& rows, int K, std::uint64_t seed, KMeansOptions opts) {
  const Index n = rows.rows();
  require(K >= 1 && n >= K, ErrorCode::InvalidConfig, "kmeans needs n >= K >= 1");
  require(opts.restarts >= 1 && opts.max_iter >= 1, ErrorCode::InvalidConfig,
          "kmeans needs restarts >= 1 and max_iter >= 1");

  Rng rng(seed);
  KMeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < opts.restarts; ++restart) {
    Matrix centers = seed_plus_plus(rows, K, rng);
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    std::vector<double> trace;
    double wcss = assign(rows, centers, labels);
    trace.push_back(wcss);

    for (int it = 0; it < opts.max_iter; ++it) {
      Matrix sums = Matrix::Zero(K, rows.cols());
      Vector counts = Vector::Zero(K);
      for (Index i = 0; i < n; ++i) {
        sums.row(labels[static_cast<std::size_t>(i)]) += rows.row(i);
        counts(labels[static_cast<std::size_t>(i)]) += 1.0;
      }
      for (int k = 0; k < K; ++k) {
        // Empty clusters keep their previous center.
        if (counts(k) > 0) centers.row(k) = sums.row(k) / counts(k);
      }
      const std::vector<int> previous = labels;
      wcss = assign(rows, centers, labels);
      trace.push_back(wcss);
      if (labels == previous) break;
    }

    if (wcss < best.wcss) {
      best.wcss = wcss;
      best.centers = centers;
      best.labels = labels;
      best.wcss_trace = std::move(trace);
    }
  }

  for (int& l : best.labels) l += 1;
  return best;
}

}  // namespace spar
