#include "spar/rng.hpp"

#include "spar/error.hpp"

#include <cmath>

namespace spar {

double Rng::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double Rng::normal(double mean, double sd) {
  return std::normal_distribution<double>(mean, sd)(engine_);
}

double Rng::gamma(double shape, double scale) {
  return std::gamma_distribution<double>(shape, scale)(engine_);
}

double Rng::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  const double s = x + y;
  // Both draws underflow for very small shapes; fall back to a fair coin
  // weighted by the shapes, which is the limiting distribution.
  if (s <= 0.0 || !std::isfinite(s)) return bernoulli(a / (a + b)) ? 1.0 : 0.0;
  return x / s;
}

double Rng::inv_gamma(double shape, double scale) { return scale / gamma(shape, 1.0); }

int Rng::binomial(int trials, double prob) {
  return std::binomial_distribution<int>(trials, prob)(engine_);
}

bool Rng::bernoulli(double prob) { return std::bernoulli_distribution(prob)(engine_); }

Vector Rng::dirichlet(const Vector& alpha) {
  Vector g(alpha.size());
  for (Index k = 0; k < alpha.size(); ++k) g(k) = gamma(alpha(k), 1.0);
  const double s = g.sum();
  if (s <= 0.0) {
    // All components underflowed: put the mass on one coordinate chosen by alpha.
    Vector out = Vector::Zero(alpha.size());
    out(categorical(alpha)) = 1.0;
    return out;
  }
  return g / s;
}

Index Rng::categorical(const Vector& weights) {
  const double total = weights.sum();
  double u = uniform(0.0, total);
  for (Index k = 0; k < weights.size(); ++k) {
    u -= weights(k);
    if (u < 0.0) return k;
  }
  return weights.size() - 1;
}

Matrix Rng::normal_matrix(Index rows, Index cols) {
  Matrix m(rows, cols);
  // Row-major fill so a matrix grows by appending samples.
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal();
  return m;
}

Matrix Rng::uniform_matrix(Index rows, Index cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
  return m;
}

Vector Rng::uniform_vector(Index n, double lo, double hi) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
  return v;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL + h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Matrix random_orthogonal(Index k, Rng& rng) {
  const Matrix g = rng.normal_matrix(k, k);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(k, k);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < k; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return q;
}

}  // namespace spar
