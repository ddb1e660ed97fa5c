#pragma once

#include "spar/types.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace spar {

/// Seeded source of the draws the generators need. Wraps std::mt19937_64 so
/// every generator is a deterministic function of its seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi);
  double normal(double mean = 0.0, double sd = 1.0);
  double gamma(double shape, double scale);
  double beta(double a, double b);
  double inv_gamma(double shape, double scale);
  int binomial(int trials, double prob);
  bool bernoulli(double prob);
  Vector dirichlet(const Vector& alpha);
  /// Index in [0, weights.size()) drawn proportionally to `weights`.
  Index categorical(const Vector& weights);
  std::uint64_t next_u64() { return engine_(); }

  Matrix normal_matrix(Index rows, Index cols);
  Matrix uniform_matrix(Index rows, Index cols, double lo, double hi);
  Vector uniform_vector(Index n, double lo, double hi);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Mixes a textual tag (e.g. a method name) into a base seed. Uses FNV-1a and
/// a splitmix64 finalizer so the result is stable across platforms.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

/// Haar-distributed random orthogonal k x k matrix.
Matrix random_orthogonal(Index k, Rng& rng);

}  // namespace spar
