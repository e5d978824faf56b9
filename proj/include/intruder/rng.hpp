// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "intruder/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace intruder {

/// Seeded pseudo-random source with a platform-independent stream.
///
/// Integers come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Every derived distribution is computed here instead of through
/// <random> distributions, whose algorithms are implementation-defined:
/// uniform doubles take the top 53 bits, bounded integers use rejection
/// sampling, and normals use the Marsaglia polar method.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64/polar-normal/v1";

  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform();

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  double normal();

  /// rows x cols matrix of independent N(0, stddev^2) entries, filled row-major.
  Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double stddev = 1.0);

  /// Gaussian vector scaled to unit Euclidean norm.
  Vector unit_vector(Eigen::Index n);

  /// Uniformly random permutation of 0..n-1 (Fisher-Yates).
  std::vector<std::size_t> permutation(std::size_t n);

  /// Seed for an independent child stream, mixed with splitmix64.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Random matrix with orthonormal columns (rows >= cols), from Gram-Schmidt on Gaussian columns.
Matrix random_orthonormal_columns(Rng& rng, Eigen::Index rows, Eigen::Index cols);

/// Copy of m with rows orthonormalized in order by modified Gram-Schmidt (two passes).
Matrix orthonormalize_rows(const Matrix& m);

}  // namespace intruder
