// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "intruder/checkpoint.hpp"
#include "intruder/intervention.hpp"
#include "intruder/rng.hpp"

#include <cmath>
#include <string>

namespace intruder::testing {

/// (1, 1, 1) / sqrt(3)
inline Vector uniform3() { return Vector::Constant(3, 1.0 / std::sqrt(3.0)); }

/// I3 + 5 v v^T: eigenvector v with eigenvalue 6, eigenvalue 1 on v's complement.
inline Matrix injected_identity() {
  const Vector v = uniform3();
  return Matrix(Matrix::Identity(3, 3) + 5.0 * v * v.transpose());
}

/// `injected` tensors carrying the rank-one injection and `plain` tensors equal to the base.
inline CheckpointPair injected_pair(std::size_t injected = 2, std::size_t plain = 1) {
  Checkpoint base;
  Checkpoint tuned;
  for (std::size_t i = 0; i < injected + plain; ++i) {
    const std::string name = "layer" + std::to_string(i) + ".weight";
    base.set(name, Matrix::Identity(3, 3));
    tuned.set(name, i < injected ? injected_identity() : Matrix(Matrix::Identity(3, 3)));
  }
  return validate_pair(base, tuned);
}

/// Base with a well-separated spectrum and a small random perturbation.
inline CheckpointPair random_pair(std::uint64_t seed, Eigen::Index rows = 12, Eigen::Index cols = 9) {
  Rng rng(seed);
  Checkpoint base;
  Checkpoint tuned;
  for (int t = 0; t < 2; ++t) {
    const std::string name = "m" + std::to_string(t);
    const Matrix b = rng.gaussian(rows, cols);
    base.set(name, b);
    tuned.set(name, Matrix(b + rng.gaussian(rows, cols, 0.5)));
  }
  return validate_pair(base, tuned);
}

}  // namespace intruder::testing
