// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "intruder/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace intruder::toy {

/// Gaussian class-mean clusters: sample = margin * d_c + noise * N(0, I) for
/// class c with unit mean direction d_c.
struct TaskSpec {
  std::string id = "task";
  std::size_t n_in = 64;
  std::size_t classes = 2;
  std::size_t n_train = 512;
  std::size_t n_test = 512;
  double margin = 3.0;
  double noise = 1.0;
  std::uint64_t seed = 1;
  /// n_in x classes, columns normalized on use. Empty means orthonormal random directions from the seed.
  Matrix mean_directions;

  /// Throws InvalidInput for zero counts, classes < 2, non-positive noise or bad directions.
  void validate() const;
};

/// Samples are columns of x, matching Y = W X.
struct Dataset {
  Matrix x;
  std::vector<std::size_t> y;

  std::size_t size() const noexcept { return y.size(); }
};

struct SyntheticTask {
  TaskSpec spec;
  Matrix means;  // n_in x classes, actual class centers
  Dataset train;
  Dataset test;
};

/// Deterministic in spec. Labels cycle through the classes before a seeded
/// shuffle, so every class count is within one of the others; the first
/// n_train shuffled samples form the training split and the rest the test split.
SyntheticTask make_task(const TaskSpec& spec);

/// Columns `indices` of d as a new dataset.
Dataset gather(const Dataset& d, const std::vector<std::size_t>& indices);

}  // namespace intruder::toy
