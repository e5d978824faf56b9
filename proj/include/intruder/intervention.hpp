// SPDX-License-Identifier: Apache-2.0
//
// Edits applied to tuned weights: rescaling one singular direction, injecting a
// rank-one term, and merging low-rank adapters.
#pragma once

#include "intruder/checkpoint.hpp"
#include "intruder/spectral.hpp"
#include "intruder/tensor.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <string>

namespace intruder {

/// Low-rank update (alpha / rank) * b * a with b: m x r and a: r x n.
struct LoraAdapter {
  Matrix b;
  Matrix a;
  double alpha = 1.0;

  std::size_t rank() const noexcept { return static_cast<std::size_t>(a.rows()); }
  double scale() const noexcept { return alpha / static_cast<double>(a.rows()); }
  /// Throws InvalidInput unless inner dimensions agree, alpha > 0 and r <= min(m, n).
  void validate() const;
  Matrix update() const;
};

Matrix merge_adapter(const Matrix& base, const LoraAdapter& adapter);

/// tuned + (lambda - 1) * u_i * sigma_i * v_i^T for the i-th singular triplet of tuned.
/// lambda == 1 returns an exact copy; lambda == 0 removes the direction.
Matrix scale_direction(const Matrix& tuned, std::size_t index, double lambda);

/// w + lambda * v v^T for square w and unit v.
Matrix inject_rank_one(const Matrix& w, const Vector& v, double lambda);

struct ScalingEntry {
  std::size_t index = 0;
  double lambda = 1.0;
};

/// At most one edit per tensor; tensors absent from the map are left untouched.
using ScalingPlan = std::map<std::string, ScalingEntry>;

/// For each matrix with intruders, the one with the largest singular value
/// (smallest rank on ties), scaled by lambda.
ScalingPlan select_top_intruders(const ModelIntruderReport& report, double lambda);

/// Throws MismatchError if the plan names a tensor the checkpoint lacks.
Checkpoint apply_plan(const Checkpoint& tuned, const ScalingPlan& plan);

inline constexpr std::array<double, 7> kDefaultLambdaGrid{0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0};

}  // namespace intruder
