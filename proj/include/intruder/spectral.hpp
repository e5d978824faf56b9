// SPDX-License-Identifier: Apache-2.0
//
// Intruder-dimension analysis: comparing the singular vectors of a tuned
// weight matrix against every singular vector of its base matrix.
#pragma once

#include "intruder/checkpoint.hpp"
#include "intruder/tensor.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace intruder {

/// A tuned singular vector is an intruder when its largest absolute cosine
/// against all base singular vectors falls strictly below epsilon. Only the
/// top k tuned vectors are examined.
struct ScanConfig {
  double epsilon = 0.5;
  std::size_t k = 10;
  /// Compare right singular vectors instead of left ones.
  bool use_right_vectors = false;

  /// Throws InvalidInput unless 0 < epsilon < 1 and k >= 1.
  void validate() const;
};

struct Intruder {
  std::size_t rank = 0;        // index into the tuned spectrum
  double max_cosine = 0.0;     // best |cos| against any base singular vector
  std::size_t best_match = 0;  // base rank attaining max_cosine
  double sigma = 0.0;          // tuned singular value at `rank`
};

struct MatrixIntruderReport {
  std::string name;
  std::size_t k_requested = 0;
  std::size_t k_used = 0;  // less than k_requested when the matrix is smaller than k
  std::vector<Intruder> intruders;

  std::size_t n_intruders() const noexcept { return intruders.size(); }
  bool k_clamped() const noexcept { return k_used < k_requested; }
};

struct ModelIntruderReport {
  ScanConfig config;
  std::vector<MatrixIntruderReport> matrices;  // lexicographic by name

  std::size_t total() const noexcept;
};

/// Both decompositions of a base/tuned pair plus the best base match of every
/// tuned vector. Building one costs two SVDs; every threshold query after that
/// is a scan over a vector.
class SpectralComparison {
 public:
  SpectralComparison(const Matrix& base, const Matrix& tuned, bool use_right_vectors = false);

  const SvdResult& base_svd() const noexcept { return base_; }
  const SvdResult& tuned_svd() const noexcept { return tuned_; }
  std::size_t rank_count() const noexcept { return matches_.size(); }
  const CosineMatch& match(std::size_t tuned_rank) const { return matches_.at(tuned_rank); }

  /// Intruders among the top k tuned vectors at threshold epsilon. k must not exceed rank_count().
  std::vector<Intruder> intruders(double epsilon, std::size_t k) const;
  std::size_t count(double epsilon, std::size_t k) const;

 private:
  SvdResult base_;
  SvdResult tuned_;
  std::vector<CosineMatch> matches_;
};

/// Strict single-matrix scan: throws InvalidInput on shape mismatch or k > min(rows, cols).
MatrixIntruderReport count_intruders(const Matrix& base, const Matrix& tuned, const ScanConfig& cfg,
                                     std::string name = {});

/// Scans every tensor of the pair in name order. k is clamped per matrix to its
/// smaller dimension, and the clamp is recorded in the matrix report.
ModelIntruderReport scan_model(const CheckpointPair& pair, const ScanConfig& cfg);

struct SweepPoint {
  double parameter = 0.0;  // epsilon or k
  std::size_t total = 0;
};

/// Model totals for each epsilon (strictly increasing, each in (0, 1)) at fixed k,
/// clamped per matrix like scan_model.
std::vector<SweepPoint> epsilon_sweep(const CheckpointPair& pair, std::span<const double> epsilons, std::size_t k);

/// Model totals for each k (strictly increasing) at fixed epsilon, clamped per matrix.
std::vector<SweepPoint> k_sweep(const CheckpointPair& pair, std::span<const std::size_t> ks, double epsilon);

struct SimilarityGrid {
  std::string name;
  Matrix grid;  // grid(i, j) = |cos(base u_i, tuned u_j)|
};

SimilarityGrid similarity_grid(const Matrix& base, const Matrix& tuned, std::size_t k_base, std::size_t k_tuned,
                               std::string name = {});

struct EvolutionTrace {
  std::string tensor;
  std::vector<std::size_t> ranks;
  std::vector<std::size_t> steps;
  // [snapshot][tracked rank]
  std::vector<std::vector<double>> max_cosine;
  std::vector<std::vector<double>> sigma;
};

/// Follows fixed tuned ranks of one tensor across snapshots. Each snapshot's
/// step comes from its "step" metadata entry, falling back to its position.
/// Steps must be strictly increasing.
EvolutionTrace evolution_trace(std::span<const Checkpoint> snapshots, const std::string& tensor,
                               std::span<const std::size_t> ranks, const Checkpoint& base);

/// Spearman correlation between per-run intruder totals and a per-run metric.
double correlate(std::span<const double> totals, std::span<const double> metric);
double correlate(std::span<const std::size_t> totals, std::span<const double> metric);

}  // namespace intruder
