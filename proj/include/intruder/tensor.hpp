// SPDX-License-Identifier: Apache-2.0
//
// Dense real linear algebra and statistics used throughout the toolkit.
// Every matrix is a row-major 64-bit Eigen matrix; the row-major layout is the
// on-disk layout of checkpoint payloads.
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace intruder {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Thin singular value decomposition: source = left * diag(values) * right_t.
///
/// With p = min(rows, cols): left is rows x p, right_t is p x cols, values has p
/// entries sorted non-increasing. Sign convention: the first entry of each left
/// vector whose magnitude exceeds kSignTolerance is non-negative, and the paired
/// row of right_t is flipped with it.
struct SvdResult {
  Matrix left;
  Vector values;
  Matrix right_t;

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
  Vector left_vector(std::size_t i) const { return left.col(static_cast<Eigen::Index>(i)); }
  Vector right_vector(std::size_t i) const { return right_t.row(static_cast<Eigen::Index>(i)).transpose(); }
  Matrix reconstruct() const;
};

inline constexpr double kSignTolerance = 1e-12;

bool all_finite(const Matrix& m) noexcept;

/// Throws InvalidInput naming `what` if any entry of m is NaN or infinite.
void require_finite(const Matrix& m, std::string_view what);

SvdResult svd(const Matrix& m);

/// Largest |cos(v, column_i)| over the columns of basis and the smallest index attaining it.
struct CosineMatch {
  double value = 0.0;
  std::size_t index = 0;
};

CosineMatch max_abs_cosine(const Vector& v, const Matrix& basis);

/// exp of the Shannon entropy of the trace-normalized spectrum.
double effective_rank(std::span<const double> values);
double effective_rank(const Vector& values);

/// Fractional (average-of-ties) ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> xs);

/// Pearson correlation of the average-rank vectors of xs and ys.
double spearman(std::span<const double> xs, std::span<const double> ys);

/// ||a - b||_F / ||b||_F, or the absolute error when b is zero.
double relative_frobenius_error(const Matrix& a, const Matrix& b);

/// max |Q^T Q - I| over the columns of q.
double orthonormality_defect(const Matrix& q);

}  // namespace intruder
