// SPDX-License-Identifier: Apache-2.0
#include "intruder/tensor.hpp"

#include "intruder/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace intruder {

Matrix SvdResult::reconstruct() const { return left * values.asDiagonal() * right_t; }

bool all_finite(const Matrix& m) noexcept {
  return std::all_of(m.data(), m.data() + m.size(), [](double x) { return std::isfinite(x); });
}

void require_finite(const Matrix& m, std::string_view what) {
  if (!all_finite(m)) {
    throw InvalidInput(std::string(what) + ": matrix contains non-finite entries");
  }
}

SvdResult svd(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw InvalidInput("svd: matrix must have positive dimensions");
  }
  require_finite(m, "svd");

  // BDCSVD falls back to one-sided Jacobi below its block size, so small and
  // large inputs both get backward-stable factors.
  Eigen::BDCSVD<Eigen::MatrixXd> dec(Eigen::MatrixXd(m), Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success) {
    throw InvalidInput("svd: decomposition did not converge");
  }

  SvdResult out;
  out.left = dec.matrixU();
  out.values = dec.singularValues();
  out.right_t = dec.matrixV().transpose();

  for (Eigen::Index j = 0; j < out.left.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.left.rows(); ++i) {
      const double x = out.left(i, j);
      if (std::abs(x) > kSignTolerance) {
        if (x < 0.0) {
          out.left.col(j) *= -1.0;
          out.right_t.row(j) *= -1.0;
        }
        break;
      }
    }
  }
  return out;
}

CosineMatch max_abs_cosine(const Vector& v, const Matrix& basis) {
  if (basis.cols() == 0) {
    throw InvalidInput("max_abs_cosine: basis has no columns");
  }
  if (v.size() != basis.rows()) {
    throw InvalidInput("max_abs_cosine: vector length " + std::to_string(v.size()) +
                       " does not match basis dimension " + std::to_string(basis.rows()));
  }
  const double vnorm = v.norm();
  if (!(vnorm > 0.0) || !std::isfinite(vnorm)) {
    throw InvalidInput("max_abs_cosine: vector must be nonzero and finite");
  }

  CosineMatch best{-1.0, 0};
  for (Eigen::Index i = 0; i < basis.cols(); ++i) {
    const double bnorm = basis.col(i).norm();
    if (!(bnorm > 0.0)) {
      throw InvalidInput("max_abs_cosine: basis column " + std::to_string(i) + " is zero");
    }
    const double c = std::min(1.0, std::abs(v.dot(basis.col(i))) / (vnorm * bnorm));
    if (c > best.value) {
      best = {c, static_cast<std::size_t>(i)};
    }
  }
  return best;
}

double effective_rank(std::span<const double> values) {
  double total = 0.0;
  for (double s : values) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw InvalidInput("effective_rank: singular values must be finite and non-negative");
    }
    total += s;
  }
  if (!(total > 0.0)) {
    throw InvalidInput("effective_rank: at least one value must be positive");
  }
  double entropy = 0.0;
  for (double s : values) {
    if (s > 0.0) {
      const double p = s / total;
      entropy -= p * std::log(p);
    }
  }
  return std::exp(entropy);
}

double effective_rank(const Vector& values) {
  return effective_rank(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });

  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && xs[order[j]] == xs[order[i]]) {
      ++j;
    }
    // positions i..j-1 share the mean of ranks i+1..j
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      ranks[order[t]] = rank;
    }
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw InvalidInput("spearman: length mismatch (" + std::to_string(xs.size()) + " vs " +
                       std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 3) {
    throw InvalidInput("spearman: need at least 3 observations");
  }
  auto finite = [](double x) { return std::isfinite(x); };
  if (!std::all_of(xs.begin(), xs.end(), finite) || !std::all_of(ys.begin(), ys.end(), finite)) {
    throw InvalidInput("spearman: non-finite observation");
  }

  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  const double mean = 0.5 * (n + 1.0);

  double num = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double a = rx[i] - mean;
    const double b = ry[i] - mean;
    num += a * b;
    dx += a * a;
    dy += b * b;
  }
  if (dx == 0.0 || dy == 0.0) {
    throw UndefinedCorrelation("spearman: ranks have zero variance");
  }
  return std::clamp(num / std::sqrt(dx * dy), -1.0, 1.0);
}

double relative_frobenius_error(const Matrix& a, const Matrix& b) {
  const double denom = b.norm();
  const double diff = (a - b).norm();
  return denom > 0.0 ? diff / denom : diff;
}

double orthonormality_defect(const Matrix& q) {
  const Matrix gram = q.transpose() * q;
  return (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

}  // namespace intruder
