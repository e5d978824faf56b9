// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations shared by the unit and acceptance suites.
#pragma once

#include "intruder/tensor.hpp"
#include "intruder/toy/model.hpp"
#include "intruder/toy/task.hpp"
#include "intruder/toy/trainer.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace intruder::oracle {

/// Rank of each entry: 1 + (# strictly smaller) + (# equal others) / 2.
inline std::vector<double> ranks(const std::vector<double>& xs) {
  std::vector<double> r(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double less = 0.0;
    double equal = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (xs[j] < xs[i]) less += 1.0;
      if (j != i && xs[j] == xs[i]) equal += 1.0;
    }
    r[i] = 1.0 + less + equal / 2.0;
  }
  return r;
}

/// Spearman's rho of a permutation against the identity, 1 - 6 sum d^2 / (n (n^2 - 1)).
inline double permutation_rho(const std::vector<double>& perm) {
  long long d2 = 0;
  const auto n = static_cast<long long>(perm.size());
  for (long long i = 0; i < n; ++i) {
    const long long d = (i + 1) - static_cast<long long>(perm[static_cast<std::size_t>(i)]);
    d2 += d * d;
  }
  const long long den = n * (n * n - 1);
  return static_cast<double>(den - 6 * d2) / static_cast<double>(den);
}

/// Central finite-difference gradient of f with respect to every entry of m.
inline Matrix central_difference(Matrix& m, const std::function<double()>& f, double h = 1e-6) {
  Matrix g(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double keep = m.data()[i];
    m.data()[i] = keep + h;
    const double up = f();
    m.data()[i] = keep - h;
    const double down = f();
    m.data()[i] = keep;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max |a - b| / max(|b|_max, floor)
inline double relative_gap(const Matrix& a, const Matrix& b, double floor = 1e-8) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), floor);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Loss of the two-layer body under a fixed head, written out without the library's backprop.
inline double micro_loss(const Matrix& w1, const Matrix& w2, const Matrix& head, const toy::Batch& batch) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < batch.x.cols(); ++j) {
    const Vector h1 = (w1 * batch.x.col(j)).cwiseMax(0.0);
    const Vector logits = head * (w2 * h1);
    const double mx = logits.maxCoeff();
    double z = 0.0;
    for (Eigen::Index c = 0; c < logits.size(); ++c) z += std::exp(logits(c) - mx);
    total += mx + std::log(z) - logits(static_cast<Eigen::Index>(batch.y[static_cast<std::size_t>(j)]));
  }
  return total / static_cast<double>(batch.x.cols());
}

/// Test accuracy of a least-squares linear probe with bias on raw inputs, one-vs-rest targets.
inline double least_squares_probe_accuracy(const toy::SyntheticTask& task) {
  const auto classes = static_cast<Eigen::Index>(task.spec.classes);
  auto design = [](const Matrix& x) {
    Eigen::MatrixXd d(x.cols(), x.rows() + 1);
    d.leftCols(x.rows()) = x.transpose();
    d.col(x.rows()).setOnes();
    return d;
  };
  const Eigen::MatrixXd a = design(task.train.x);
  Eigen::MatrixXd t = Eigen::MatrixXd::Constant(a.rows(), classes, -1.0);
  for (std::size_t i = 0; i < task.train.y.size(); ++i) {
    t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(task.train.y[i])) = 1.0;
  }
  const Eigen::MatrixXd w = a.colPivHouseholderQr().solve(t);
  const Eigen::MatrixXd scores = design(task.test.x) * w;
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    scores.row(i).maxCoeff(&best);
    hits += static_cast<std::size_t>(best) == task.test.y[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.rows());
}

/// Test accuracy of the nearest-class-mean rule using the task's true means,
/// which is Bayes-optimal for equal isotropic class noise.
inline double bayes_accuracy(const toy::SyntheticTask& task) {
  std::size_t hits = 0;
  for (Eigen::Index j = 0; j < task.test.x.cols(); ++j) {
    Eigen::Index best = 0;
    double best_d = INFINITY;
    for (Eigen::Index c = 0; c < task.means.cols(); ++c) {
      const double d = (task.test.x.col(j) - task.means.col(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    hits += static_cast<std::size_t>(best) == task.test.y[static_cast<std::size_t>(j)] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(task.test.x.cols());
}

/// Relative residual of the rows of m after projection onto the row space of a.
inline double rowspace_residual(const Matrix& m, const Matrix& a) {
  const Eigen::MatrixXd q = Eigen::MatrixXd(a.transpose()).householderQr().householderQ() *
                            Eigen::MatrixXd::Identity(a.cols(), a.rows());
  const Eigen::MatrixXd md = m;
  const Eigen::MatrixXd resid = md - md * q * q.transpose();
  const double denom = md.norm();
  return denom > 0.0 ? resid.norm() / denom : resid.norm();
}

}  // namespace intruder::oracle
