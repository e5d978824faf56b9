// SPDX-License-Identifier: Apache-2.0
#include "intruder/toy/model.hpp"

#include "intruder/error.hpp"
#include "intruder/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace intruder::toy {

void Body::validate() const {
  if (w1.rows() == 0 || w1.cols() == 0 || w2.rows() != w1.rows() || w2.cols() != w1.rows()) {
    throw MismatchError("body layers must be hidden x n_in and hidden x hidden");
  }
  require_finite(w1, kLayer1Name);
  require_finite(w2, kLayer2Name);
}

Checkpoint Body::to_checkpoint() const {
  Checkpoint c;
  c.set(kLayer1Name, w1);
  c.set(kLayer2Name, w2);
  return c;
}

Body Body::from_checkpoint(const Checkpoint& c) {
  Body b{c.at(kLayer1Name), c.at(kLayer2Name)};
  b.validate();
  return b;
}

Matrix features(const Body& body, const Matrix& x) {
  if (x.rows() != body.w1.cols()) {
    throw MismatchError("input dimension " + std::to_string(x.rows()) + " does not match body n_in " +
                        std::to_string(body.w1.cols()));
  }
  const Matrix h1 = (body.w1 * x).cwiseMax(0.0);
  return body.w2 * h1;
}

namespace {

// Column-wise softmax with the max subtracted for stability.
Matrix softmax_columns(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      p(i, j) = std::exp(logits(i, j) - mx);
      sum += p(i, j);
    }
    p.col(j) /= sum;
  }
  return p;
}

void check_labels(const Matrix& logits, const std::vector<std::size_t>& labels) {
  if (static_cast<std::size_t>(logits.cols()) != labels.size()) {
    throw MismatchError("label count does not match batch size");
  }
  for (std::size_t y : labels) {
    if (y >= static_cast<std::size_t>(logits.rows())) {
      throw MismatchError("label " + std::to_string(y) + " exceeds head class count");
    }
  }
}

// (softmax(logits) - onehot(labels)) / batch
Matrix logit_gradient(const Matrix& logits, const std::vector<std::size_t>& labels) {
  Matrix g = softmax_columns(logits);
  for (std::size_t j = 0; j < labels.size(); ++j) {
    g(static_cast<Eigen::Index>(labels[j]), static_cast<Eigen::Index>(j)) -= 1.0;
  }
  return g / static_cast<double>(labels.size());
}

}  // namespace

double cross_entropy(const Matrix& logits, const std::vector<std::size_t>& labels) {
  check_labels(logits, labels);
  if (labels.empty()) {
    throw InvalidInput("cross_entropy of an empty batch");
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    const double lse = mx + std::log((logits.col(j).array() - mx).exp().sum());
    total += lse - logits(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(j)]), j);
  }
  return total / static_cast<double>(labels.size());
}

double accuracy(const Matrix& logits, const std::vector<std::size_t>& labels) {
  check_labels(logits, labels);
  if (labels.empty()) {
    throw InvalidInput("accuracy of an empty batch");
  }
  std::size_t hits = 0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    Eigen::Index best = 0;
    logits.col(j).maxCoeff(&best);
    hits += static_cast<std::size_t>(best) == labels[static_cast<std::size_t>(j)] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

Gradients backprop(const Body& body, const Matrix& head, const Batch& batch) {
  if (head.cols() != body.w2.rows()) {
    throw MismatchError("head width does not match body hidden size");
  }
  const Matrix z1 = body.w1 * batch.x;
  const Matrix h1 = z1.cwiseMax(0.0);
  const Matrix f = body.w2 * h1;
  const Matrix logits = head * f;

  Gradients g;
  g.loss = cross_entropy(logits, batch.y);
  const Matrix d_logits = logit_gradient(logits, batch.y);
  g.d_head = d_logits * f.transpose();
  const Matrix d_f = head.transpose() * d_logits;
  g.d_w2 = d_f * h1.transpose();
  Matrix d_z1 = body.w2.transpose() * d_f;
  for (Eigen::Index i = 0; i < d_z1.size(); ++i) {
    if (!(z1.data()[i] > 0.0)) d_z1.data()[i] = 0.0;
  }
  g.d_w1 = d_z1 * batch.x.transpose();
  return g;
}

Matrix fit_head(const Matrix& f, const std::vector<std::size_t>& labels, std::size_t classes,
                const HeadFitConfig& cfg) {
  if (static_cast<std::size_t>(f.cols()) != labels.size() || labels.empty()) {
    throw MismatchError("fit_head: feature count does not match label count");
  }
  require_finite(f, "fit_head features");
  const double n = static_cast<double>(labels.size());
  // softmax cross-entropy has Hessian bounded by 1/2 * F F^T / n, so 1/L is a safe step
  const double top = svd(f).values(0);
  const double lipschitz = 0.5 * top * top / n + cfg.l2;
  const double step = 1.0 / lipschitz;

  Matrix head = Matrix::Zero(static_cast<Eigen::Index>(classes), f.rows());
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const Matrix logits = head * f;
    Matrix grad = logit_gradient(logits, labels) * f.transpose();
    grad += cfg.l2 * head;
    head -= step * grad;
  }
  return head;
}

double probe_accuracy(const Body& body, const SyntheticTask& task, const HeadFitConfig& cfg) {
  const Matrix head = fit_head(features(body, task.train.x), task.train.y, task.spec.classes, cfg);
  return accuracy(head * features(body, task.test.x), task.test.y);
}

std::vector<double> BaseSpec::spectrum(std::size_t p) const {
  std::vector<double> s(p);
  const std::size_t head = std::min(strong, p);
  for (std::size_t i = 0; i < head; ++i) {
    s[i] = top * std::pow(decay, static_cast<double>(i));
  }
  for (std::size_t i = head; i < p; ++i) {
    const double t = p - head > 1 ? static_cast<double>(i - head) / static_cast<double>(p - head - 1) : 0.0;
    s[i] = floor * (1.0 - 0.75 * t);
  }
  return s;
}

Body make_base(const BaseSpec& spec) {
  if (spec.n_in == 0 || spec.hidden == 0 || !(spec.top > 0.0) || !(spec.decay > 0.0 && spec.decay <= 1.0) ||
      !(spec.floor >= 0.0)) {
    throw InvalidInput("invalid base spec");
  }
  Rng rng(spec.seed);
  auto layer = [&](Eigen::Index rows, Eigen::Index cols) {
    const Eigen::Index p = std::min(rows, cols);
    const Matrix u = random_orthonormal_columns(rng, rows, p);
    const Matrix v = random_orthonormal_columns(rng, cols, p);
    const auto values = spec.spectrum(static_cast<std::size_t>(p));
    const Vector s = Eigen::Map<const Vector>(values.data(), p);
    return Matrix(u * s.asDiagonal() * v.transpose());
  };
  const auto h = static_cast<Eigen::Index>(spec.hidden);
  Body body;
  body.w1 = layer(h, static_cast<Eigen::Index>(spec.n_in));
  body.w2 = layer(h, h);
  return body;
}

}  // namespace intruder::toy
