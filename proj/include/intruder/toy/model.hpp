// SPDX-License-Identifier: Apache-2.0
//
// Two-layer toy network: logits = head * W2 * relu(W1 * x).
// W1 and W2 form the body, the part that is fine-tuned, saved and scanned.
// Heads are per task and never enter a checkpoint.
#pragma once

#include "intruder/checkpoint.hpp"
#include "intruder/tensor.hpp"
#include "intruder/toy/task.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace intruder::toy {

inline const std::string kLayer1Name = "body.0.weight";
inline const std::string kLayer2Name = "body.1.weight";

struct Body {
  Matrix w1;  // hidden x n_in
  Matrix w2;  // hidden x hidden

  std::size_t n_in() const noexcept { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden() const noexcept { return static_cast<std::size_t>(w1.rows()); }

  /// Checks the h x n_in, h x h shapes and finiteness.
  void validate() const;
  Checkpoint to_checkpoint() const;
  /// Throws MismatchError if a layer is missing or shaped inconsistently.
  static Body from_checkpoint(const Checkpoint& c);
};

struct Batch {
  Matrix x;  // n_in x b
  std::vector<std::size_t> y;
};

/// Body output fed to the head: W2 * relu(W1 * x).
Matrix features(const Body& body, const Matrix& x);

/// Mean softmax cross-entropy over the columns of logits.
double cross_entropy(const Matrix& logits, const std::vector<std::size_t>& labels);

/// Fraction of columns whose arg-max logit equals the label.
double accuracy(const Matrix& logits, const std::vector<std::size_t>& labels);

/// Loss gradients at one batch. For each layer, d_w is dL/dY * X^T where Y is that
/// layer's pre-activation output and X its input, i.e. the full fine-tuning gradient.
struct Gradients {
  double loss = 0.0;
  Matrix d_w1;
  Matrix d_w2;
  Matrix d_head;
};

Gradients backprop(const Body& body, const Matrix& head, const Batch& batch);

/// Multinomial logistic regression on fixed features with an L2 penalty,
/// solved by a fixed number of full-batch gradient steps from zero.
struct HeadFitConfig {
  std::size_t iterations = 300;
  double l2 = 1e-3;
};

Matrix fit_head(const Matrix& features, const std::vector<std::size_t>& labels, std::size_t classes,
                const HeadFitConfig& cfg = {});

/// Test accuracy of a head refitted on the task's training split with the body frozen.
double probe_accuracy(const Body& body, const SyntheticTask& task, const HeadFitConfig& cfg = {});

/// Synthetic stand-in for a pre-trained body: W = U diag(s) V^T per layer with
/// Haar-random U, V. The first `strong` singular values decay geometrically
/// from `top`; the rest fall linearly from `floor` to floor / 4.
struct BaseSpec {
  std::size_t n_in = 64;
  std::size_t hidden = 64;
  double top = 2.4;
  double decay = 0.97;
  std::size_t strong = 10;
  double floor = 0.7;
  std::uint64_t seed = 7;

  std::vector<double> spectrum(std::size_t p) const;
};

Body make_base(const BaseSpec& spec);

}  // namespace intruder::toy
