// SPDX-License-Identifier: Apache-2.0
//
// Plain gradient-descent fine-tuning of a toy body, either directly (full) or
// through per-layer low-rank adapters W0 + (alpha / r) B A (lora), optionally
// with A frozen at orthonormal rows (lora-freeze-a).
#pragma once

#include "intruder/checkpoint.hpp"
#include "intruder/intervention.hpp"
#include "intruder/toy/model.hpp"
#include "intruder/toy/task.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace intruder::toy {

enum class TrainMode { full, lora, lora_freeze_a };

std::string_view to_string(TrainMode mode);
/// Accepts "full", "lora", "lora-freeze-a". Throws InvalidInput otherwise.
TrainMode parse_mode(std::string_view text);

struct TrainerConfig {
  TrainMode mode = TrainMode::full;
  std::size_t rank = 4;
  double alpha = 8.0;
  double lr = 0.05;
  std::size_t steps = 2000;
  std::size_t batch_size = 32;
  /// 0 means every 10% of the steps.
  std::size_t snapshot_interval = 0;
  std::uint64_t seed = 0;

  bool is_lora() const noexcept { return mode != TrainMode::full; }
  std::size_t effective_snapshot_interval() const noexcept;
  void validate(const Body& base) const;
};

/// One adapter per body layer, in layer order.
using Adapters = std::array<LoraAdapter, 2>;

/// B = 0 and A ~ N(0, 1/n_in) per layer; with freeze_a, A's rows are
/// orthonormalized so every singular value of A is exactly 1.
Adapters init_adapters(const Body& base, std::size_t rank, double alpha, bool freeze_a, std::uint64_t seed);

Body merge(const Body& base, const Adapters& adapters);

/// Per-layer adapter gradients dL/dB = s G A^T and dL/dA = s B^T G, where
/// G = dL/dY X^T is the layer's full gradient and s = alpha / r.
struct AdapterGradients {
  double loss = 0.0;
  std::array<Matrix, 2> d_b;
  std::array<Matrix, 2> d_a;
  Matrix d_head;
};

AdapterGradients lora_backprop(const Body& base, const Adapters& adapters, const Matrix& head, const Batch& batch);

/// W <- W - lr * G for both layers and the head. Returns the pre-step loss.
/// Throws DivergenceError (tagged with `step`) if the loss or weights become non-finite.
double full_step(Body& body, Matrix& head, const Batch& batch, double lr, std::size_t step = 0);

/// Simultaneous B and A update from gradients at the pre-step values; A is
/// left untouched when freeze_a is set. The base is never modified.
double lora_step(Adapters& adapters, const Body& base, Matrix& head, const Batch& batch, double lr, bool freeze_a,
                 std::size_t step = 0);

/// Head fitted once on the base body for a held-out proxy task, and its loss there.
struct ForgettingProbe {
  SyntheticTask proxy;
  Matrix head;
  double baseline = 0.0;
};

ForgettingProbe make_forgetting_probe(const Body& base, SyntheticTask proxy, const HeadFitConfig& cfg = {});

/// Proxy-task test cross-entropy of the snapshot's body under the frozen probe head.
double measure_forgetting(const Checkpoint& snapshot, const ForgettingProbe& probe);
double measure_forgetting(const Body& body, const ForgettingProbe& probe);

struct ToyRun {
  TrainerConfig config;
  std::string task_id;
  std::vector<double> per_step_loss;
  std::vector<std::size_t> snapshot_steps;
  /// Body weights (merged for lora modes) at step 0, every interval, and the final step.
  std::vector<Checkpoint> snapshots;
  double final_accuracy = 0.0;
  std::optional<double> forgetting;
  Matrix head;
  std::optional<Adapters> adapters;
  /// Adapter A matrices at initialization, kept for rowspace checks.
  std::optional<std::array<Matrix, 2>> initial_a;

  const Checkpoint& final_snapshot() const { return snapshots.back(); }
};

/// Deterministic in (base, task, cfg). Snapshot metadata carries "step", "mode"
/// and "task". final_accuracy is probe_accuracy of the final body.
ToyRun train(const Checkpoint& base, const SyntheticTask& task, const TrainerConfig& cfg,
             const ForgettingProbe* probe = nullptr);

/// The seeded minibatch drawn at a given step (sampling with replacement).
Batch sample_batch(const Dataset& data, std::size_t batch_size, std::uint64_t seed, std::size_t step);

}  // namespace intruder::toy
