// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "intruder/checkpoint.hpp"
#include "intruder/spectral.hpp"
#include "intruder/toy/task.hpp"
#include "intruder/toy/trainer.hpp"

#include <optional>
#include <span>
#include <vector>

namespace intruder::toy {

struct ContinualStage {
  std::size_t stage = 0;
  Checkpoint body;
  /// accuracy[j] for every task j <= stage, head refitted per task on the frozen body; empty beyond.
  std::vector<std::optional<double>> accuracy;
  /// Intruder total of this stage's body against the original base.
  std::size_t intruder_total = 0;
  double final_loss = 0.0;
};

/// Trains on the tasks in order. Each stage starts from the previous stage's
/// merged body with fresh adapters (seeded per stage), so lora updates are
/// merged and reinitialized between tasks.
std::vector<ContinualStage> continual_run(const Checkpoint& base, std::span<const SyntheticTask> tasks,
                                          const TrainerConfig& cfg, const ScanConfig& scan = {});

}  // namespace intruder::toy
