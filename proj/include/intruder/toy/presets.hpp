// SPDX-License-Identifier: Apache-2.0
//
// Pinned configurations for the toy experiments. The acceptance suite, the CLI
// demo and the committed golden files all build on these values; changing any
// of them changes every downstream number.
#pragma once

#include "intruder/toy/model.hpp"
#include "intruder/toy/task.hpp"
#include "intruder/toy/trainer.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace intruder::toy::presets {

inline constexpr std::uint64_t kBaseSeed = 7;
inline constexpr std::uint64_t kTaskSeed = 101;
inline constexpr std::uint64_t kProxySeed = 202;
inline constexpr std::uint64_t kTrainSeed = 11;
inline constexpr double kLearningRate = 0.05;
inline constexpr std::size_t kSteps = 2000;

/// 64 x 64 layers, ten strong directions (2.4 * 0.97^i) above a weak tail starting at 0.7.
BaseSpec base_spec();

/// Two Gaussian clusters along random directions, margin 3, unit noise.
TaskSpec default_task(std::uint64_t seed = kTaskSeed);

/// Four classes whose means are the top four right singular vectors of the
/// base's first layer: the behavior the base is assumed to have learned.
TaskSpec proxy_task(const Body& base, std::uint64_t seed = kProxySeed);

/// Four-class tasks with independent random means, one per continual stage.
std::vector<TaskSpec> continual_tasks(std::size_t count = 3);

/// lora modes use alpha = 2r.
TrainerConfig trainer(TrainMode mode, std::size_t rank = 1, double lr = kLearningRate, std::uint64_t seed = kTrainSeed);

inline constexpr std::array<double, 4> kLearningRateGrid{0.003, 0.01, 0.03, 0.1};

}  // namespace intruder::toy::presets
