// SPDX-License-Identifier: Apache-2.0
#include "intruder/toy/presets.hpp"

#include <string>

namespace intruder::toy::presets {

BaseSpec base_spec() {
  BaseSpec spec;
  spec.n_in = 64;
  spec.hidden = 64;
  spec.top = 2.4;
  spec.decay = 0.97;
  spec.strong = 10;
  spec.floor = 0.7;
  spec.seed = kBaseSeed;
  return spec;
}

TaskSpec default_task(std::uint64_t seed) {
  TaskSpec spec;
  spec.id = "default";
  spec.n_in = 64;
  spec.classes = 2;
  spec.n_train = 512;
  spec.n_test = 512;
  spec.margin = 3.0;
  spec.noise = 1.0;
  spec.seed = seed;
  return spec;
}

TaskSpec proxy_task(const Body& base, std::uint64_t seed) {
  TaskSpec spec = default_task(seed);
  spec.id = "proxy";
  spec.n_in = base.n_in();
  spec.classes = 4;
  const SvdResult s = svd(base.w1);
  spec.mean_directions = s.right_t.topRows(static_cast<Eigen::Index>(spec.classes)).transpose();
  return spec;
}

std::vector<TaskSpec> continual_tasks(std::size_t count) {
  std::vector<TaskSpec> out;
  for (std::size_t i = 0; i < count; ++i) {
    TaskSpec spec = default_task(kTaskSeed + 100 * i);
    spec.id = "stage" + std::to_string(i);
    spec.classes = 4;
    out.push_back(std::move(spec));
  }
  return out;
}

TrainerConfig trainer(TrainMode mode, std::size_t rank, double lr, std::uint64_t seed) {
  TrainerConfig cfg;
  cfg.mode = mode;
  cfg.rank = rank;
  cfg.alpha = 2.0 * static_cast<double>(rank);
  cfg.lr = lr;
  cfg.steps = kSteps;
  cfg.batch_size = 32;
  cfg.seed = seed;
  return cfg;
}

}  // namespace intruder::toy::presets
