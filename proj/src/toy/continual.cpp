// SPDX-License-Identifier: Apache-2.0
#include "intruder/toy/continual.hpp"

#include "intruder/error.hpp"
#include "intruder/rng.hpp"

#include <string>

namespace intruder::toy {

std::vector<ContinualStage> continual_run(const Checkpoint& base, std::span<const SyntheticTask> tasks,
                                          const TrainerConfig& cfg, const ScanConfig& scan) {
  if (tasks.empty()) {
    throw InvalidInput("continual_run needs at least one task");
  }
  std::vector<ContinualStage> stages;
  Checkpoint current = base;
  for (std::size_t s = 0; s < tasks.size(); ++s) {
    TrainerConfig stage_cfg = cfg;
    stage_cfg.seed = Rng::derive(cfg.seed, s);
    const ToyRun run = train(current, tasks[s], stage_cfg);

    ContinualStage stage;
    stage.stage = s;
    stage.body = run.final_snapshot();
    stage.body.metadata()["stage"] = std::to_string(s);
    stage.final_loss = run.per_step_loss.empty() ? 0.0 : run.per_step_loss.back();

    const Body body = Body::from_checkpoint(stage.body);
    stage.accuracy.assign(tasks.size(), std::nullopt);
    for (std::size_t j = 0; j <= s; ++j) {
      stage.accuracy[j] = j == s ? run.final_accuracy : probe_accuracy(body, tasks[j]);
    }
    stage.intruder_total = scan_model(validate_pair(base, stage.body), scan).total();

    current = stage.body;
    stages.push_back(std::move(stage));
  }
  return stages;
}

}  // namespace intruder::toy
