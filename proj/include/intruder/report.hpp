// SPDX-License-Identifier: Apache-2.0
//
// JSON and CSV encodings of analysis results. Floating-point values are written
// in shortest round-trip form, so every encoding is a deterministic function
// of its input.
#pragma once

#include "intruder/intervention.hpp"
#include "intruder/spectral.hpp"
#include "intruder/toy/continual.hpp"
#include "intruder/toy/trainer.hpp"

#include "json.hpp"

#include <span>
#include <string>
#include <vector>

namespace intruder {

using Json = nlohmann::json;

/// Shortest decimal string that parses back to exactly x.
std::string format_double(double x);

Json to_json(const ScanConfig& cfg);
Json to_json(const MatrixIntruderReport& r);
Json to_json(const ModelIntruderReport& r);
ModelIntruderReport model_report_from_json(const Json& j);

/// Header "name,n_intruders,indices,cosines,sigmas"; list cells are ';'-separated.
std::string to_csv(const ModelIntruderReport& r);

/// parameter_name is "epsilon" or "k".
Json sweep_to_json(std::span<const SweepPoint> points, const std::string& parameter_name);
std::string sweep_to_csv(std::span<const SweepPoint> points, const std::string& parameter_name);

/// k_base rows of k_tuned comma-separated values, no header.
std::string grid_to_csv(const SimilarityGrid& grid);
Json to_json(const SimilarityGrid& grid);

/// {tensor: {"index": i, "lambda": l}}
Json plan_to_json(const ScalingPlan& plan);
ScalingPlan plan_from_json(const Json& j);

Json to_json(const EvolutionTrace& trace);

Json to_json(const toy::TrainerConfig& cfg);
toy::TrainerConfig trainer_config_from_json(const Json& j);

/// {config, task, final_accuracy, forgetting, per_step_loss[], snapshot_steps[], snapshot_paths[]}
Json run_summary(const toy::ToyRun& run, const std::vector<std::string>& snapshot_paths);

/// One row per stage: stage, then one accuracy column per task (empty cell where not yet trained).
std::string accuracy_matrix_csv(std::span<const toy::ContinualStage> stages);

}  // namespace intruder
