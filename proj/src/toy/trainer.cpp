// SPDX-License-Identifier: Apache-2.0
#include "intruder/toy/trainer.hpp"

#include "intruder/error.hpp"
#include "intruder/rng.hpp"

#include <cmath>
#include <string>

namespace intruder::toy {

std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::full:
      return "full";
    case TrainMode::lora:
      return "lora";
    case TrainMode::lora_freeze_a:
      return "lora-freeze-a";
  }
  return "unknown";
}

TrainMode parse_mode(std::string_view text) {
  if (text == "full") return TrainMode::full;
  if (text == "lora") return TrainMode::lora;
  if (text == "lora-freeze-a") return TrainMode::lora_freeze_a;
  throw InvalidInput("unknown trainer mode '" + std::string(text) + "' (expected full, lora or lora-freeze-a)");
}

std::size_t TrainerConfig::effective_snapshot_interval() const noexcept {
  if (snapshot_interval > 0) return snapshot_interval;
  return steps >= 10 ? steps / 10 : 1;
}

void TrainerConfig::validate(const Body& base) const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidInput("learning rate must be positive");
  if (batch_size == 0) throw InvalidInput("batch size must be positive");
  if (is_lora()) {
    if (rank < 1) throw InvalidInput("lora rank must be at least 1");
    if (rank > std::min(base.n_in(), base.hidden())) throw InvalidInput("lora rank exceeds layer dimensions");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidInput("alpha must be positive");
  }
}

Adapters init_adapters(const Body& base, std::size_t rank, double alpha, bool freeze_a, std::uint64_t seed) {
  Rng rng(seed);
  const auto r = static_cast<Eigen::Index>(rank);
  auto make = [&](const Matrix& w) {
    const double stddev = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    Matrix a = rng.gaussian(r, w.cols(), stddev);
    if (freeze_a) a = orthonormalize_rows(a);
    LoraAdapter ad{Matrix::Zero(w.rows(), r), std::move(a), alpha};
    ad.validate();
    return ad;
  };
  Adapters out{make(base.w1), make(base.w2)};
  return out;
}

Body merge(const Body& base, const Adapters& adapters) {
  return {merge_adapter(base.w1, adapters[0]), merge_adapter(base.w2, adapters[1])};
}

AdapterGradients lora_backprop(const Body& base, const Adapters& adapters, const Matrix& head, const Batch& batch) {
  const Gradients full = backprop(merge(base, adapters), head, batch);
  AdapterGradients g;
  g.loss = full.loss;
  g.d_head = full.d_head;
  const std::array<const Matrix*, 2> layer_grads{&full.d_w1, &full.d_w2};
  for (std::size_t l = 0; l < 2; ++l) {
    const LoraAdapter& ad = adapters[l];
    const double s = ad.scale();
    g.d_b[l] = s * (*layer_grads[l] * ad.a.transpose());
    g.d_a[l] = s * (ad.b.transpose() * *layer_grads[l]);
  }
  return g;
}

namespace {

void check_step(double loss, std::size_t step) {
  if (!std::isfinite(loss)) {
    throw DivergenceError("training diverged at step " + std::to_string(step) + " (non-finite loss)", step);
  }
}

void check_weights(const Matrix& m, std::size_t step) {
  if (!all_finite(m)) {
    throw DivergenceError("training diverged at step " + std::to_string(step) + " (non-finite weights)", step);
  }
}

}  // namespace

double full_step(Body& body, Matrix& head, const Batch& batch, double lr, std::size_t step) {
  const Gradients g = backprop(body, head, batch);
  check_step(g.loss, step);
  body.w1 -= lr * g.d_w1;
  body.w2 -= lr * g.d_w2;
  head -= lr * g.d_head;
  check_weights(body.w1, step);
  check_weights(body.w2, step);
  check_weights(head, step);
  return g.loss;
}

double lora_step(Adapters& adapters, const Body& base, Matrix& head, const Batch& batch, double lr, bool freeze_a,
                 std::size_t step) {
  const AdapterGradients g = lora_backprop(base, adapters, head, batch);
  check_step(g.loss, step);
  for (std::size_t l = 0; l < 2; ++l) {
    adapters[l].b -= lr * g.d_b[l];
    if (!freeze_a) adapters[l].a -= lr * g.d_a[l];
    check_weights(adapters[l].b, step);
    check_weights(adapters[l].a, step);
  }
  head -= lr * g.d_head;
  check_weights(head, step);
  return g.loss;
}

ForgettingProbe make_forgetting_probe(const Body& base, SyntheticTask proxy, const HeadFitConfig& cfg) {
  ForgettingProbe probe{std::move(proxy), {}, 0.0};
  probe.head = fit_head(features(base, probe.proxy.train.x), probe.proxy.train.y, probe.proxy.spec.classes, cfg);
  probe.baseline = measure_forgetting(base, probe);
  return probe;
}

double measure_forgetting(const Body& body, const ForgettingProbe& probe) {
  return cross_entropy(probe.head * features(body, probe.proxy.test.x), probe.proxy.test.y);
}

double measure_forgetting(const Checkpoint& snapshot, const ForgettingProbe& probe) {
  return measure_forgetting(Body::from_checkpoint(snapshot), probe);
}

Batch sample_batch(const Dataset& data, std::size_t batch_size, std::uint64_t seed, std::size_t step) {
  Rng rng(Rng::derive(seed, step));
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = rng.index(data.size());
  Dataset d = gather(data, idx);
  return {std::move(d.x), std::move(d.y)};
}

ToyRun train(const Checkpoint& base_ckpt, const SyntheticTask& task, const TrainerConfig& cfg,
             const ForgettingProbe* probe) {
  const Body base = Body::from_checkpoint(base_ckpt);
  cfg.validate(base);
  if (task.spec.n_in != base.n_in()) {
    throw MismatchError("task input dimension does not match the body");
  }
  if (probe != nullptr && probe->proxy.spec.id == task.spec.id) {
    throw InvalidInput("forgetting proxy must differ from the training task");
  }

  ToyRun run;
  run.config = cfg;
  run.task_id = task.spec.id;
  run.per_step_loss.reserve(cfg.steps);

  Rng head_rng(Rng::derive(cfg.seed, 0));
  run.head = head_rng.gaussian(static_cast<Eigen::Index>(task.spec.classes), static_cast<Eigen::Index>(base.hidden()),
                               1.0 / std::sqrt(static_cast<double>(base.hidden())));
  const std::uint64_t batch_seed = Rng::derive(cfg.seed, 2);
  const bool freeze_a = cfg.mode == TrainMode::lora_freeze_a;

  Body body = base;
  Adapters adapters;
  if (cfg.is_lora()) {
    adapters = init_adapters(base, cfg.rank, cfg.alpha, freeze_a, Rng::derive(cfg.seed, 1));
    run.initial_a = std::array<Matrix, 2>{adapters[0].a, adapters[1].a};
  }

  auto snapshot = [&](std::size_t step) {
    Checkpoint c = (cfg.is_lora() ? merge(base, adapters) : body).to_checkpoint();
    c.metadata() = {{"step", std::to_string(step)}, {"mode", std::string(to_string(cfg.mode))}, {"task", task.spec.id}};
    run.snapshot_steps.push_back(step);
    run.snapshots.push_back(std::move(c));
  };

  const std::size_t interval = cfg.effective_snapshot_interval();
  snapshot(0);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const Batch batch = sample_batch(task.train, cfg.batch_size, batch_seed, step);
    const double loss = cfg.is_lora() ? lora_step(adapters, base, run.head, batch, cfg.lr, freeze_a, step)
                                      : full_step(body, run.head, batch, cfg.lr, step);
    run.per_step_loss.push_back(loss);
    const std::size_t done = step + 1;
    if (done % interval == 0 || done == cfg.steps) {
      snapshot(done);
    }
  }

  if (cfg.is_lora()) run.adapters = adapters;
  const Body final_body = Body::from_checkpoint(run.final_snapshot());
  run.final_accuracy = probe_accuracy(final_body, task);
  if (probe != nullptr) run.forgetting = measure_forgetting(final_body, *probe);
  return run;
}

}  // namespace intruder::toy
