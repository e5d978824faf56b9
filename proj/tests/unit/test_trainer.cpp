// SPDX-License-Identifier: Apache-2.0
#include "intruder/error.hpp"
#include "intruder/rng.hpp"
#include "intruder/spectral.hpp"
#include "intruder/toy/continual.hpp"
#include "intruder/toy/presets.hpp"
#include "intruder/toy/trainer.hpp"
#include "../oracles/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace intruder::toy {
namespace {

BaseSpec small_base_spec() {
  BaseSpec s = presets::base_spec();
  s.n_in = 16;
  s.hidden = 12;
  s.strong = 4;
  return s;
}

TaskSpec small_task(std::uint64_t seed = 3, const std::string& id = "small") {
  TaskSpec t = presets::default_task(seed);
  t.id = id;
  t.n_in = 16;
  t.n_train = 128;
  t.n_test = 128;
  return t;
}

TrainerConfig small_config(TrainMode mode, std::size_t steps = 40) {
  TrainerConfig c = presets::trainer(mode, 2, 0.05, 9);
  c.steps = steps;
  c.batch_size = 16;
  return c;
}

TEST(TrainMode, ParseAndPrint) {
  for (TrainMode m : {TrainMode::full, TrainMode::lora, TrainMode::lora_freeze_a}) {
    EXPECT_EQ(parse_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_mode("adam"), InvalidInput);
}

TEST(TrainerConfig, Validation) {
  const Body b = make_base(small_base_spec());
  TrainerConfig c = small_config(TrainMode::lora);
  EXPECT_NO_THROW(c.validate(b));
  c.rank = 13;
  EXPECT_THROW(c.validate(b), InvalidInput);
  c = small_config(TrainMode::full);
  c.lr = 0.0;
  EXPECT_THROW(c.validate(b), InvalidInput);
  c = small_config(TrainMode::full);
  c.batch_size = 0;
  EXPECT_THROW(c.validate(b), InvalidInput);
}

TEST(FullStep, ZeroLearningRateLeavesWeights) {
  const Body base = make_base(small_base_spec());
  const SyntheticTask t = make_task(small_task());
  Body body = base;
  Rng rng(1);
  Matrix head = rng.gaussian(2, 12, 0.3);
  const Matrix head0 = head;
  full_step(body, head, sample_batch(t.train, 16, 1, 0), 0.0);
  EXPECT_TRUE(body.w1 == base.w1);
  EXPECT_TRUE(body.w2 == base.w2);
  EXPECT_TRUE(head == head0);
}

TEST(FullStep, SmallStepDecreasesBatchLoss) {
  const Body base = make_base(small_base_spec());
  const SyntheticTask t = make_task(small_task());
  Body body = base;
  Rng rng(2);
  Matrix head = rng.gaussian(2, 12, 0.3);
  const Batch batch = sample_batch(t.train, 32, 4, 0);
  const double before = full_step(body, head, batch, 1e-3);
  const double after = backprop(body, head, batch).loss;
  EXPECT_LT(after, before);
}

TEST(FullStep, DivergenceCarriesStep) {
  const Body base = make_base(small_base_spec());
  const SyntheticTask t = make_task(small_task());
  Body body = base;
  Matrix head = Matrix::Constant(2, 12, 1e308);
  try {
    full_step(body, head, sample_batch(t.train, 8, 1, 0), 1.0, 17);
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 17u);
  }
}

TEST(LoraStep, FreshAdaptersLeaveOutputUnchanged) {
  const Body base = make_base(small_base_spec());
  const Adapters ad = init_adapters(base, 3, 6.0, false, 1);
  const Body merged = merge(base, ad);
  EXPECT_TRUE(merged.w1 == base.w1);
  EXPECT_TRUE(merged.w2 == base.w2);
}

TEST(LoraStep, FrozenAHasUnitSingularValues) {
  const Body base = make_base(small_base_spec());
  const Adapters ad = init_adapters(base, 3, 6.0, true, 1);
  for (const auto& a : ad) {
    const Vector s = svd(a.a).values;
    for (Eigen::Index i = 0; i < s.size(); ++i) EXPECT_NEAR(s(i), 1.0, 1e-12);
  }
}

TEST(LoraStep, FirstStepLaw) {
  const Body base = make_base(small_base_spec());
  const SyntheticTask t = make_task(small_task());
  const Batch batch = sample_batch(t.train, 32, 5, 0);
  Rng rng(3);
  const Matrix head0 = rng.gaussian(2, 12, 0.3);
  const double lr = 0.05;

  Body full = base;
  Matrix head_f = head0;
  full_step(full, head_f, batch, lr);

  for (std::size_t r : {1u, 4u}) {
    for (double alpha : {8.0, 2.0 * static_cast<double>(r)}) {
      Adapters ad = init_adapters(base, r, alpha, false, 11);
      const std::array<Matrix, 2> a0{ad[0].a, ad[1].a};
      Matrix head_l = head0;
      lora_step(ad, base, head_l, batch, lr, false);
      const Body merged = merge(base, ad);
      const double s = alpha / static_cast<double>(r);
      const std::array<Matrix, 2> d_full{full.w1 - base.w1, full.w2 - base.w2};
      const std::array<Matrix, 2> d_lora{merged.w1 - base.w1, merged.w2 - base.w2};
      for (std::size_t l = 0; l < 2; ++l) {
        const Matrix predicted = s * s * d_full[l] * a0[l].transpose() * a0[l];
        EXPECT_LE(relative_frobenius_error(d_lora[l], predicted), 1e-10) << "r=" << r << " alpha=" << alpha;
        EXPECT_LE(oracle::rowspace_residual(d_lora[l], a0[l]), 1e-8);
      }
    }
  }
}

TEST(LoraStep, FreezeALeavesAUnchanged) {
  const Body base = make_base(small_base_spec());
  const SyntheticTask t = make_task(small_task());
  Adapters ad = init_adapters(base, 2, 4.0, true, 2);
  ad[0].b.setConstant(0.1);
  const Matrix a0 = ad[0].a;
  Matrix head = Rng(4).gaussian(2, 12, 0.3);
  lora_step(ad, base, head, sample_batch(t.train, 16, 2, 0), 0.1, true);
  EXPECT_TRUE(ad[0].a == a0);
}

TEST(Train, ZeroStepsGivesBaseSnapshot) {
  const Body base = make_base(small_base_spec());
  const SyntheticTask t = make_task(small_task());
  const ToyRun run = train(base.to_checkpoint(), t, small_config(TrainMode::full, 0));
  ASSERT_EQ(run.snapshots.size(), 1u);
  EXPECT_EQ(run.snapshot_steps[0], 0u);
  const Body snap = Body::from_checkpoint(run.final_snapshot());
  EXPECT_TRUE(snap.w1 == base.w1 && snap.w2 == base.w2);
  EXPECT_EQ(run.final_accuracy, probe_accuracy(base, t));
}

TEST(Train, DeterministicForSeed) {
  const Checkpoint base = make_base(small_base_spec()).to_checkpoint();
  const SyntheticTask t = make_task(small_task());
  for (TrainMode m : {TrainMode::full, TrainMode::lora, TrainMode::lora_freeze_a}) {
    const ToyRun a = train(base, t, small_config(m));
    const ToyRun b = train(base, t, small_config(m));
    EXPECT_EQ(a.per_step_loss, b.per_step_loss);
    ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
    for (std::size_t i = 0; i < a.snapshots.size(); ++i) EXPECT_TRUE(a.snapshots[i] == b.snapshots[i]);
    EXPECT_EQ(a.final_accuracy, b.final_accuracy);
    EXPECT_TRUE(a.head == b.head);
  }
}

TEST(Train, SnapshotCadenceAndMetadata) {
  const Checkpoint base = make_base(small_base_spec()).to_checkpoint();
  const SyntheticTask t = make_task(small_task());
  TrainerConfig c = small_config(TrainMode::lora, 25);
  c.snapshot_interval = 10;
  const ToyRun run = train(base, t, c);
  EXPECT_EQ(run.snapshot_steps, (std::vector<std::size_t>{0, 10, 20, 25}));
  EXPECT_EQ(run.per_step_loss.size(), 25u);
  EXPECT_EQ(run.final_snapshot().metadata().at("step"), "25");
  EXPECT_EQ(run.final_snapshot().metadata().at("mode"), "lora");
  EXPECT_EQ(run.final_snapshot().metadata().at("task"), "small");
  EXPECT_TRUE(run.adapters.has_value());
  EXPECT_TRUE(run.initial_a.has_value());
}

TEST(Train, LoraSnapshotsAreLowRankUpdates) {
  const Checkpoint base = make_base(small_base_spec()).to_checkpoint();
  const SyntheticTask t = make_task(small_task());
  const ToyRun run = train(base, t, small_config(TrainMode::lora, 60));
  for (std::size_t i = 1; i < run.snapshots.size(); ++i) {
    for (const auto& name : base.names()) {
      const Vector s = svd(Matrix(run.snapshots[i].at(name) - base.at(name))).values;
      EXPECT_LE(s(2), 1e-8 * s(0));
      EXPECT_LE(effective_rank(s), 2.0 + 1e-6);
    }
  }
}

TEST(Train, DivergenceReportsStep) {
  const Checkpoint base = make_base(small_base_spec()).to_checkpoint();
  const SyntheticTask t = make_task(small_task());
  TrainerConfig c = small_config(TrainMode::full, 50);
  c.lr = 1e6;
  try {
    (void)train(base, t, c);
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_LT(e.step(), 50u);
  }
}

TEST(Train, RejectsMismatchedTaskAndProxy) {
  const Body b = make_base(small_base_spec());
  EXPECT_THROW((void)train(b.to_checkpoint(), make_task(presets::default_task()), small_config(TrainMode::full)),
               MismatchError);
  TaskSpec p = small_task(8);
  const ForgettingProbe probe = make_forgetting_probe(b, make_task(p));
  EXPECT_THROW((void)train(b.to_checkpoint(), make_task(small_task()), small_config(TrainMode::full), &probe),
               InvalidInput);
}

TEST(Forgetting, BaseEqualsBaselineAndIsNonNegative) {
  const Body b = make_base(small_base_spec());
  TaskSpec p = small_task(8, "proxy");
  p.classes = 4;
  const ForgettingProbe probe = make_forgetting_probe(b, make_task(p));
  EXPECT_EQ(measure_forgetting(b, probe), probe.baseline);
  EXPECT_EQ(measure_forgetting(b.to_checkpoint(), probe), probe.baseline);
  EXPECT_GE(probe.baseline, 0.0);
  const ToyRun run = train(b.to_checkpoint(), make_task(small_task()), small_config(TrainMode::full, 200), &probe);
  ASSERT_TRUE(run.forgetting.has_value());
  EXPECT_GE(*run.forgetting, 0.0);
  EXPECT_LE(probe.baseline, *run.forgetting);
}

TEST(Forgetting, ShapeMismatch) {
  const Body b = make_base(small_base_spec());
  TaskSpec p = small_task(8, "proxy");
  const ForgettingProbe probe = make_forgetting_probe(b, make_task(p));
  BaseSpec other = small_base_spec();
  other.n_in = 20;
  EXPECT_THROW(measure_forgetting(make_base(other), probe), MismatchError);
}

TEST(Continual, FillsLowerTriangleAndAccumulates) {
  const Checkpoint base = make_base(small_base_spec()).to_checkpoint();
  std::vector<SyntheticTask> tasks;
  for (std::uint64_t i = 0; i < 3; ++i) tasks.push_back(make_task(small_task(20 + i, "t" + std::to_string(i))));
  const auto stages = continual_run(base, tasks, small_config(TrainMode::lora, 30), ScanConfig{0.5, 4});
  ASSERT_EQ(stages.size(), 3u);
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_EQ(stages[s].stage, s);
    ASSERT_EQ(stages[s].accuracy.size(), 3u);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(stages[s].accuracy[j].has_value(), j <= s);
  }
}

TEST(Continual, SingleTaskMatchesTrain) {
  const Checkpoint base = make_base(small_base_spec()).to_checkpoint();
  const std::vector<SyntheticTask> tasks{make_task(small_task())};
  const TrainerConfig cfg = small_config(TrainMode::full, 30);
  const auto stages = continual_run(base, tasks, cfg, ScanConfig{0.5, 4});
  ASSERT_EQ(stages.size(), 1u);
  TrainerConfig stage_cfg = cfg;
  stage_cfg.seed = Rng::derive(cfg.seed, 0);
  const ToyRun run = train(base, tasks[0], stage_cfg);
  EXPECT_EQ(*stages[0].accuracy[0], run.final_accuracy);
  EXPECT_TRUE(stages[0].body.entries() == run.final_snapshot().entries());
}

}  // namespace
}  // namespace intruder::toy
