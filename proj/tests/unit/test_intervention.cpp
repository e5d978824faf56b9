// SPDX-License-Identifier: Apache-2.0
#include "intruder/error.hpp"
#include "intruder/intervention.hpp"
#include "intruder/spectral.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace intruder {
namespace {

Matrix diag3(double a, double b, double c) {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << a, b, c;
  return d;
}

TEST(LoraAdapter, ZeroBLeavesBase) {
  Rng rng(1);
  const Matrix base = rng.gaussian(4, 5);
  const LoraAdapter ad{Matrix::Zero(4, 2), rng.gaussian(2, 5), 8.0};
  EXPECT_TRUE(merge_adapter(base, ad) == base);
}

TEST(LoraAdapter, OuterProductArithmetic) {
  Matrix b(2, 1);
  b << 1, 0;
  Matrix a(1, 2);
  a << 0, 3;
  const LoraAdapter ad{b, a, 2.0};
  EXPECT_EQ(ad.rank(), 1u);
  EXPECT_EQ(ad.scale(), 2.0);
  Matrix expected = Matrix::Identity(2, 2);
  expected(0, 1) += 6.0;
  EXPECT_TRUE(merge_adapter(Matrix::Identity(2, 2), ad) == expected);
}

TEST(LoraAdapter, ShapeErrors) {
  const LoraAdapter ad{Matrix::Zero(3, 1), Matrix::Zero(1, 3), 2.0};
  EXPECT_THROW(merge_adapter(Matrix::Zero(3, 4), ad), InvalidInput);
  const LoraAdapter bad_inner{Matrix::Zero(3, 2), Matrix::Zero(1, 3), 2.0};
  EXPECT_THROW(bad_inner.validate(), InvalidInput);
  const LoraAdapter bad_alpha{Matrix::Zero(3, 1), Matrix::Zero(1, 3), 0.0};
  EXPECT_THROW(bad_alpha.validate(), InvalidInput);
}

TEST(LoraAdapter, MergedUpdateHasRankAtMostR) {
  Rng rng(2);
  for (std::size_t r : {1u, 3u, 6u}) {
    const auto ri = static_cast<Eigen::Index>(r);
    const LoraAdapter ad{rng.gaussian(20, ri), rng.gaussian(ri, 16), 2.0 * static_cast<double>(r)};
    const Matrix base = rng.gaussian(20, 16);
    const Vector s = svd(Matrix(merge_adapter(base, ad) - base)).values;
    EXPECT_LE(s(ri), 1e-8 * s(0));
    EXPECT_LE(effective_rank(s), static_cast<double>(r) + 1e-6);
  }
}

TEST(ScaleDirection, IdentityLambdaIsNoOp) {
  Rng rng(3);
  const Matrix m = rng.gaussian(5, 4);
  EXPECT_TRUE(scale_direction(m, 2, 1.0) == m);
}

TEST(ScaleDirection, DiagonalExamples) {
  EXPECT_TRUE(scale_direction(diag3(3, 2, 1), 0, 0.0).isApprox(diag3(0, 2, 1), 1e-12));
  EXPECT_LE((scale_direction(diag3(3, 2, 1), 0, 0.0) - diag3(0, 2, 1)).norm(), 1e-12);
  EXPECT_LE((scale_direction(diag3(3, 2, 1), 1, 2.0) - diag3(3, 4, 1)).norm(), 1e-12);
}

TEST(ScaleDirection, Errors) {
  EXPECT_THROW(scale_direction(diag3(3, 2, 1), 3, 0.5), InvalidInput);
  EXPECT_THROW(scale_direction(diag3(3, 2, 1), 0, -1.0), InvalidInput);
  EXPECT_THROW(scale_direction(diag3(3, 2, 1), 0, std::nan("")), InvalidInput);
}

TEST(ScaleDirection, RemovalZeroesOneSingularValue) {
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const Matrix m = rng.gaussian(7, 5);
    const Vector before = svd(m).values;
    const std::size_t i = rng.index(5);
    Vector expected = before;
    expected(static_cast<Eigen::Index>(i)) = 0.0;
    std::sort(expected.data(), expected.data() + expected.size(), std::greater<>());
    const Vector after = svd(scale_direction(m, i, 0.0)).values;
    EXPECT_LE((after - expected).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ScaleDirection, CommutesWithOrthogonalChangeOfBasis) {
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    const Matrix w = rng.gaussian(6, 4);
    const Matrix q = random_orthonormal_columns(rng, 6, 6);
    const Matrix p = random_orthonormal_columns(rng, 4, 4);
    const std::size_t i = rng.index(4);
    const double lambda = 3.0 * rng.uniform();
    const Matrix lhs = scale_direction(Matrix(q * w * p.transpose()), i, lambda);
    const Matrix rhs = q * scale_direction(w, i, lambda) * p.transpose();
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(InjectRankOne, Examples) {
  const Vector v = testing::uniform3();
  const Matrix w = Matrix::Identity(3, 3);
  EXPECT_TRUE(inject_rank_one(w, v, 0.0) == w);
  const SvdResult s = svd(inject_rank_one(w, v, 5.0));
  EXPECT_NEAR(s.values(0), 6.0, 1e-12);
  EXPECT_NEAR(std::abs(s.left_vector(0).dot(v)), 1.0, 1e-12);

  const SvdResult z = svd(inject_rank_one(Matrix::Zero(3, 3), Vector::Unit(3, 0), 2.0));
  EXPECT_NEAR(z.values(0), 2.0, 1e-15);
  EXPECT_NEAR(z.values(1), 0.0, 1e-15);
}

TEST(InjectRankOne, Errors) {
  EXPECT_THROW(inject_rank_one(Matrix::Zero(3, 2), Vector::Unit(3, 0), 1.0), InvalidInput);
  EXPECT_THROW(inject_rank_one(Matrix::Zero(3, 3), Vector::Ones(3), 1.0), InvalidInput);
}

TEST(InjectRankOne, PreservesSymmetry) {
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const Matrix g = rng.gaussian(8, 8);
    const Matrix sym = g + g.transpose();
    const Matrix out = inject_rank_one(sym, rng.unit_vector(8), 4.0 * rng.normal());
    EXPECT_TRUE(out == out.transpose());
  }
}

ModelIntruderReport hand_report() {
  ModelIntruderReport rep;
  rep.matrices.push_back({"a", 10, 10, {{0, 0.3, 1, 6.0}, {3, 0.2, 2, 2.0}}});
  rep.matrices.push_back({"b", 10, 10, {}});
  return rep;
}

TEST(SelectTopIntruders, PicksLargestSigma) {
  const ScalingPlan plan = select_top_intruders(hand_report(), 0.5);
  ASSERT_EQ(plan.size(), 1u);
  EXPECT_EQ(plan.at("a").index, 0u);
  EXPECT_EQ(plan.at("a").lambda, 0.5);
}

TEST(SelectTopIntruders, TieGoesToSmallerRank) {
  ModelIntruderReport rep;
  rep.matrices.push_back({"a", 10, 10, {{4, 0.3, 1, 2.0}, {2, 0.2, 2, 2.0}}});
  EXPECT_EQ(select_top_intruders(rep, 0.0).at("a").index, 2u);
}

TEST(SelectTopIntruders, EmptyReport) {
  ModelIntruderReport rep;
  rep.matrices.push_back({"a", 10, 10, {}});
  EXPECT_TRUE(select_top_intruders(rep, 0.0).empty());
}

TEST(ApplyPlan, EmptyAndIdentityPlans) {
  const CheckpointPair pair = testing::injected_pair();
  EXPECT_TRUE(apply_plan(pair.tuned, {}) == pair.tuned);
  ScalingPlan plan;
  plan["layer0.weight"] = {0, 1.0};
  EXPECT_TRUE(apply_plan(pair.tuned, plan) == pair.tuned);
}

TEST(ApplyPlan, UnknownTensor) {
  ScalingPlan plan;
  plan["nope"] = {0, 0.5};
  EXPECT_THROW(apply_plan(testing::injected_pair().tuned, plan), MismatchError);
}

TEST(ApplyPlan, RemovingInjectedDirectionClearsEditedRanks) {
  const CheckpointPair pair = testing::injected_pair(2, 1);
  const ScanConfig cfg{0.6, 10};
  const ModelIntruderReport before = scan_model(pair, cfg);
  const ScalingPlan plan = select_top_intruders(before, 0.0);
  ASSERT_EQ(plan.size(), 2u);
  const ModelIntruderReport after = scan_model(validate_pair(pair.base, apply_plan(pair.tuned, plan)), cfg);
  for (const auto& m : after.matrices) {
    if (!plan.count(m.name)) continue;
    for (const auto& in : m.intruders) EXPECT_NE(in.rank, plan.at(m.name).index) << m.name;
  }
}

TEST(ApplyPlan, DoublingScalesSigma) {
  const CheckpointPair pair = testing::injected_pair(1, 0);
  ScalingPlan plan;
  plan["layer0.weight"] = {0, 2.0};
  const Checkpoint out = apply_plan(pair.tuned, plan);
  EXPECT_NEAR(svd(out.at("layer0.weight")).values(0), 12.0, 1e-12);
}

}  // namespace
}  // namespace intruder
