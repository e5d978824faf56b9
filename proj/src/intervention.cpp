// SPDX-License-Identifier: Apache-2.0
#include "intruder/intervention.hpp"

#include "intruder/error.hpp"

#include <cmath>
#include <string>

namespace intruder {

void LoraAdapter::validate() const {
  if (a.rows() < 1) {
    throw InvalidInput("adapter rank must be at least 1");
  }
  if (b.cols() != a.rows()) {
    throw InvalidInput("adapter inner dimensions disagree: b has " + std::to_string(b.cols()) + " columns, a has " +
                       std::to_string(a.rows()) + " rows");
  }
  if (a.rows() > std::min(b.rows(), a.cols())) {
    throw InvalidInput("adapter rank exceeds min(m, n)");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidInput("adapter alpha must be positive and finite");
  }
}

Matrix LoraAdapter::update() const {
  validate();
  return scale() * (b * a);
}

Matrix merge_adapter(const Matrix& base, const LoraAdapter& adapter) {
  adapter.validate();
  if (base.rows() != adapter.b.rows() || base.cols() != adapter.a.cols()) {
    throw InvalidInput("adapter shape " + std::to_string(adapter.b.rows()) + "x" + std::to_string(adapter.a.cols()) +
                       " does not match base " + std::to_string(base.rows()) + "x" + std::to_string(base.cols()));
  }
  return base + adapter.update();
}

Matrix scale_direction(const Matrix& tuned, std::size_t index, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidInput("lambda must be finite and non-negative");
  }
  const std::size_t p = static_cast<std::size_t>(std::min(tuned.rows(), tuned.cols()));
  if (index >= p) {
    throw InvalidInput("direction index " + std::to_string(index) + " is out of range for " + std::to_string(p) +
                       " singular values");
  }
  if (lambda == 1.0) {
    return tuned;
  }
  const SvdResult s = svd(tuned);
  const auto i = static_cast<Eigen::Index>(index);
  return tuned + ((lambda - 1.0) * s.values(i)) * (s.left.col(i) * s.right_t.row(i));
}

Matrix inject_rank_one(const Matrix& w, const Vector& v, double lambda) {
  if (w.rows() != w.cols()) {
    throw InvalidInput("inject_rank_one needs a square matrix");
  }
  if (v.size() != w.rows()) {
    throw InvalidInput("inject_rank_one: vector length does not match matrix");
  }
  if (std::abs(v.norm() - 1.0) > 1e-12) {
    throw InvalidInput("inject_rank_one: vector must have unit norm");
  }
  if (!std::isfinite(lambda)) {
    throw InvalidInput("inject_rank_one: lambda must be finite");
  }
  if (lambda == 0.0) {
    return w;
  }
  const Matrix outer = v * v.transpose();
  return w + lambda * outer;
}

ScalingPlan select_top_intruders(const ModelIntruderReport& report, double lambda) {
  ScalingPlan plan;
  for (const auto& m : report.matrices) {
    const Intruder* best = nullptr;
    for (const auto& in : m.intruders) {
      if (best == nullptr || in.sigma > best->sigma || (in.sigma == best->sigma && in.rank < best->rank)) {
        best = &in;
      }
    }
    if (best != nullptr) {
      plan[m.name] = {best->rank, lambda};
    }
  }
  return plan;
}

Checkpoint apply_plan(const Checkpoint& tuned, const ScalingPlan& plan) {
  for (const auto& [name, entry] : plan) {
    if (!tuned.contains(name)) {
      throw MismatchError("scaling plan names unknown tensor '" + name + "'");
    }
  }
  Checkpoint out = tuned;
  for (const auto& [name, entry] : plan) {
    out.set(name, scale_direction(tuned.at(name), entry.index, entry.lambda));
  }
  return out;
}

}  // namespace intruder
