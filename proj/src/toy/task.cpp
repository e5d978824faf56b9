// SPDX-License-Identifier: Apache-2.0
#include "intruder/toy/task.hpp"

#include "intruder/error.hpp"
#include "intruder/rng.hpp"

#include <cmath>
#include <string>

namespace intruder::toy {

void TaskSpec::validate() const {
  if (n_in == 0) throw InvalidInput("task '" + id + "': n_in must be positive");
  if (classes < 2) throw InvalidInput("task '" + id + "': need at least two classes");
  if (n_train == 0 || n_test == 0) throw InvalidInput("task '" + id + "': sample counts must be positive");
  if (classes > n_in && mean_directions.size() == 0) {
    throw InvalidInput("task '" + id + "': more classes than input dimensions");
  }
  if (!(noise > 0.0) || !std::isfinite(noise)) throw InvalidInput("task '" + id + "': noise must be positive");
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw InvalidInput("task '" + id + "': margin must be non-negative");
  if (mean_directions.size() != 0) {
    if (mean_directions.rows() != static_cast<Eigen::Index>(n_in) ||
        mean_directions.cols() != static_cast<Eigen::Index>(classes)) {
      throw InvalidInput("task '" + id + "': mean_directions must be n_in x classes");
    }
    require_finite(mean_directions, "task mean_directions");
    for (Eigen::Index c = 0; c < mean_directions.cols(); ++c) {
      if (!(mean_directions.col(c).norm() > 0.0)) throw InvalidInput("task '" + id + "': zero mean direction");
    }
  }
}

SyntheticTask make_task(const TaskSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  const auto n_in = static_cast<Eigen::Index>(spec.n_in);
  const auto classes = static_cast<Eigen::Index>(spec.classes);
  Matrix dirs = spec.mean_directions.size() != 0 ? spec.mean_directions
                                                 : random_orthonormal_columns(rng, n_in, classes);
  for (Eigen::Index c = 0; c < classes; ++c) {
    dirs.col(c).normalize();
  }
  const Matrix means = spec.margin * dirs;

  const std::size_t total = spec.n_train + spec.n_test;
  const auto order = rng.permutation(total);
  Dataset all{Matrix(n_in, static_cast<Eigen::Index>(total)), std::vector<std::size_t>(total)};
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t label = order[i] % spec.classes;
    all.y[i] = label;
    for (Eigen::Index r = 0; r < n_in; ++r) {
      all.x(r, static_cast<Eigen::Index>(i)) = means(r, static_cast<Eigen::Index>(label)) + spec.noise * rng.normal();
    }
  }

  SyntheticTask task{spec, means, {}, {}};
  std::vector<std::size_t> train_idx(spec.n_train);
  std::vector<std::size_t> test_idx(spec.n_test);
  for (std::size_t i = 0; i < spec.n_train; ++i) train_idx[i] = i;
  for (std::size_t i = 0; i < spec.n_test; ++i) test_idx[i] = spec.n_train + i;
  task.train = gather(all, train_idx);
  task.test = gather(all, test_idx);
  return task;
}

Dataset gather(const Dataset& d, const std::vector<std::size_t>& indices) {
  Dataset out{Matrix(d.x.rows(), static_cast<Eigen::Index>(indices.size())), {}};
  out.y.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.x.col(static_cast<Eigen::Index>(i)) = d.x.col(static_cast<Eigen::Index>(indices[i]));
    out.y.push_back(d.y[indices[i]]);
  }
  return out;
}

}  // namespace intruder::toy
