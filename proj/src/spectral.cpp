// SPDX-License-Identifier: Apache-2.0
#include "intruder/spectral.hpp"

#include "intruder/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace intruder {

void ScanConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw InvalidInput("epsilon must lie in (0, 1), got " + std::to_string(epsilon));
  }
  if (k < 1) {
    throw InvalidInput("k must be at least 1");
  }
}

std::size_t ModelIntruderReport::total() const noexcept {
  std::size_t sum = 0;
  for (const auto& m : matrices) {
    sum += m.n_intruders();
  }
  return sum;
}

namespace {

void require_same_shape(const Matrix& base, const Matrix& tuned) {
  if (base.rows() != tuned.rows() || base.cols() != tuned.cols()) {
    throw InvalidInput("base is " + std::to_string(base.rows()) + "x" + std::to_string(base.cols()) + " but tuned is " +
                       std::to_string(tuned.rows()) + "x" + std::to_string(tuned.cols()));
  }
}

std::size_t min_dim(const Matrix& m) { return static_cast<std::size_t>(std::min(m.rows(), m.cols())); }

void require_increasing(std::span<const double> xs, const char* what) {
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) {
      throw InvalidInput(std::string(what) + " must be strictly increasing");
    }
  }
}

}  // namespace

SpectralComparison::SpectralComparison(const Matrix& base, const Matrix& tuned, bool use_right_vectors)
    : base_(svd(base)), tuned_(svd(tuned)) {
  require_same_shape(base, tuned);
  const Matrix base_vectors = use_right_vectors ? Matrix(base_.right_t.transpose()) : base_.left;
  matches_.reserve(tuned_.size());
  for (std::size_t j = 0; j < tuned_.size(); ++j) {
    const Vector v = use_right_vectors ? tuned_.right_vector(j) : tuned_.left_vector(j);
    matches_.push_back(max_abs_cosine(v, base_vectors));
  }
}

std::vector<Intruder> SpectralComparison::intruders(double epsilon, std::size_t k) const {
  if (k > matches_.size()) {
    throw InvalidInput("k = " + std::to_string(k) + " exceeds the " + std::to_string(matches_.size()) +
                       " available singular vectors");
  }
  std::vector<Intruder> out;
  for (std::size_t j = 0; j < k; ++j) {
    if (matches_[j].value < epsilon) {
      out.push_back({j, matches_[j].value, matches_[j].index, tuned_.values(static_cast<Eigen::Index>(j))});
    }
  }
  return out;
}

std::size_t SpectralComparison::count(double epsilon, std::size_t k) const {
  if (k > matches_.size()) {
    throw InvalidInput("k exceeds the available singular vectors");
  }
  return static_cast<std::size_t>(
      std::count_if(matches_.begin(), matches_.begin() + static_cast<std::ptrdiff_t>(k),
                     [epsilon](const CosineMatch& m) { return m.value < epsilon; }));
}

MatrixIntruderReport count_intruders(const Matrix& base, const Matrix& tuned, const ScanConfig& cfg, std::string name) {
  cfg.validate();
  require_same_shape(base, tuned);
  if (cfg.k > min_dim(base)) {
    throw InvalidInput("k = " + std::to_string(cfg.k) + " exceeds min(rows, cols) = " + std::to_string(min_dim(base)));
  }
  const SpectralComparison cmp(base, tuned, cfg.use_right_vectors);
  return {std::move(name), cfg.k, cfg.k, cmp.intruders(cfg.epsilon, cfg.k)};
}

ModelIntruderReport scan_model(const CheckpointPair& pair, const ScanConfig& cfg) {
  cfg.validate();
  ModelIntruderReport report{cfg, {}};
  for (const auto& [name, base] : pair.base.entries()) {
    const Matrix& tuned = pair.tuned.at(name);
    require_same_shape(base, tuned);
    const std::size_t k = std::min(cfg.k, min_dim(base));
    const SpectralComparison cmp(base, tuned, cfg.use_right_vectors);
    report.matrices.push_back({name, cfg.k, k, cmp.intruders(cfg.epsilon, k)});
  }
  return report;
}

std::vector<SweepPoint> epsilon_sweep(const CheckpointPair& pair, std::span<const double> epsilons, std::size_t k) {
  for (double eps : epsilons) {
    ScanConfig{eps, k}.validate();
  }
  require_increasing(epsilons, "epsilons");

  std::vector<SweepPoint> out;
  for (double eps : epsilons) {
    out.push_back({eps, 0});
  }
  for (const auto& [name, base] : pair.base.entries()) {
    const SpectralComparison cmp(base, pair.tuned.at(name));
    const std::size_t kk = std::min(k, cmp.rank_count());
    for (auto& point : out) {
      point.total += cmp.count(point.parameter, kk);
    }
  }
  return out;
}

std::vector<SweepPoint> k_sweep(const CheckpointPair& pair, std::span<const std::size_t> ks, double epsilon) {
  std::vector<double> as_double;
  for (std::size_t k : ks) {
    ScanConfig{epsilon, k}.validate();
    as_double.push_back(static_cast<double>(k));
  }
  require_increasing(as_double, "ks");

  std::vector<SweepPoint> out;
  for (std::size_t k : ks) {
    out.push_back({static_cast<double>(k), 0});
  }
  for (const auto& [name, base] : pair.base.entries()) {
    const SpectralComparison cmp(base, pair.tuned.at(name));
    for (std::size_t i = 0; i < ks.size(); ++i) {
      out[i].total += cmp.count(epsilon, std::min(ks[i], cmp.rank_count()));
    }
  }
  return out;
}

SimilarityGrid similarity_grid(const Matrix& base, const Matrix& tuned, std::size_t k_base, std::size_t k_tuned,
                               std::string name) {
  require_same_shape(base, tuned);
  const std::size_t p = min_dim(base);
  if (k_base < 1 || k_tuned < 1 || k_base > p || k_tuned > p) {
    throw InvalidInput("grid sizes must lie in [1, " + std::to_string(p) + "]");
  }
  const SvdResult b = svd(base);
  const SvdResult t = svd(tuned);
  Matrix grid(static_cast<Eigen::Index>(k_base), static_cast<Eigen::Index>(k_tuned));
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    for (Eigen::Index j = 0; j < grid.cols(); ++j) {
      // singular vectors are unit length; the clamp absorbs rounding above 1
      grid(i, j) = std::min(1.0, std::abs(b.left.col(i).dot(t.left.col(j))));
    }
  }
  return {std::move(name), std::move(grid)};
}

EvolutionTrace evolution_trace(std::span<const Checkpoint> snapshots, const std::string& tensor,
                               std::span<const std::size_t> ranks, const Checkpoint& base) {
  if (snapshots.size() < 2) {
    throw InvalidInput("evolution_trace needs at least two snapshots");
  }
  const Matrix& base_m = base.at(tensor);
  const SvdResult base_svd = svd(base_m);

  EvolutionTrace trace{tensor, {ranks.begin(), ranks.end()}, {}, {}, {}};
  for (std::size_t s = 0; s < snapshots.size(); ++s) {
    if (!snapshots[s].contains(tensor)) {
      throw MismatchError("snapshot " + std::to_string(s) + " has no tensor named '" + tensor + "'");
    }
    const Matrix& m = snapshots[s].at(tensor);
    require_same_shape(base_m, m);

    std::size_t step = s;
    if (auto it = snapshots[s].metadata().find("step"); it != snapshots[s].metadata().end()) {
      try {
        step = static_cast<std::size_t>(std::stoull(it->second));
      } catch (const std::exception&) {
        throw InvalidInput("snapshot " + std::to_string(s) + " has a malformed step '" + it->second + "'");
      }
    }
    if (!trace.steps.empty() && step <= trace.steps.back()) {
      throw InvalidInput("snapshot steps must be strictly increasing");
    }
    trace.steps.push_back(step);

    const SvdResult t = svd(m);
    std::vector<double> cos_row;
    std::vector<double> sigma_row;
    for (std::size_t r : ranks) {
      if (r >= t.size()) {
        throw InvalidInput("tracked rank " + std::to_string(r) + " is out of range");
      }
      cos_row.push_back(max_abs_cosine(t.left_vector(r), base_svd.left).value);
      sigma_row.push_back(t.values(static_cast<Eigen::Index>(r)));
    }
    trace.max_cosine.push_back(std::move(cos_row));
    trace.sigma.push_back(std::move(sigma_row));
  }
  return trace;
}

double correlate(std::span<const double> totals, std::span<const double> metric) { return spearman(totals, metric); }

double correlate(std::span<const std::size_t> totals, std::span<const double> metric) {
  std::vector<double> xs(totals.begin(), totals.end());
  return spearman(xs, metric);
}

}  // namespace intruder
