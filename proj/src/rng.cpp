// SPDX-License-Identifier: Apache-2.0
#include "intruder/rng.hpp"

#include "intruder/error.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace intruder {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t Rng::index(std::size_t n) {
  if (n == 0) {
    throw InvalidInput("Rng::index: empty range");
  }
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  // reject the tail that would bias the modulo
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = engine_();
  while (x >= limit) {
    x = engine_();
  }
  return static_cast<std::size_t>(x % bound);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  double v = 0.0;
  double s = 0.0;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * scale;
  has_spare_ = true;
  return u * scale;
}

Matrix Rng::gaussian(Eigen::Index rows, Eigen::Index cols, double stddev) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = stddev * normal();
  }
  return m;
}

Vector Rng::unit_vector(Eigen::Index n) {
  Vector v(n);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < n; ++i) {
      v(i) = normal();
    }
    norm = v.norm();
  } while (!(norm > 0.0));
  return v / norm;
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::swap(p[i - 1], p[index(i)]);
  }
  return p;
}

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Matrix orthonormalize_rows(const Matrix& m) {
  Matrix q = m;
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < i; ++j) {
        q.row(i) -= q.row(i).dot(q.row(j)) * q.row(j);
      }
    }
    const double norm = q.row(i).norm();
    if (!(norm > 1e-12)) {
      throw InvalidInput("orthonormalize_rows: rows are linearly dependent");
    }
    q.row(i) /= norm;
  }
  return q;
}

Matrix random_orthonormal_columns(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  if (cols > rows) {
    throw InvalidInput("random_orthonormal_columns: more columns than rows");
  }
  return orthonormalize_rows(rng.gaussian(cols, rows)).transpose();
}

}  // namespace intruder
