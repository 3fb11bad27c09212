#pragma once

// Seeded random generation of algebra elements, unitaries and ball points.
//
// Draws are built from raw mt19937_64 output (no std:: distributions), so a
// given seed produces the same values with every standard library.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

#include "qloewner/algebra.hpp"

namespace qloewner {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  cplx complex_normal() { return {normal() / std::numbers::sqrt2, normal() / std::numbers::sqrt2}; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Derives an independent seed for a named sub-stream.
inline std::uint64_t stream_seed(std::uint64_t base, std::string_view name) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::uint64_t x = base ^ (h + 0x9e3779b97f4a7c15ull + (base << 6) + (base >> 2));
  // splitmix64 finalizer
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline CMatrix random_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.complex_normal();
  return m;
}

/// Haar-distributed unitary of size n (QR with phase correction).
inline CMatrix random_unitary_matrix(Eigen::Index n, Rng& rng) {
  const CMatrix g = random_gaussian(n, n, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    const cplx d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

inline AlgElem random_element(const AlgebraShape& shape, Rng& rng, double scale = 1.0) {
  std::vector<CMatrix> blocks;
  for (int n : shape.block_dims()) blocks.push_back(scale * random_gaussian(n, n, rng));
  return AlgElem(shape, std::move(blocks));
}

inline MatElem random_matrix_element(const AlgebraShape& shape, int level, Rng& rng, double scale = 1.0) {
  std::vector<CMatrix> blocks;
  for (int n : shape.block_dims()) blocks.push_back(scale * random_gaussian(level * n, level * n, rng));
  return MatElem(shape, level, std::move(blocks));
}

inline AlgElem random_unitary(const AlgebraShape& shape, Rng& rng) {
  std::vector<CMatrix> blocks;
  for (int n : shape.block_dims()) blocks.push_back(random_unitary_matrix(n, rng));
  return AlgElem(shape, std::move(blocks));
}

inline MatElem random_unitary(const AlgebraShape& shape, int level, Rng& rng) {
  std::vector<CMatrix> blocks;
  for (int n : shape.block_dims()) blocks.push_back(random_unitary_matrix(level * n, rng));
  return MatElem(shape, level, std::move(blocks));
}

/// Scales a random direction to a given norm.
inline MatElem random_sphere_point(const AlgebraShape& shape, int level, double radius, Rng& rng) {
  MatElem z = random_matrix_element(shape, level, rng);
  const double n = operator_norm(z);
  return (radius / n) * z;
}

/// Random point with norm uniform in (0, max_norm].
inline MatElem random_ball_point(const AlgebraShape& shape, int level, double max_norm, Rng& rng) {
  const double r = max_norm * (1.0 - rng.uniform());
  return random_sphere_point(shape, level, r, rng);
}

/// a = x + i y with x = c*c + eps*1, so Re(a) >= eps.
template <BlockLike T>
T random_positive_real_part(const T& like, Rng& rng, double eps = 0.1) {
  std::vector<CMatrix> blocks;
  for (const auto& b : like.blocks()) {
    const auto n = b.rows();
    const CMatrix c = random_gaussian(n, n, rng) / std::sqrt(static_cast<double>(n));
    const CMatrix g = random_gaussian(n, n, rng);
    const CMatrix y = (g + g.adjoint()) * 0.5;
    blocks.push_back(c.adjoint() * c + eps * CMatrix::Identity(n, n) + cplx(0, 1) * y);
  }
  return like.with_blocks(std::move(blocks));
}

}  // namespace qloewner
