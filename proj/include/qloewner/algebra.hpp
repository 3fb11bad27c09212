#pragma once

// Finite-dimensional C*-algebras B = C^{n1 x n1} (+) ... (+) C^{nq x nq},
// their elements, and the matrix algebras B^{m x m} over them.
//
// An element of B^{m x m} is stored flattened: block i is the (m*n_i) x (m*n_i)
// complex matrix whose (j, k) sub-block of size n_i is block i of entry b_jk.
// All arithmetic, norms and spectra are computed on these flattened blocks.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "qloewner/errors.hpp"

namespace qloewner {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Default threshold for positivity and self-adjointness tests.
inline constexpr double kDefaultTol = 1e-10;
/// Inversion is refused below this reciprocal condition estimate.
inline constexpr double kMinRcond = 1e-13;

class AlgebraShape {
 public:
  AlgebraShape() : dims_{1} {}
  explicit AlgebraShape(std::vector<int> block_dims) : dims_(std::move(block_dims)) {
    if (dims_.empty()) throw ShapeError("AlgebraShape: no blocks");
    for (int n : dims_)
      if (n < 1) throw ShapeError("AlgebraShape: block dimension must be >= 1");
  }

  /// The one-dimensional algebra C.
  static AlgebraShape scalar() { return AlgebraShape({1}); }

  const std::vector<int>& block_dims() const { return dims_; }
  std::size_t block_count() const { return dims_.size(); }
  int block_dim(std::size_t i) const { return dims_.at(i); }
  bool is_scalar() const { return dims_.size() == 1 && dims_[0] == 1; }

  /// Shape of B (x) C^{k x k}.
  AlgebraShape amplified(int k) const {
    if (k < 1) throw ShapeError("AlgebraShape: amplification must be >= 1");
    std::vector<int> out(dims_);
    for (int& n : out) n *= k;
    return AlgebraShape(std::move(out));
  }

  std::string to_string() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < dims_.size(); ++i) os << (i ? "," : "") << dims_[i];
    os << ']';
    return os.str();
  }

  friend bool operator==(const AlgebraShape&, const AlgebraShape&) = default;

 private:
  std::vector<int> dims_;
};

namespace detail {

/// A (x) I_k with the first factor major: entry (p*k+a, q*k+b) = A_pq delta_ab.
inline CMatrix kron_identity(const CMatrix& a, Eigen::Index k) {
  CMatrix out = CMatrix::Zero(a.rows() * k, a.cols() * k);
  for (Eigen::Index p = 0; p < a.rows(); ++p)
    for (Eigen::Index q = 0; q < a.cols(); ++q)
      if (a(p, q) != cplx(0.0)) out.block(p * k, q * k, k, k).diagonal().setConstant(a(p, q));
  return out;
}

}  // namespace detail

struct AlgebraTag {};
struct MatrixTag {};

template <class Tag>
class BlockElement;

/// Element a of B.
using AlgElem = BlockElement<AlgebraTag>;
/// Element z of B^{m x m}; the ball B_m is {||z|| < 1}.
using MatElem = BlockElement<MatrixTag>;

template <class Tag>
class BlockElement {
 public:
  static constexpr bool kIsMatrix = std::is_same_v<Tag, MatrixTag>;

  BlockElement(AlgebraShape shape, std::vector<CMatrix> blocks)
    requires(!kIsMatrix)
      : shape_(std::move(shape)), level_(1), blocks_(std::move(blocks)) {
    validate();
  }

  BlockElement(AlgebraShape shape, int level, std::vector<CMatrix> blocks)
    requires kIsMatrix
      : shape_(std::move(shape)), level_(level), blocks_(std::move(blocks)) {
    if (level_ < 1) throw ShapeError("MatElem: level must be >= 1");
    validate();
  }

  const AlgebraShape& shape() const { return shape_; }
  int level() const { return level_; }
  const std::vector<CMatrix>& blocks() const { return blocks_; }
  const CMatrix& block(std::size_t i) const { return blocks_.at(i); }
  std::size_t block_count() const { return blocks_.size(); }

  /// Number of complex coordinates (sum of squared flattened block sizes).
  std::size_t coordinate_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks_) n += static_cast<std::size_t>(b.size());
    return n;
  }

  bool same_space(const BlockElement& o) const { return shape_ == o.shape_ && level_ == o.level_; }

  /// Returns a new element in the same space with the given blocks.
  BlockElement with_blocks(std::vector<CMatrix> blocks) const {
    if constexpr (kIsMatrix)
      return BlockElement(shape_, level_, std::move(blocks));
    else
      return BlockElement(shape_, std::move(blocks));
  }

  static BlockElement zero(const AlgebraShape& shape, int level = 1) {
    return filled(shape, level, [](Eigen::Index n) -> CMatrix { return CMatrix::Zero(n, n); });
  }

  static BlockElement identity(const AlgebraShape& shape, int level = 1) {
    return filled(shape, level, [](Eigen::Index n) -> CMatrix { return CMatrix::Identity(n, n); });
  }

  // ---- MatElem specific ----

  /// Entry b_jk of z in B^{m x m}.
  AlgElem entry(int j, int k) const
    requires kIsMatrix
  {
    if (j < 0 || k < 0 || j >= level_ || k >= level_) throw ShapeError("MatElem::entry: index out of range");
    std::vector<CMatrix> out;
    out.reserve(blocks_.size());
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const int n = shape_.block_dim(i);
      out.push_back(blocks_[i].block(j * n, k * n, n, n));
    }
    return AlgElem(shape_, std::move(out));
  }

  /// Builds z from its m*m entries given in row-major order.
  static BlockElement from_entries(const AlgebraShape& shape, int level, const std::vector<AlgElem>& entries)
    requires kIsMatrix
  {
    if (level < 1 || entries.size() != static_cast<std::size_t>(level) * level)
      throw ShapeError("MatElem::from_entries: expected level*level entries");
    std::vector<CMatrix> flat;
    for (std::size_t i = 0; i < shape.block_count(); ++i) {
      const int n = shape.block_dim(i);
      CMatrix f(level * n, level * n);
      for (int j = 0; j < level; ++j)
        for (int k = 0; k < level; ++k) {
          const AlgElem& e = entries[static_cast<std::size_t>(j * level + k)];
          if (!(e.shape() == shape)) throw ShapeError("MatElem::from_entries: entry shape mismatch");
          f.block(j * n, k * n, n, n) = e.block(i);
        }
      flat.push_back(std::move(f));
    }
    return BlockElement(shape, level, std::move(flat));
  }

  /// b (x) I_m: the diagonal matrix with every diagonal entry equal to b.
  static BlockElement diagonal(const AlgElem& b, int level)
    requires kIsMatrix
  {
    std::vector<CMatrix> flat;
    for (std::size_t i = 0; i < b.block_count(); ++i) {
      const auto n = b.block(i).rows();
      CMatrix f = CMatrix::Zero(level * n, level * n);
      for (int j = 0; j < level; ++j) f.block(j * n, j * n, n, n) = b.block(i);
      flat.push_back(std::move(f));
    }
    return BlockElement(b.shape(), level, std::move(flat));
  }

  /// c (x) 1: a complex m x m matrix acting through the unit of B.
  static BlockElement scalar_matrix(const AlgebraShape& shape, const CMatrix& c)
    requires kIsMatrix
  {
    if (c.rows() != c.cols() || c.rows() < 1) throw ShapeError("MatElem::scalar_matrix: need a square matrix");
    const int level = static_cast<int>(c.rows());
    std::vector<CMatrix> flat;
    for (std::size_t i = 0; i < shape.block_count(); ++i) {
      const int n = shape.block_dim(i);
      flat.push_back(detail::kron_identity(c, n));
    }
    return BlockElement(shape, level, std::move(flat));
  }

 private:
  template <class F>
  static BlockElement filled(const AlgebraShape& shape, int level, F make) {
    std::vector<CMatrix> blocks;
    for (int n : shape.block_dims()) blocks.push_back(make(static_cast<Eigen::Index>(level) * n));
    if constexpr (kIsMatrix)
      return BlockElement(shape, level, std::move(blocks));
    else
      return BlockElement(shape, std::move(blocks));
  }

  void validate() const {
    if (blocks_.size() != shape_.block_count())
      throw ShapeError("block count " + std::to_string(blocks_.size()) + " does not match shape " + shape_.to_string());
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto n = static_cast<Eigen::Index>(level_) * shape_.block_dim(i);
      if (blocks_[i].rows() != n || blocks_[i].cols() != n)
        throw ShapeError("block " + std::to_string(i) + " has wrong dimensions for shape " + shape_.to_string());
      if (!blocks_[i].allFinite()) throw DomainError("element has non-finite entries");
    }
  }

  AlgebraShape shape_;
  int level_;
  std::vector<CMatrix> blocks_;
};

}  // namespace qloewner


namespace qloewner {

template <class T>
concept BlockLike = std::is_same_v<T, AlgElem> || std::is_same_v<T, MatElem>;

namespace detail {

template <BlockLike T>
void require_same_space(const T& a, const T& b, const char* what) {
  if (!a.same_space(b))
    throw ShapeError(std::string(what) + ": operands in different spaces (" + a.shape().to_string() + " level " +
                     std::to_string(a.level()) + " vs " + b.shape().to_string() + " level " +
                     std::to_string(b.level()) + ")");
}

template <BlockLike T, class F>
T blockwise(const T& a, F f) {
  std::vector<CMatrix> out;
  out.reserve(a.block_count());
  for (const auto& b : a.blocks()) out.push_back(f(b));
  return a.with_blocks(std::move(out));
}

template <BlockLike T, class F>
T blockwise(const T& a, const T& b, F f, const char* what) {
  require_same_space(a, b, what);
  std::vector<CMatrix> out;
  out.reserve(a.block_count());
  for (std::size_t i = 0; i < a.block_count(); ++i) out.push_back(f(a.block(i), b.block(i)));
  return a.with_blocks(std::move(out));
}


}  // namespace detail

// ---- arithmetic ----

template <BlockLike T>
T operator+(const T& a, const T& b) {
  return detail::blockwise(a, b, [](const CMatrix& x, const CMatrix& y) -> CMatrix { return x + y; }, "add");
}

template <BlockLike T>
T operator-(const T& a, const T& b) {
  return detail::blockwise(a, b, [](const CMatrix& x, const CMatrix& y) -> CMatrix { return x - y; }, "sub");
}

template <BlockLike T>
T operator-(const T& a) {
  return detail::blockwise(a, [](const CMatrix& x) -> CMatrix { return -x; });
}

template <BlockLike T>
T operator*(const T& a, const T& b) {
  return detail::blockwise(a, b, [](const CMatrix& x, const CMatrix& y) -> CMatrix { return x * y; }, "mul");
}

template <BlockLike T>
T operator*(cplx s, const T& a) {
  return detail::blockwise(a, [s](const CMatrix& x) -> CMatrix { return s * x; });
}

template <BlockLike T>
T operator*(double s, const T& a) {
  return cplx(s) * a;
}

template <BlockLike T>
T add(const T& a, const T& b) {
  return a + b;
}

template <BlockLike T>
T mul(const T& a, const T& b) {
  return a * b;
}

template <BlockLike T>
T scale(cplx s, const T& a) {
  return s * a;
}

/// a*. For MatElem this is (b_jk)* = (b*_kj), i.e. the conjugate transpose of the flattening.
template <BlockLike T>
T adjoint(const T& a) {
  return detail::blockwise(a, [](const CMatrix& x) -> CMatrix { return x.adjoint(); });
}

template <BlockLike T>
T identity_like(const T& a) {
  return T::identity(a.shape(), a.level());
}

template <BlockLike T>
T zero_like(const T& a) {
  return T::zero(a.shape(), a.level());
}

/// Integer power a^n, n >= 0.
template <BlockLike T>
T power(const T& a, int n) {
  if (n < 0) throw DomainError("power: negative exponent");
  T out = identity_like(a);
  for (int j = 0; j < n; ++j) out = out * a;
  return out;
}

// ---- norms and spectra ----

inline double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.size() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

/// C*-norm: max over (flattened) blocks of the largest singular value.
template <BlockLike T>
double operator_norm(const T& a) {
  double out = 0.0;
  for (const auto& b : a.blocks()) out = std::max(out, spectral_norm(b));
  return out;
}

/// ||a - b||.
template <BlockLike T>
double distance(const T& a, const T& b) {
  return operator_norm(a - b);
}

/// Re(a) = (a + a*)/2.
template <BlockLike T>
T re_part(const T& a) {
  return detail::blockwise(a, [](const CMatrix& x) -> CMatrix { return (x + x.adjoint()) * 0.5; });
}

/// Im(a) = (a - a*)/(2i).
template <BlockLike T>
T im_part(const T& a) {
  return detail::blockwise(a, [](const CMatrix& x) -> CMatrix { return (x - x.adjoint()) / cplx(0.0, 2.0); });
}

template <BlockLike T>
bool is_self_adjoint(const T& a, double tol = kDefaultTol) {
  return distance(a, adjoint(a)) <= tol;
}

/// Smallest eigenvalue of the Hermitian part Re(a) over all blocks.
template <BlockLike T>
double min_re_eigenvalue(const T& a) {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& b : a.blocks()) {
    const CMatrix h = (b + b.adjoint()) * 0.5;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    out = std::min(out, es.eigenvalues().minCoeff());
  }
  return out;
}

template <BlockLike T>
bool is_unitary(const T& a, double tol = kDefaultTol) {
  const T one = identity_like(a);
  return distance(a * adjoint(a), one) <= tol && distance(adjoint(a) * a, one) <= tol;
}

/// a >= 0: self-adjoint to tol and spectrum >= -tol.
template <BlockLike T>
bool is_positive(const T& a, double tol = kDefaultTol) {
  return is_self_adjoint(a, tol) && min_re_eigenvalue(a) >= -tol;
}

/// a > 0: self-adjoint to tol and a - tol*1 >= 0.
template <BlockLike T>
bool is_strictly_positive(const T& a, double tol = kDefaultTol) {
  return is_self_adjoint(a, tol) && min_re_eigenvalue(a) >= tol;
}

/// a^{-1} via pivoted LU on each flattened block.
template <BlockLike T>
T inverse(const T& a, double min_rcond = kMinRcond) {
  return detail::blockwise(a, [min_rcond](const CMatrix& x) -> CMatrix {
    Eigen::PartialPivLU<CMatrix> lu(x);
    const double rc = lu.rcond();
    if (!(rc >= min_rcond))
      throw SingularError("inverse: reciprocal condition estimate " + std::to_string(rc) + " below threshold");
    return lu.inverse();
  });
}

/// a * b^{-1} without forming the inverse explicitly.
template <BlockLike T>
T right_divide(const T& a, const T& b, double min_rcond = kMinRcond) {
  return detail::blockwise(
      a, b,
      [min_rcond](const CMatrix& x, const CMatrix& y) -> CMatrix {
        Eigen::PartialPivLU<CMatrix> lu(y.adjoint());
        if (!(lu.rcond() >= min_rcond)) throw SingularError("right_divide: singular divisor");
        return lu.solve(x.adjoint()).adjoint();
      },
      "right_divide");
}

/// w = (1 - a)(1 + a)^{-1}; maps {Re(a) > 0} into the open unit ball.
template <BlockLike T>
T cayley_halfplane_to_ball(const T& a, double tol = kDefaultTol) {
  if (!(min_re_eigenvalue(a) >= tol)) throw DomainError("cayley_halfplane_to_ball: Re(a) is not strictly positive");
  const T one = identity_like(a);
  return right_divide(one - a, one + a);
}

/// a = (1 - w)(1 + w)^{-1}; maps the open unit ball onto {Re(a) > 0}.
template <BlockLike T>
T cayley_ball_to_halfplane(const T& w) {
  if (!(operator_norm(w) < 1.0)) throw DomainError("cayley_ball_to_halfplane: ||w|| >= 1");
  const T one = identity_like(w);
  return right_divide(one - w, one + w);
}

// ---- conversions and coordinates ----

inline MatElem as_matrix(const AlgElem& a) { return MatElem(a.shape(), 1, a.blocks()); }

inline AlgElem as_algebra(const MatElem& z) {
  if (z.level() != 1) throw ShapeError("as_algebra: level must be 1");
  return AlgElem(z.shape(), z.blocks());
}

/// Block diagonal diag(a, b) in B^{(m1+m2) x (m1+m2)}.
inline MatElem direct_sum(const MatElem& a, const MatElem& b) {
  if (!(a.shape() == b.shape())) throw ShapeError("direct_sum: shape mismatch");
  const int m = a.level() + b.level();
  std::vector<AlgElem> entries;
  entries.reserve(static_cast<std::size_t>(m * m));
  const AlgElem zero = AlgElem::zero(a.shape());
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) {
      if (j < a.level() && k < a.level())
        entries.push_back(a.entry(j, k));
      else if (j >= a.level() && k >= a.level())
        entries.push_back(b.entry(j - a.level(), k - a.level()));
      else
        entries.push_back(zero);
    }
  return MatElem::from_entries(a.shape(), m, entries);
}

/// Stacks all block entries (column-major per block) into one vector.
template <BlockLike T>
CVector vectorize(const T& a) {
  CVector out(static_cast<Eigen::Index>(a.coordinate_count()));
  Eigen::Index pos = 0;
  for (const auto& b : a.blocks()) {
    out.segment(pos, b.size()) = Eigen::Map<const CVector>(b.data(), b.size());
    pos += b.size();
  }
  return out;
}

/// Inverse of vectorize, using `like` for the target space.
template <BlockLike T>
T devectorize(const T& like, const CVector& v) {
  if (v.size() != static_cast<Eigen::Index>(like.coordinate_count())) throw ShapeError("devectorize: size mismatch");
  std::vector<CMatrix> blocks;
  Eigen::Index pos = 0;
  for (const auto& b : like.blocks()) {
    blocks.push_back(Eigen::Map<const CMatrix>(v.data() + pos, b.rows(), b.cols()));
    pos += b.size();
  }
  return like.with_blocks(std::move(blocks));
}

/// Unit coordinate direction c (a single matrix unit in one block).
template <BlockLike T>
T coordinate_unit(const T& like, std::size_t c) {
  CVector v = CVector::Zero(static_cast<Eigen::Index>(like.coordinate_count()));
  v(static_cast<Eigen::Index>(c)) = 1.0;
  return devectorize(like, v);
}

}  // namespace qloewner
