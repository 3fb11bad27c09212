#pragma once

// Truncated formal power series sum_{n=0}^{N} a_n z^n over a commutative
// coefficient ring T (complex<double>, boost rationals, ...).

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "qloewner/errors.hpp"

namespace qloewner {

template <class T>
class TruncatedSeries {
 public:
  explicit TruncatedSeries(int order) : c_(static_cast<std::size_t>(check(order)) + 1, T(0)) {}

  TruncatedSeries(int order, std::vector<T> coeffs) : c_(std::move(coeffs)) {
    c_.resize(static_cast<std::size_t>(check(order)) + 1, T(0));
  }

  /// z + 0 z^2 + ...
  static TruncatedSeries variable(int order) {
    TruncatedSeries s(order);
    if (order >= 1) s.c_[1] = T(1);
    return s;
  }

  /// sum_{n>=1} m_n z^n from m = (m_1, m_2, ...).
  static TruncatedSeries from_moments(int order, const std::vector<T>& m) {
    if (m.size() < static_cast<std::size_t>(order))
      throw DomainError("TruncatedSeries: order exceeds available coefficients");
    TruncatedSeries s(order);
    for (int n = 1; n <= order; ++n) s.c_[static_cast<std::size_t>(n)] = m[static_cast<std::size_t>(n - 1)];
    return s;
  }

  int order() const { return static_cast<int>(c_.size()) - 1; }
  const T& operator[](int n) const { return c_.at(static_cast<std::size_t>(n)); }
  T& operator[](int n) { return c_.at(static_cast<std::size_t>(n)); }
  const std::vector<T>& coefficients() const { return c_; }

  /// (a_1, ..., a_N)
  std::vector<T> tail() const { return std::vector<T>(c_.begin() + 1, c_.end()); }

  friend TruncatedSeries operator+(const TruncatedSeries& a, const TruncatedSeries& b) {
    same_order(a, b);
    TruncatedSeries out(a.order());
    for (std::size_t n = 0; n < a.c_.size(); ++n) out.c_[n] = a.c_[n] + b.c_[n];
    return out;
  }

  friend TruncatedSeries operator-(const TruncatedSeries& a, const TruncatedSeries& b) {
    same_order(a, b);
    TruncatedSeries out(a.order());
    for (std::size_t n = 0; n < a.c_.size(); ++n) out.c_[n] = a.c_[n] - b.c_[n];
    return out;
  }

  friend TruncatedSeries operator*(const TruncatedSeries& a, const TruncatedSeries& b) {
    same_order(a, b);
    const std::size_t len = a.c_.size();
    TruncatedSeries out(a.order());
    for (std::size_t i = 0; i < len; ++i)
      for (std::size_t j = 0; i + j < len; ++j) out.c_[i + j] = out.c_[i + j] + a.c_[i] * b.c_[j];
    return out;
  }

  friend TruncatedSeries operator*(const T& s, const TruncatedSeries& a) {
    TruncatedSeries out(a.order());
    for (std::size_t n = 0; n < a.c_.size(); ++n) out.c_[n] = s * a.c_[n];
    return out;
  }

 private:
  static int check(int order) {
    if (order < 0) throw DomainError("TruncatedSeries: negative order");
    return order;
  }
  static void same_order(const TruncatedSeries& a, const TruncatedSeries& b) {
    if (a.order() != b.order()) throw ShapeError("TruncatedSeries: order mismatch");
  }

  std::vector<T> c_;
};

/// sum_{k=1}^{N} w_k g^k for g(0) = 0, by Horner: g(w_1 + g(w_2 + ...)).
template <class T>
TruncatedSeries<T> power_sum(const std::vector<T>& w, const TruncatedSeries<T>& g) {
  if (g[0] != T(0)) throw DomainError("power_sum: inner series must vanish at 0");
  const int N = g.order();
  TruncatedSeries<T> acc(N);
  for (int k = std::min<int>(N, static_cast<int>(w.size())); k >= 1; --k) {
    acc[0] = acc[0] + w[static_cast<std::size_t>(k - 1)];
    acc = g * acc;
  }
  return acc;
}

/// f(g(z)) truncated, requires g(0) = 0.
template <class T>
TruncatedSeries<T> compose(const TruncatedSeries<T>& f, const TruncatedSeries<T>& g) {
  TruncatedSeries<T> out = power_sum(f.tail(), g);
  out[0] = out[0] + f[0];
  return out;
}

/// eta = psi / (1 + psi) = sum_{k>=1} (-1)^{k-1} psi^k.
template <class T>
TruncatedSeries<T> eta_of_psi(const TruncatedSeries<T>& psi) {
  std::vector<T> w(static_cast<std::size_t>(psi.order()));
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = (k % 2 == 0) ? T(1) : T(-1);
  return power_sum(w, psi);
}

/// psi = eta / (1 - eta) = sum_{k>=1} eta^k.
template <class T>
TruncatedSeries<T> psi_of_eta(const TruncatedSeries<T>& eta) {
  return power_sum(std::vector<T>(static_cast<std::size_t>(eta.order()), T(1)), eta);
}

}  // namespace qloewner
