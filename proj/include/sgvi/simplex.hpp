#pragma once

// Numerical kernels over the probability simplex. All functions are
// templated on the Eigen expression type so they accept any dense vector
// expression of a floating-point scalar.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace sgvi {

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0) return -std::numeric_limits<Scalar>::infinity();
  const Scalar hi = x.maxCoeff();
  if (!std::isfinite(hi)) return hi;
  return hi + std::log((x.array() - hi).exp().sum());
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(
    const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> log_softmax(
    const Eigen::MatrixBase<Derived>& x) {
  return (x.array() - log_sum_exp(x)).matrix();
}

/// Index of the largest entry; ties resolve to the lowest index.
template <typename Derived>
Eigen::Index argmax(const Eigen::MatrixBase<Derived>& x) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < x.size(); ++i)
    if (x(i) > x(best)) best = i;
  return best;
}

template <typename Derived>
bool in_simplex(const Eigen::MatrixBase<Derived>& q, double tol = 1e-9) {
  if (q.size() == 0) return false;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (!(q(i) >= 0) || !std::isfinite(q(i))) return false;
  return std::abs(q.sum() - 1) <= tol;
}

/// Negative entropy term -sum q log q with 0 log 0 := 0.
template <typename Derived>
typename Derived::Scalar entropy(const Eigen::MatrixBase<Derived>& q) {
  typename Derived::Scalar h = 0;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (q(i) > 0) h -= q(i) * std::log(q(i));
  return h;
}

/// Entropy-regularised expected score E_q[s] - E_q[log q].
template <typename DerivedS, typename DerivedQ>
typename DerivedS::Scalar elbo(const Eigen::MatrixBase<DerivedS>& scores,
                               const Eigen::MatrixBase<DerivedQ>& q,
                               double simplex_tol = 1e-9) {
  if (scores.size() != q.size())
    throw std::invalid_argument("elbo: score and distribution lengths differ");
  if (!in_simplex(q, simplex_tol))
    throw std::invalid_argument("elbo: distribution is not on the simplex");
  return scores.dot(q) + entropy(q);
}

/// One exponentiated-gradient step: q <- q * exp(a*g - max(a*g)), renormalised.
template <typename DerivedQ, typename DerivedG>
Eigen::Matrix<typename DerivedQ::Scalar, Eigen::Dynamic, 1> entropic_step(
    const Eigen::MatrixBase<DerivedQ>& q, const Eigen::MatrixBase<DerivedG>& gradient,
    typename DerivedQ::Scalar step) {
  using Scalar = typename DerivedQ::Scalar;
  if (q.size() != gradient.size())
    throw std::invalid_argument("entropic_step: gradient length mismatch");
  if (!gradient.allFinite())
    throw std::invalid_argument("entropic_step: non-finite gradient");
  if (!(step >= 0) || !std::isfinite(step))
    throw std::invalid_argument("entropic_step: step must be finite and non-negative");
  if ((q.array() <= 0).any())
    throw std::invalid_argument("entropic_step: distribution must be strictly positive");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> r = step * gradient;
  r = q.array() * (r.array() - r.maxCoeff()).exp();
  return r / r.template lpNorm<1>();
}

/// Euclidean projection onto the simplex (sort-and-threshold).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> project_to_simplex(
    const Eigen::MatrixBase<Derived>& y) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = y.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> u = y;
  std::sort(u.data(), u.data() + n, std::greater<Scalar>());
  Scalar cumulative = 0;
  Scalar theta = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += u(j);
    const Scalar t = (cumulative - 1) / static_cast<Scalar>(j + 1);
    if (u(j) - t > 0) theta = t;
  }
  return (y.array() - theta).cwiseMax(Scalar(0)).matrix();
}

}  // namespace sgvi
