#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "riemopt/manifolds/manifold.hpp"
#include "riemopt/manifolds/stiefel.hpp"

namespace riemopt {

/// Principal logarithm of a rotation matrix R.
///
/// R is normal, so S = sym(R) and K = skew(R) commute and share invariant
/// planes; on a plane rotated by theta, K = sin(theta) J and log R = theta J.
/// Hence log R = K g(S) with g(cos theta) = theta / sin(theta), evaluated on
/// the eigendecomposition of S. sin(theta) is read off as |K q| for each
/// eigenvector q, which keeps small angles accurate.
template <typename T>
Matrix<T> logm_so(const Matrix<T>& r) {
  const Matrix<T> s = sym(r);
  const Matrix<T> k = skew(r);
  const SymEig<T> eig = sym_eig(s);
  const std::size_t n = r.rows();
  std::vector<T> g(n);
  for (std::size_t j = 0; j < n; ++j) {
    T kq2(0);
    for (std::size_t i = 0; i < n; ++i) {
      T kq(0);
      for (std::size_t l = 0; l < n; ++l) kq += k(i, l) * eig.vectors(l, j);
      kq2 += kq * kq;
    }
    const T sine = std::sqrt(kq2);
    const T theta = std::atan2(sine, eig.values[j]);
    if (theta > std::numbers::pi_v<T> - T(1e-7)) {
      throw CutLocus("logm_so: rotation angle is pi, principal logarithm is not unique");
    }
    g[j] = sine > Precision<T>::div_guard ? theta / sine : T(1);
  }
  const Matrix<T> gs = spectral_map(eig, [&](T, std::size_t j) { return g[j]; });
  return skew(k * gs);
}

/// Rotation group SO(n) with the bi-invariant metric inherited from the
/// Frobenius inner product. Tangent vectors at x are x A with A skew.
template <typename T>
class SpecialOrthogonal final : public Manifold<T> {
  using Base = Manifold<T>;
  using typename Base::In;
  using typename Base::Out;

 public:
  explicit SpecialOrthogonal(ManifoldDescriptor d) : Base(std::move(d)) {}

  T inner(In, In u, In v) const override { return Base::dot(u, v); }

  void proju(In x, In u, Out out) const override {
    const Matrix<T> xm = this->square(x);
    (xm * skew(xm.transpose() * this->square(u))).copy_to(out);
  }

  void projx(In x, Out out) const override {
    Matrix<T> q = qr_signfix(this->square(x)).q;
    if (det(q) < T(0))
      for (std::size_t i = 0; i < q.rows(); ++i) q(i, q.cols() - 1) = -q(i, q.cols() - 1);
    q.copy_to(out);
  }

  void exp(In x, In u, Out out) const override {
    if (Base::is_zero(u)) return Base::copy(x, out);
    const Matrix<T> xm = this->square(x);
    (xm * expm(skew(xm.transpose() * this->square(u)))).copy_to(out);
  }

  void log(In x, In y, Out out) const override {
    const Matrix<T> xm = this->square(x);
    (xm * logm_so(xm.transpose() * this->square(y))).copy_to(out);
  }

  T dist(In x, In y) const override {
    return logm_so(this->square(x).transpose() * this->square(y)).frobenius();
  }

  void retr(In x, In u, Out out) const override {
    if (Base::is_zero(u)) return Base::copy(x, out);
    qr_signfix(this->square(x) + this->square(u)).q.copy_to(out);
  }

  /// Along x expm(tB), the left-trivialized vector evolves as
  /// expm(-tB/2) A expm(tB/2).
  void ptransp(In x, In y, In v, Out out) const override {
    const Matrix<T> xm = this->square(x);
    const Matrix<T> ym = this->square(y);
    const Matrix<T> b = logm_so(xm.transpose() * ym);
    const Matrix<T> half = expm(b * T(0.5));
    const Matrix<T> a = skew(xm.transpose() * this->square(v));
    (ym * (half.transpose() * a * half)).copy_to(out);
  }

  void random_point(Rng& rng, Out out) const override {
    const std::size_t n = this->point_shape()[0];
    Matrix<T> q = qr_signfix(detail::random_gaussian<T>(rng, n, n)).q;
    if (det(q) < T(0))
      for (std::size_t i = 0; i < n; ++i) q(i, 0) = -q(i, 0);
    q.copy_to(out);
  }

  T point_error(In x) const override {
    const Matrix<T> xm = this->square(x);
    const T e = std::max(detail::orthonormality_error(xm), std::abs(det(xm) - T(1)));
    return std::isfinite(e) ? e : std::numeric_limits<T>::infinity();
  }
  T vector_error(In x, In v) const override {
    const T e = sym(this->square(x).transpose() * this->square(v)).max_abs();
    return std::isfinite(e) ? e : std::numeric_limits<T>::infinity();
  }
};

}  // namespace riemopt
