#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "riemopt/manifolds/manifold.hpp"

namespace riemopt {

namespace detail {

template <typename T>
Matrix<T> random_gaussian(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix<T> g(rows, cols);
  for (auto& v : g.values()) v = static_cast<T>(rng.normal());
  return g;
}

template <typename T>
T orthonormality_error(const Matrix<T>& x) {
  const T e = (x.transpose() * x - Matrix<T>::identity(x.cols())).max_abs();
  return std::isfinite(e) ? e : std::numeric_limits<T>::infinity();
}

}  // namespace detail

/// Orthonormal p-frames in R^n with the metric inherited from R^{n x p}.
/// No closed-form exponential map is provided: optimizers step with the
/// QR retraction and move momenta with projection transport.
template <typename T>
class StiefelEuclidean final : public Manifold<T> {
  using Base = Manifold<T>;
  using typename Base::In;
  using typename Base::Out;

 public:
  explicit StiefelEuclidean(ManifoldDescriptor d) : Base(std::move(d)) {}

  T inner(In, In u, In v) const override { return Base::dot(u, v); }

  void proju(In x, In u, Out out) const override {
    const Matrix<T> xm = this->rect(x);
    const Matrix<T> um = this->rect(u);
    (um - xm * sym(xm.transpose() * um)).copy_to(out);
  }

  void projx(In x, Out out) const override { qr_signfix(this->rect(x)).q.copy_to(out); }

  void retr(In x, In u, Out out) const override {
    if (Base::is_zero(u)) return Base::copy(x, out);
    qr_signfix(this->rect(x) + this->rect(u)).q.copy_to(out);
  }

  void random_point(Rng& rng, Out out) const override {
    const Shape& s = this->point_shape();
    qr_signfix(detail::random_gaussian<T>(rng, s[0], s[1])).q.copy_to(out);
  }

  T point_error(In x) const override { return detail::orthonormality_error(this->rect(x)); }
  T vector_error(In x, In v) const override {
    const T e = sym(this->rect(x).transpose() * this->rect(v)).max_abs();
    return std::isfinite(e) ? e : std::numeric_limits<T>::infinity();
  }

  bool has_exp() const override { return false; }
  bool has_ptransp() const override { return false; }
};

/// p-dimensional subspaces of R^n, represented by orthonormal n x p bases.
/// Tangent vectors are horizontal lifts (x^T u = 0).
template <typename T>
class Grassmannian final : public Manifold<T> {
  using Base = Manifold<T>;
  using typename Base::In;
  using typename Base::Out;

 public:
  explicit Grassmannian(ManifoldDescriptor d) : Base(std::move(d)) {}

  T inner(In, In u, In v) const override { return Base::dot(u, v); }

  void proju(In x, In u, Out out) const override {
    const Matrix<T> xm = this->rect(x);
    const Matrix<T> um = this->rect(u);
    (um - xm * (xm.transpose() * um)).copy_to(out);
  }

  void projx(In x, Out out) const override { qr_signfix(this->rect(x)).q.copy_to(out); }

  void exp(In x, In u, Out out) const override {
    if (Base::is_zero(u)) return Base::copy(x, out);
    qr_signfix(geodesic_end(this->rect(x), svd_thin(this->rect(u)))).q.copy_to(out);
  }

  void log(In x, In y, Out out) const override {
    const SVD<T> f = log_factors(this->rect(x), this->rect(y));
    const std::size_t p = f.sigma.size();
    std::vector<T> angles(p);
    for (std::size_t k = 0; k < p; ++k) angles[k] = std::atan(f.sigma[k]);
    (f.u * Matrix<T>::diagonal(std::span<const T>(angles)) * f.v.transpose()).copy_to(out);
  }

  /// Norm of the principal angles between the two subspaces.
  T dist(In x, In y) const override {
    const SVD<T> f = log_factors(this->rect(x), this->rect(y));
    T s(0);
    for (T sigma : f.sigma) {
      const T a = std::atan(sigma);
      s += a * a;
    }
    return std::sqrt(s);
  }

  void retr(In x, In u, Out out) const override {
    if (Base::is_zero(u)) return Base::copy(x, out);
    qr_signfix(this->rect(x) + this->rect(u)).q.copy_to(out);
  }

  /// Transport along the geodesic x -> y, expressed for the representative
  /// y actually passed in (which may differ from the geodesic endpoint by
  /// a p x p rotation).
  void ptransp(In x, In y, In v, Out out) const override {
    const Matrix<T> xm = this->rect(x);
    const Matrix<T> ym = this->rect(y);
    const Matrix<T> vm = this->rect(v);
    std::vector<T> direction(this->point_size());
    log(x, y, direction);
    const SVD<T> f = svd_thin(this->rect(direction));
    const std::size_t p = f.sigma.size();
    std::vector<T> sines(p), cosines(p);
    for (std::size_t k = 0; k < p; ++k) {
      sines[k] = std::sin(f.sigma[k]);
      cosines[k] = std::cos(f.sigma[k]);
    }
    const Matrix<T> ut_v = f.u.transpose() * vm;
    Matrix<T> moved = xm * f.v * Matrix<T>::diagonal(std::span<const T>(sines)) * ut_v * T(-1);
    moved += f.u * Matrix<T>::diagonal(std::span<const T>(cosines)) * ut_v;
    moved += vm - f.u * ut_v;
    const Matrix<T> rotation = geodesic_end(xm, f).transpose() * ym;
    const Matrix<T> result = moved * rotation;
    (result - ym * (ym.transpose() * result)).copy_to(out);
  }

  void random_point(Rng& rng, Out out) const override {
    const Shape& s = this->point_shape();
    qr_signfix(detail::random_gaussian<T>(rng, s[0], s[1])).q.copy_to(out);
  }

  T point_error(In x) const override { return detail::orthonormality_error(this->rect(x)); }
  T vector_error(In x, In v) const override {
    const T e = (this->rect(x).transpose() * this->rect(v)).max_abs();
    return std::isfinite(e) ? e : std::numeric_limits<T>::infinity();
  }

 private:
  /// x V cos(S) V^T + U sin(S) V^T for u = U S V^T.
  static Matrix<T> geodesic_end(const Matrix<T>& x, const SVD<T>& f) {
    const std::size_t p = f.sigma.size();
    std::vector<T> sines(p), cosines(p);
    for (std::size_t k = 0; k < p; ++k) {
      sines[k] = std::sin(f.sigma[k]);
      cosines[k] = std::cos(f.sigma[k]);
    }
    const Matrix<T> vt = f.v.transpose();
    return x * f.v * Matrix<T>::diagonal(std::span<const T>(cosines)) * vt +
           f.u * Matrix<T>::diagonal(std::span<const T>(sines)) * vt;
  }

  /// SVD of (I - x x^T) y (x^T y)^{-1}; its singular values are the tangents
  /// of the principal angles.
  static SVD<T> log_factors(const Matrix<T>& x, const Matrix<T>& y) {
    const Matrix<T> m = x.transpose() * y;
    const Matrix<T> n = y - x * m;
    Matrix<T> a;
    try {
      a = solve(m.transpose(), n.transpose()).transpose();
    } catch (const Singular&) {
      throw CutLocus("grassmannian: subspaces have a principal angle of pi/2");
    }
    return svd_thin(a);
  }
};

}  // namespace riemopt
