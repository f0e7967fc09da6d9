#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "riemopt/manifolds/manifold.hpp"

namespace riemopt {

namespace detail {

/// Eigenvalue floor used when projecting onto the SPD cone.
inline constexpr double kSpdEigenvalueFloor = 1e-5;

template <typename T>
T spd_point_error(const Matrix<T>& x) {
  if (!std::all_of(x.values().begin(), x.values().end(), [](T v) { return std::isfinite(v); })) {
    return std::numeric_limits<T>::infinity();
  }
  const T asym = x.asymmetry();
  if (asym > Precision<T>::sym_rel * std::max(x.max_abs(), T(1))) return asym;
  const SymEig<T> eig = sym_eig(sym(x));
  if (!(eig.values.front() > T(0))) return std::numeric_limits<T>::infinity();
  return asym;
}

template <typename T>
Matrix<T> spd_projx(const Matrix<T>& x) {
  const SymEig<T> eig = sym_eig(sym(x));
  return spectral_map(eig, [](T l, std::size_t) { return std::max(l, static_cast<T>(kSpdEigenvalueFloor)); });
}

template <typename T>
Matrix<T> spd_random(Rng& rng, std::size_t n) {
  Matrix<T> g(n, n);
  for (auto& v : g.values()) v = static_cast<T>(0.5 * rng.normal());
  return expm_sym(sym(g));
}

template <typename T>
T symmetric_vector_error(const Matrix<T>& v) {
  const T e = v.asymmetry();
  return std::isfinite(e) ? e : std::numeric_limits<T>::infinity();
}

/// Lower triangle (including the diagonal).
template <typename T>
Matrix<T> lower(const Matrix<T>& a) {
  Matrix<T> l(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j <= i && j < a.cols(); ++j) l(i, j) = a(i, j);
  return l;
}

}  // namespace detail

/// SPD matrices with the affine-invariant metric tr(X^-1 U X^-1 V).
template <typename T>
class SPDAffineInvariant final : public Manifold<T> {
  using Base = Manifold<T>;
  using typename Base::In;
  using typename Base::Out;

 public:
  explicit SPDAffineInvariant(ManifoldDescriptor d) : Base(std::move(d)) {}

  T inner(In x, In u, In v) const override {
    const Matrix<T> xi = inv_spd(this->square(x));
    return frobenius_inner(xi * this->square(u), (xi * this->square(v)).transpose());
  }

  void proju(In, In u, Out out) const override { sym(this->square(u)).copy_to(out); }
  void projx(In x, Out out) const override { detail::spd_projx(this->square(x)).copy_to(out); }

  void egrad2rgrad(In x, In g, Out out) const override {
    const Matrix<T> xm = this->square(x);
    sym(xm * sym(this->square(g)) * xm).copy_to(out);
  }

  void exp(In x, In u, Out out) const override {
    if (Base::is_zero(u)) return Base::copy(x, out);
    const Roots r = roots(x);
    sym(r.half * expm_sym(sym(r.inv_half * this->square(u) * r.inv_half)) * r.half).copy_to(out);
  }

  void log(In x, In y, Out out) const override {
    const Roots r = roots(x);
    sym(r.half * logm_spd(sym(r.inv_half * this->square(y) * r.inv_half)) * r.half).copy_to(out);
  }

  T dist(In x, In y) const override {
    const Roots r = roots(x);
    const SymEig<T> eig = sym_eig(sym(r.inv_half * this->square(y) * r.inv_half));
    detail::require_positive_spectrum(eig, "spd dist");
    T s(0);
    for (T l : eig.values) s += std::log(l) * std::log(l);
    return std::sqrt(s);
  }

  /// Second-order retraction X + U + U X^-1 U / 2; always SPD.
  void retr(In x, In u, Out out) const override {
    if (Base::is_zero(u)) return Base::copy(x, out);
    const Matrix<T> xm = this->square(x);
    const Matrix<T> um = this->square(u);
    sym(xm + um + um * inv_spd(xm) * um * T(0.5)).copy_to(out);
  }

  /// E V E^T with E = (Y X^-1)^{1/2} = X^{1/2} (X^{-1/2} Y X^{-1/2})^{1/2} X^{-1/2}.
  void ptransp(In x, In y, In v, Out out) const override {
    const Roots r = roots(x);
    const Matrix<T> e = r.half * sqrtm_spd(sym(r.inv_half * this->square(y) * r.inv_half)) * r.inv_half;
    sym(e * this->square(v) * e.transpose()).copy_to(out);
  }

  void random_point(Rng& rng, Out out) const override {
    detail::spd_random<T>(rng, this->point_shape()[0]).copy_to(out);
  }

  T point_error(In x) const override { return detail::spd_point_error(this->square(x)); }
  T vector_error(In, In v) const override { return detail::symmetric_vector_error(this->square(v)); }

 private:
  struct Roots {
    Matrix<T> half;
    Matrix<T> inv_half;
  };
  Roots roots(In x) const {
    const SymEig<T> eig = sym_eig(this->square(x));
    detail::require_positive_spectrum(eig, "spd point");
    return {spectral_map(eig, [](T l, std::size_t) { return std::sqrt(l); }),
            spectral_map(eig, [](T l, std::size_t) { return T(1) / std::sqrt(l); })};
  }
};

/// SPD matrices with the Log-Euclidean metric: the pullback of the
/// Frobenius metric through the matrix logarithm, so geometry is flat in
/// log coordinates.
template <typename T>
class SPDLogEuclidean final : public Manifold<T> {
  using Base = Manifold<T>;
  using typename Base::In;
  using typename Base::Out;

 public:
  explicit SPDLogEuclidean(ManifoldDescriptor d) : Base(std::move(d)) {}

  T inner(In x, In u, In v) const override {
    const SymEig<T> eig = spd_eig(x);
    return frobenius_inner(dlog(eig, this->square(u)), dlog(eig, this->square(v)));
  }

  void proju(In, In u, Out out) const override { sym(this->square(u)).copy_to(out); }
  void projx(In x, Out out) const override { detail::spd_projx(this->square(x)).copy_to(out); }

  /// The differential of log is self-adjoint, so the gradient is
  /// dexp(dexp(sym g)) with both derivatives taken at log X.
  void egrad2rgrad(In x, In g, Out out) const override {
    const SymEig<T> eig = spd_eig(x);
    dexp(eig, dexp(eig, sym(this->square(g)))).copy_to(out);
  }

  void exp(In x, In u, Out out) const override {
    if (Base::is_zero(u)) return Base::copy(x, out);
    const SymEig<T> eig = spd_eig(x);
    expm_sym(sym(log_of(eig) + dlog(eig, this->square(u)))).copy_to(out);
  }

  void log(In x, In y, Out out) const override {
    const SymEig<T> eig = spd_eig(x);
    dexp(eig, logm_spd(this->square(y)) - log_of(eig)).copy_to(out);
  }

  T dist(In x, In y) const override {
    return (logm_spd(this->square(x)) - logm_spd(this->square(y))).frobenius();
  }

  void retr(In x, In u, Out out) const override { exp(x, u, out); }

  void ptransp(In x, In y, In v, Out out) const override {
    const Matrix<T> w = dlog(spd_eig(x), this->square(v));
    dexp(spd_eig(y), w).copy_to(out);
  }

  void random_point(Rng& rng, Out out) const override {
    detail::spd_random<T>(rng, this->point_shape()[0]).copy_to(out);
  }

  T point_error(In x) const override { return detail::spd_point_error(this->square(x)); }
  T vector_error(In, In v) const override { return detail::symmetric_vector_error(this->square(v)); }

  bool retr_is_exp() const override { return true; }

 private:
  SymEig<T> spd_eig(In x) const {
    SymEig<T> eig = sym_eig(this->square(x));
    detail::require_positive_spectrum(eig, "spd point");
    return eig;
  }
  static Matrix<T> log_of(const SymEig<T>& eig) {
    return spectral_map(eig, [](T l, std::size_t) { return std::log(l); });
  }
  /// Frechet derivative of log at X = Q diag(l) Q^T.
  static Matrix<T> dlog(const SymEig<T>& eig, const Matrix<T>& u) {
    return detail::daleckii_krein(eig, u, [](T a, T b) { return detail::log_divided_difference(a, b); });
  }
  /// Frechet derivative of exp at log X (same eigenvectors, eigenvalues log l).
  static Matrix<T> dexp(const SymEig<T>& eig, const Matrix<T>& u) {
    return detail::daleckii_krein(eig, u, [](T a, T b) {
      return detail::exp_divided_difference(std::log(a), std::log(b));
    });
  }
};

/// Lower-triangular matrices with positive diagonal. The metric is
/// Euclidean on the strictly lower part and sum u_ii v_ii / L_ii^2 on the
/// diagonal, which makes the diagonal a product of log-scaled half lines.
template <typename T>
class CholeskyManifold final : public Manifold<T> {
  using Base = Manifold<T>;
  using typename Base::In;
  using typename Base::Out;

 public:
  explicit CholeskyManifold(ManifoldDescriptor d) : Base(std::move(d)), n_(this->point_shape()[0]) {}

  T inner(In x, In u, In v) const override {
    T s(0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < i; ++j) s += u[at(i, j)] * v[at(i, j)];
      const T l = x[at(i, i)];
      s += u[at(i, i)] * v[at(i, i)] / (l * l);
    }
    return s;
  }

  void proju(In, In u, Out out) const override { detail::lower(this->square(u)).copy_to(out); }

  void projx(In x, Out out) const override {
    Matrix<T> l = detail::lower(this->square(x));
    for (std::size_t i = 0; i < n_; ++i)
      l(i, i) = std::max(std::abs(l(i, i)), static_cast<T>(detail::kSpdEigenvalueFloor));
    l.copy_to(out);
  }

  void egrad2rgrad(In x, In g, Out out) const override {
    Base::fill_zero(out);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < i; ++j) out[at(i, j)] = g[at(i, j)];
      const T l = x[at(i, i)];
      out[at(i, i)] = g[at(i, i)] * l * l;
    }
  }

  void exp(In x, In u, Out out) const override {
    if (Base::is_zero(u)) return Base::copy(x, out);
    Base::fill_zero(out);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < i; ++j) out[at(i, j)] = x[at(i, j)] + u[at(i, j)];
      const T l = x[at(i, i)];
      out[at(i, i)] = l * std::exp(u[at(i, i)] / l);
    }
  }

  void log(In x, In y, Out out) const override {
    Base::fill_zero(out);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < i; ++j) out[at(i, j)] = y[at(i, j)] - x[at(i, j)];
      const T l = x[at(i, i)];
      out[at(i, i)] = l * std::log(y[at(i, i)] / l);
    }
  }

  T dist(In x, In y) const override {
    T s(0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        const T d = y[at(i, j)] - x[at(i, j)];
        s += d * d;
      }
      const T d = std::log(y[at(i, i)] / x[at(i, i)]);
      s += d * d;
    }
    return std::sqrt(s);
  }

  void retr(In x, In u, Out out) const override { exp(x, u, out); }

  void transp(In, In, In v, Out out) const override { detail::lower(this->square(v)).copy_to(out); }

  void ptransp(In x, In y, In v, Out out) const override {
    Base::fill_zero(out);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < i; ++j) out[at(i, j)] = v[at(i, j)];
      out[at(i, i)] = v[at(i, i)] * y[at(i, i)] / x[at(i, i)];
    }
  }

  void random_point(Rng& rng, Out out) const override {
    Base::fill_zero(out);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < i; ++j) out[at(i, j)] = static_cast<T>(rng.normal());
      out[at(i, i)] = static_cast<T>(std::exp(0.5 * rng.normal()));
    }
  }

  T point_error(In x) const override {
    if (!Base::all_finite(x)) return std::numeric_limits<T>::infinity();
    T e(0);
    for (std::size_t i = 0; i < n_; ++i) {
      if (!(x[at(i, i)] > T(0))) return std::numeric_limits<T>::infinity();
      for (std::size_t j = i + 1; j < n_; ++j) e = std::max(e, std::abs(x[at(i, j)]));
    }
    return e;
  }
  T vector_error(In, In v) const override {
    if (!Base::all_finite(v)) return std::numeric_limits<T>::infinity();
    T e(0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) e = std::max(e, std::abs(v[at(i, j)]));
    return e;
  }

  bool retr_is_exp() const override { return true; }

 private:
  std::size_t at(std::size_t i, std::size_t j) const { return i * n_ + j; }
  std::size_t n_;
};

/// SPD matrices with the Log-Cholesky metric: every operator is the
/// Cholesky-manifold operator conjugated through X -> chol(X), with
/// differential dphi_X[U] = L Phi(L^-1 U L^-T) (Phi = lower triangle,
/// halved diagonal) and inverse differential W L^T + L W^T.
template <typename T>
class SPDLogCholesky final : public Manifold<T> {
  using Base = Manifold<T>;
  using typename Base::In;
  using typename Base::Out;

 public:
  explicit SPDLogCholesky(ManifoldDescriptor d)
      : Base(d), chol_(make_descriptor(ManifoldKind::Cholesky, d.dims)), n_(this->point_shape()[0]) {}

  T inner(In x, In u, In v) const override {
    const Matrix<T> l = cholesky(this->square(x));
    return chol_.inner(l.values(), dphi(l, this->square(u)).values(), dphi(l, this->square(v)).values());
  }

  void proju(In, In u, Out out) const override { sym(this->square(u)).copy_to(out); }
  void projx(In x, Out out) const override { detail::spd_projx(this->square(x)).copy_to(out); }

  void egrad2rgrad(In x, In g, Out out) const override {
    const Matrix<T> l = cholesky(this->square(x));
    Matrix<T> w = detail::lower(sym(this->square(g)) * l * T(2));
    for (std::size_t i = 0; i < n_; ++i) w(i, i) *= l(i, i) * l(i, i);
    dphi_inv(l, w).copy_to(out);
  }

  void exp(In x, In u, Out out) const override {
    if (Base::is_zero(u)) return Base::copy(x, out);
    const Matrix<T> l = cholesky(this->square(x));
    Matrix<T> k(n_, n_);
    chol_.exp(l.values(), dphi(l, this->square(u)).values(), k.values());
    sym(k * k.transpose()).copy_to(out);
  }

  void log(In x, In y, Out out) const override {
    const Matrix<T> l = cholesky(this->square(x));
    const Matrix<T> k = cholesky(this->square(y));
    Matrix<T> w(n_, n_);
    chol_.log(l.values(), k.values(), w.values());
    dphi_inv(l, w).copy_to(out);
  }

  T dist(In x, In y) const override {
    return chol_.dist(cholesky(this->square(x)).values(), cholesky(this->square(y)).values());
  }

  void retr(In x, In u, Out out) const override { exp(x, u, out); }

  void ptransp(In x, In y, In v, Out out) const override {
    const Matrix<T> l = cholesky(this->square(x));
    const Matrix<T> k = cholesky(this->square(y));
    Matrix<T> w(n_, n_);
    chol_.ptransp(l.values(), k.values(), dphi(l, this->square(v)).values(), w.values());
    dphi_inv(k, w).copy_to(out);
  }

  void random_point(Rng& rng, Out out) const override { detail::spd_random<T>(rng, n_).copy_to(out); }

  T point_error(In x) const override { return detail::spd_point_error(this->square(x)); }
  T vector_error(In, In v) const override { return detail::symmetric_vector_error(this->square(v)); }

  bool retr_is_exp() const override { return true; }

 private:
  Matrix<T> dphi(const Matrix<T>& l, const Matrix<T>& u) const {
    const Matrix<T> left = solve_triangular(l, sym(u), Triangle::Lower);
    Matrix<T> inner = solve_triangular(l, left, Triangle::Lower, Side::Right, Transpose::Yes);
    inner = detail::lower(inner);
    for (std::size_t i = 0; i < n_; ++i) inner(i, i) *= T(0.5);
    return l * inner;
  }
  static Matrix<T> dphi_inv(const Matrix<T>& l, const Matrix<T>& w) {
    const Matrix<T> a = w * l.transpose();
    return sym(a + a.transpose());
  }

  CholeskyManifold<T> chol_;
  std::size_t n_;
};

}  // namespace riemopt
