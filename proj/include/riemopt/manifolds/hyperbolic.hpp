#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "riemopt/manifolds/manifold.hpp"

namespace riemopt {

/// Hyperboloid model of n-dimensional hyperbolic space, embedded in
/// Minkowski space R^{n+1} with <x, y>_M = -x0 y0 + sum_i xi yi.
template <typename T>
class Hyperboloid final : public Manifold<T> {
  using Base = Manifold<T>;
  using typename Base::In;
  using typename Base::Out;

 public:
  explicit Hyperboloid(ManifoldDescriptor d) : Base(std::move(d)) {}

  static T minkowski(In a, In b) {
    T s = -a[0] * b[0];
    for (std::size_t i = 1; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }

  T inner(In, In u, In v) const override { return minkowski(u, v); }

  void proju(In x, In u, Out out) const override {
    const T c = minkowski(x, u);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = u[i] + c * x[i];
  }

  void egrad2rgrad(In x, In g, Out out) const override {
    std::vector<T> h(g.begin(), g.end());
    h[0] = -h[0];
    proju(x, h, out);
  }

  void projx(In x, Out out) const override {
    if (Base::is_zero(x)) throw DegenerateInput("hyperboloid: cannot project the zero vector");
    const T q = minkowski(x, x);
    if (q < T(0) && x[0] > T(0)) {
      const T s = std::sqrt(-q);
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / s;
      return;
    }
    T spatial(0);
    for (std::size_t i = 1; i < x.size(); ++i) {
      out[i] = x[i];
      spatial += x[i] * x[i];
    }
    out[0] = std::sqrt(T(1) + spatial);
  }

  void exp(In x, In u, Out out) const override {
    if (Base::is_zero(u)) return Base::copy(x, out);
    const T nu = std::sqrt(std::max(T(0), minkowski(u, u)));
    const T c = std::cosh(nu);
    const T s = nu > Precision<T>::div_guard ? std::sinh(nu) / nu : T(1);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * x[i] + s * u[i];
  }

  void log(In x, In y, Out out) const override {
    const T c = minkowski(x, y);
    std::vector<T> w(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) w[i] = y[i] + c * x[i];
    const T nw = std::sqrt(std::max(T(0), minkowski(w, w)));
    if (!(nw > Precision<T>::div_guard)) return Base::fill_zero(out);
    const T k = std::asinh(nw) / nw;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = k * w[i];
  }

  T dist(In x, In y) const override {
    const T c = minkowski(x, y);
    std::vector<T> w(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) w[i] = y[i] + c * x[i];
    return std::asinh(std::sqrt(std::max(T(0), minkowski(w, w))));
  }

  void retr(In x, In u, Out out) const override { exp(x, u, out); }

  void ptransp(In x, In y, In v, Out out) const override {
    const T k = minkowski(y, v) / (T(1) - minkowski(x, y));
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = v[i] + k * (x[i] + y[i]);
  }

  void random_point(Rng& rng, Out out) const override {
    std::vector<T> z(out.size());
    z[0] = T(1);
    for (std::size_t i = 1; i < z.size(); ++i) z[i] = static_cast<T>(0.5 * rng.normal());
    T spatial(0);
    for (std::size_t i = 1; i < z.size(); ++i) spatial += z[i] * z[i];
    z[0] = std::sqrt(T(1) + spatial);
    Base::copy(z, out);
  }

  T point_error(In x) const override {
    if (!Base::all_finite(x) || !(x[0] > T(0))) return std::numeric_limits<T>::infinity();
    return std::abs(minkowski(x, x) + T(1));
  }
  T vector_error(In x, In v) const override {
    const T e = std::abs(minkowski(x, v));
    return std::isfinite(e) ? e : std::numeric_limits<T>::infinity();
  }

  bool retr_is_exp() const override { return true; }
};

/// Poincare ball of curvature -c: points with c |x|^2 < 1, conformal metric
/// lambda_x^2 <u, v> with lambda_x = 2 / (1 - c |x|^2). Operators use
/// Mobius gyrovector closed forms.
template <typename T>
class Poincare final : public Manifold<T> {
  using Base = Manifold<T>;
  using typename Base::In;
  using typename Base::Out;

 public:
  explicit Poincare(ManifoldDescriptor d)
      : Base(std::move(d)), c_(static_cast<T>(this->descriptor().curvature)), sqrt_c_(std::sqrt(c_)) {}

  /// Points are kept at least this far (relative) inside the boundary.
  static constexpr T kBoundaryMargin = T(1e-5);

  T curvature() const noexcept { return c_; }

  T lambda(In x) const { return T(2) / (T(1) - c_ * Base::dot(x, x)); }

  /// Mobius addition x (+)_c y.
  void mobius_add(In x, In y, Out out) const {
    const T xy = Base::dot(x, y);
    const T x2 = Base::dot(x, x);
    const T y2 = Base::dot(y, y);
    const T a = T(1) + T(2) * c_ * xy + c_ * y2;
    const T b = T(1) - c_ * x2;
    const T den = std::max(T(1) + T(2) * c_ * xy + c_ * c_ * x2 * y2, Precision<T>::div_guard);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (a * x[i] + b * y[i]) / den;
  }

  /// Gyration gyr[a, b] w.
  void gyration(In a, In b, In w, Out out) const {
    const T a2 = Base::dot(a, a);
    const T b2 = Base::dot(b, b);
    const T ab = Base::dot(a, b);
    const T aw = Base::dot(a, w);
    const T bw = Base::dot(b, w);
    const T c2 = c_ * c_;
    const T ka = -c2 * aw * b2 + c_ * bw + T(2) * c2 * ab * bw;
    const T kb = -c2 * bw * a2 - c_ * aw;
    const T d = std::max(T(1) + T(2) * c_ * ab + c2 * a2 * b2, Precision<T>::div_guard);
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] + T(2) * (ka * a[i] + kb * b[i]) / d;
  }

  T inner(In x, In u, In v) const override {
    const T l = lambda(x);
    return l * l * Base::dot(u, v);
  }

  void proju(In, In u, Out out) const override { Base::copy(u, out); }

  void projx(In x, Out out) const override {
    const T n = std::sqrt(Base::dot(x, x));
    const T max_norm = (T(1) - kBoundaryMargin) / sqrt_c_;
    const T s = n > max_norm ? max_norm / n : T(1);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * s;
  }

  void egrad2rgrad(In x, In g, Out out) const override {
    const T l = lambda(x);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = g[i] / (l * l);
  }

  void exp(In x, In u, Out out) const override {
    if (Base::is_zero(u)) return Base::copy(x, out);
    const T nu = std::max(std::sqrt(Base::dot(u, u)), Precision<T>::div_guard);
    const T k = std::tanh(sqrt_c_ * lambda(x) * nu / T(2)) / (sqrt_c_ * nu);
    std::vector<T> second(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) second[i] = k * u[i];
    std::vector<T> sum(u.size());
    mobius_add(x, second, sum);
    projx(sum, out);
  }

  void log(In x, In y, Out out) const override {
    std::vector<T> sub = difference(x, y);
    const T ns = std::sqrt(Base::dot(sub, sub));
    if (!(ns > T(0))) return Base::fill_zero(out);
    const T k = T(2) / (sqrt_c_ * lambda(x)) * artanh(sqrt_c_ * ns) / ns;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = k * sub[i];
  }

  T dist(In x, In y) const override {
    std::vector<T> sub = difference(x, y);
    return T(2) / sqrt_c_ * artanh(sqrt_c_ * std::sqrt(Base::dot(sub, sub)));
  }

  void retr(In x, In u, Out out) const override {
    if (Base::is_zero(u)) return Base::copy(x, out);
    std::vector<T> s(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) s[i] = x[i] + u[i];
    projx(s, out);
  }

  /// Conformal transport along the geodesic: (lambda_x / lambda_y) gyr[y, -x] v.
  void ptransp(In x, In y, In v, Out out) const override {
    std::vector<T> neg(x.begin(), x.end());
    for (auto& e : neg) e = -e;
    gyration(y, neg, v, out);
    const T k = lambda(x) / lambda(y);
    for (auto& e : out) e *= k;
  }

  void random_point(Rng& rng, Out out) const override {
    for (auto& e : out) e = static_cast<T>(0.25 * rng.normal()) / sqrt_c_;
    const T n = std::sqrt(Base::dot(out, out));
    const T cap = T(0.7) / sqrt_c_;
    if (n > cap)
      for (auto& e : out) e *= cap / n;
  }

  T point_error(In x) const override {
    if (!Base::all_finite(x)) return std::numeric_limits<T>::infinity();
    const T r = c_ * Base::dot(x, x);
    return r < T(1) ? T(0) : r;
  }
  T vector_error(In, In v) const override {
    return Base::all_finite(v) ? T(0) : std::numeric_limits<T>::infinity();
  }

 private:
  std::vector<T> difference(In x, In y) const {
    std::vector<T> neg(x.begin(), x.end());
    for (auto& e : neg) e = -e;
    std::vector<T> sub(x.size());
    mobius_add(neg, y, sub);
    return sub;
  }
  static T artanh(T z) { return std::atanh(std::min(z, T(1) - Precision<T>::domain_clamp)); }

  T c_;
  T sqrt_c_;
};

}  // namespace riemopt
