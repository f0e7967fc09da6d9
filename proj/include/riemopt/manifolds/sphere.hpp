#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "riemopt/manifolds/manifold.hpp"

namespace riemopt {

/// Unit sphere in R^n with the induced metric. Points and tangent vectors
/// are length-n vectors; tangent vectors are orthogonal to the base point.
template <typename T>
class Sphere final : public Manifold<T> {
  using Base = Manifold<T>;
  using typename Base::In;
  using typename Base::Out;

 public:
  explicit Sphere(ManifoldDescriptor d) : Base(std::move(d)) {}

  T inner(In, In u, In v) const override { return Base::dot(u, v); }

  void proju(In x, In u, Out out) const override {
    const T c = Base::dot(x, u);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = u[i] - c * x[i];
  }

  void projx(In x, Out out) const override {
    const T n = std::sqrt(Base::dot(x, x));
    if (!(n > T(0))) throw DegenerateInput("sphere: cannot project the zero vector");
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / n;
  }

  void exp(In x, In u, Out out) const override {
    if (Base::is_zero(u)) return Base::copy(x, out);
    const T nu = std::sqrt(Base::dot(u, u));
    const T c = std::cos(nu);
    const T s = nu > Precision<T>::div_guard ? std::sin(nu) / nu : T(1);
    std::vector<T> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = c * x[i] + s * u[i];
    // Renormalize so rounding does not accumulate over many steps.
    projx(y, out);
  }

  void log(In x, In y, Out out) const override {
    const T c = Base::dot(x, y);
    std::vector<T> w(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) w[i] = y[i] - c * x[i];
    const T s = std::sqrt(Base::dot(w, w));
    const T theta = std::atan2(s, c);
    if (theta > std::numbers::pi_v<T> - kCutLocusMargin) {
      throw CutLocus("sphere: log of (nearly) antipodal points is undefined");
    }
    if (!(s > Precision<T>::div_guard)) return Base::fill_zero(out);
    const T k = theta / s;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = k * w[i];
  }

  T dist(In x, In y) const override {
    const T c = Base::dot(x, y);
    T s2(0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const T w = y[i] - c * x[i];
      s2 += w * w;
    }
    return std::atan2(std::sqrt(s2), c);
  }

  void retr(In x, In u, Out out) const override {
    if (Base::is_zero(u)) return Base::copy(x, out);
    std::vector<T> s(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) s[i] = x[i] + u[i];
    projx(s, out);
  }

  void ptransp(In x, In y, In v, Out out) const override {
    std::vector<T> u(x.size());
    log(x, y, u);
    const T theta = std::sqrt(Base::dot(u, u));
    if (!(theta > T(0))) return Base::copy(v, out);
    for (auto& e : u) e /= theta;
    const T a = Base::dot(u, v);
    const T cm1 = std::cos(theta) - T(1);
    const T s = std::sin(theta);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = v[i] + cm1 * a * u[i] - s * a * x[i];
  }

  void random_point(Rng& rng, Out out) const override {
    std::vector<T> g(out.size());
    do {
      for (auto& v : g) v = static_cast<T>(rng.normal());
    } while (Base::dot(g, g) == T(0));
    projx(g, out);
  }

  T point_error(In x) const override {
    const T e = std::abs(std::sqrt(Base::dot(x, x)) - T(1));
    return std::isfinite(e) ? e : std::numeric_limits<T>::infinity();
  }
  T vector_error(In x, In v) const override {
    const T e = std::abs(Base::dot(x, v));
    return std::isfinite(e) ? e : std::numeric_limits<T>::infinity();
  }

 private:
  static constexpr T kCutLocusMargin = T(1e-7);
};

}  // namespace riemopt
