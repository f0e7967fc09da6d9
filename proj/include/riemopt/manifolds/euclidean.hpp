#pragma once

#include <cmath>
#include <limits>

#include "riemopt/manifolds/manifold.hpp"

namespace riemopt {

/// Unconstrained space with the standard dot product.
template <typename T>
class Euclidean final : public Manifold<T> {
  using Base = Manifold<T>;
  using typename Base::In;
  using typename Base::Out;

 public:
  explicit Euclidean(ManifoldDescriptor d) : Base(std::move(d)) {}

  T inner(In, In u, In v) const override { return Base::dot(u, v); }
  void proju(In, In u, Out out) const override { Base::copy(u, out); }
  void projx(In x, Out out) const override { Base::copy(x, out); }
  void exp(In x, In u, Out out) const override {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + u[i];
  }
  void log(In x, In y, Out out) const override {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = y[i] - x[i];
  }
  void retr(In x, In u, Out out) const override { exp(x, u, out); }
  void transp(In, In, In v, Out out) const override { Base::copy(v, out); }
  void ptransp(In, In, In v, Out out) const override { Base::copy(v, out); }
  T dist(In x, In y) const override {
    T s(0);
    for (std::size_t i = 0; i < x.size(); ++i) s += (y[i] - x[i]) * (y[i] - x[i]);
    return std::sqrt(s);
  }
  void random_point(Rng& rng, Out out) const override {
    for (auto& v : out) v = static_cast<T>(rng.normal());
  }
  T point_error(In x) const override { return Base::all_finite(x) ? T(0) : std::numeric_limits<T>::infinity(); }
  T vector_error(In, In v) const override {
    return Base::all_finite(v) ? T(0) : std::numeric_limits<T>::infinity();
  }
  bool retr_is_exp() const override { return true; }
};

}  // namespace riemopt
