#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "riemopt/manifolds/manifold.hpp"

namespace riemopt {

/// Cartesian product. A point is the concatenation of the component points
/// along the trailing axis; every operator acts slice by slice.
template <typename T>
class Product final : public Manifold<T> {
  using Base = Manifold<T>;
  using typename Base::In;
  using typename Base::Out;

 public:
  struct Component {
    ManifoldPtr<T> manifold;
    std::size_t offset;
    std::size_t size;
  };

  Product(ManifoldDescriptor d, std::vector<Component> components)
      : Base(std::move(d)), components_(std::move(components)) {}

  const std::vector<Component>& components() const noexcept { return components_; }

  T inner(In x, In u, In v) const override {
    T s(0);
    for (const auto& c : components_) s += c.manifold->inner(sl(x, c), sl(u, c), sl(v, c));
    return s;
  }
  void proju(In x, In u, Out out) const override {
    for (const auto& c : components_) c.manifold->proju(sl(x, c), sl(u, c), sl(out, c));
  }
  void projx(In x, Out out) const override {
    for (const auto& c : components_) c.manifold->projx(sl(x, c), sl(out, c));
  }
  void egrad2rgrad(In x, In g, Out out) const override {
    for (const auto& c : components_) c.manifold->egrad2rgrad(sl(x, c), sl(g, c), sl(out, c));
  }
  void exp(In x, In u, Out out) const override {
    for (const auto& c : components_) c.manifold->exp(sl(x, c), sl(u, c), sl(out, c));
  }
  void log(In x, In y, Out out) const override {
    for (const auto& c : components_) c.manifold->log(sl(x, c), sl(y, c), sl(out, c));
  }
  void retr(In x, In u, Out out) const override {
    for (const auto& c : components_) c.manifold->retr(sl(x, c), sl(u, c), sl(out, c));
  }
  void transp(In x, In y, In v, Out out) const override {
    for (const auto& c : components_) c.manifold->transp(sl(x, c), sl(y, c), sl(v, c), sl(out, c));
  }
  void ptransp(In x, In y, In v, Out out) const override {
    for (const auto& c : components_) c.manifold->ptransp(sl(x, c), sl(y, c), sl(v, c), sl(out, c));
  }
  T dist(In x, In y) const override {
    T s(0);
    for (const auto& c : components_) {
      const T d = c.manifold->dist(sl(x, c), sl(y, c));
      s += d * d;
    }
    return std::sqrt(s);
  }
  void random_point(Rng& rng, Out out) const override {
    for (const auto& c : components_) c.manifold->random_point(rng, sl(out, c));
  }
  T point_error(In x) const override {
    T e(0);
    for (const auto& c : components_) e = std::max(e, c.manifold->point_error(sl(x, c)));
    return e;
  }
  T vector_error(In x, In v) const override {
    T e(0);
    for (const auto& c : components_) e = std::max(e, c.manifold->vector_error(sl(x, c), sl(v, c)));
    return e;
  }

  bool has_exp() const override {
    return std::all_of(components_.begin(), components_.end(), [](const auto& c) { return c.manifold->has_exp(); });
  }
  bool has_log() const override {
    return std::all_of(components_.begin(), components_.end(), [](const auto& c) { return c.manifold->has_log(); });
  }
  bool has_ptransp() const override {
    return std::all_of(components_.begin(), components_.end(),
                       [](const auto& c) { return c.manifold->has_ptransp(); });
  }
  bool retr_is_exp() const override {
    return std::all_of(components_.begin(), components_.end(),
                       [](const auto& c) { return c.manifold->retr_is_exp(); });
  }

 private:
  static In sl(In x, const Component& c) { return x.subspan(c.offset, c.size); }
  static Out sl(Out x, const Component& c) { return x.subspan(c.offset, c.size); }

  std::vector<Component> components_;
};

}  // namespace riemopt
