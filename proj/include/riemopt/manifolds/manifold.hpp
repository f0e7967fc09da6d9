#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "riemopt/error.hpp"
#include "riemopt/linalg.hpp"
#include "riemopt/manifolds/descriptor.hpp"
#include "riemopt/random.hpp"
#include "riemopt/tensor.hpp"

namespace riemopt {

/// Operator set of a Riemannian manifold, evaluated on a single point.
///
/// Every kernel receives flat row-major views of one point (and of tangent
/// vectors at it) and writes into a caller-provided buffer of the same
/// length. Batched evaluation over leading axes is provided by the free
/// functions at the bottom of this header.
///
/// Kinds without a closed-form exponential map, logarithm or parallel
/// transport throw Unsupported from those kernels and report it through
/// has_exp() / has_log() / has_ptransp(); callers fall back to retr and
/// transp.
template <typename T>
class Manifold {
 public:
  using In = std::span<const T>;
  using Out = std::span<T>;

  explicit Manifold(ManifoldDescriptor descriptor)
      : descriptor_(std::move(descriptor)),
        shape_(riemopt::point_shape(descriptor_)),
        size_(shape_size(shape_)) {}
  virtual ~Manifold() = default;

  Manifold(const Manifold&) = delete;
  Manifold& operator=(const Manifold&) = delete;

  const ManifoldDescriptor& descriptor() const noexcept { return descriptor_; }
  std::string name() const { return to_string(descriptor_); }
  const Shape& point_shape() const noexcept { return shape_; }
  std::size_t point_size() const noexcept { return size_; }

  /// Riemannian metric at x.
  virtual T inner(In x, In u, In v) const = 0;
  T norm(In x, In u) const { return std::sqrt(std::max(T(0), inner(x, u, u))); }

  /// Projection of an ambient vector onto the tangent space at x.
  virtual void proju(In x, In u, Out out) const = 0;
  /// Projection of an ambient point onto the manifold.
  virtual void projx(In x, Out out) const = 0;
  /// Riemannian gradient from a Euclidean (ambient) gradient.
  virtual void egrad2rgrad(In x, In g, Out out) const { proju(x, g, out); }

  virtual void exp(In, In, Out) const { throw Unsupported(name() + ": exp has no closed form, use retr"); }
  virtual void log(In, In, Out) const { throw Unsupported(name() + ": log has no closed form"); }
  virtual void retr(In x, In u, Out out) const = 0;
  /// First-order vector transport; defaults to projection at y.
  virtual void transp(In, In y, In v, Out out) const { proju(y, v, out); }
  virtual void ptransp(In, In, In, Out) const {
    throw Unsupported(name() + ": parallel transport has no closed form, use transp");
  }
  virtual T dist(In x, In y) const {
    std::vector<T> u(size_);
    log(x, y, u);
    return norm(x, u);
  }

  virtual void random_point(Rng& rng, Out out) const = 0;

  /// Violation of the membership conditions; 0 for an exact member.
  virtual T point_error(In x) const = 0;
  /// Violation of tangency at x; defaults to max |proju(x, v) - v|.
  virtual T vector_error(In x, In v) const {
    std::vector<T> p(size_);
    proju(x, v, p);
    T err(0);
    for (std::size_t i = 0; i < size_; ++i) err = std::max(err, std::abs(p[i] - v[i]));
    return std::isfinite(err) ? err : std::numeric_limits<T>::infinity();
  }
  bool check_point(In x, T tol) const { return point_error(x) <= tol; }
  bool check_vector(In x, In v, T tol) const { return vector_error(x, v) <= tol; }

  virtual bool has_exp() const { return true; }
  virtual bool has_log() const { return has_exp(); }
  virtual bool has_ptransp() const { return true; }
  /// True when retr is the exponential map itself.
  virtual bool retr_is_exp() const { return false; }

 protected:
  static bool is_zero(In u) {
    return std::all_of(u.begin(), u.end(), [](T v) { return v == T(0); });
  }
  static void copy(In from, Out to) { std::copy(from.begin(), from.end(), to.begin()); }
  static void fill_zero(Out out) { std::fill(out.begin(), out.end(), T(0)); }
  static T dot(In a, In b) {
    T s(0);
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }
  static bool all_finite(In a) {
    return std::all_of(a.begin(), a.end(), [](T v) { return std::isfinite(v); });
  }

  /// Square matrix view of a point for the n x n kinds.
  Matrix<T> square(In x) const { return Matrix<T>::from_span(shape_[0], shape_[0], x); }
  Matrix<T> rect(In x) const { return Matrix<T>::from_span(shape_[0], shape_[1], x); }

 private:
  ManifoldDescriptor descriptor_;
  Shape shape_;
  std::size_t size_;
};

template <typename T>
using ManifoldPtr = std::shared_ptr<const Manifold<T>>;

// ---------------------------------------------------------------------------
// Batched operators. Leading axes are batch axes; a tensor holding a single
// point broadcasts against a batch of any size.
// ---------------------------------------------------------------------------

namespace detail {

struct BatchInfo {
  Shape batch_shape;
  std::size_t count = 1;
};

template <typename T>
BatchInfo batch_info(const Manifold<T>& m, const Tensor<T>& t, const char* arg) {
  const Shape& ps = m.point_shape();
  const Shape& ts = t.shape();
  if (ts.size() < ps.size() || !std::equal(ps.begin(), ps.end(), ts.end() - static_cast<std::ptrdiff_t>(ps.size()))) {
    throw ShapeError(std::string(arg) + " of shape " + shape_string(ts) + " does not end with point shape " +
                     shape_string(ps) + " of " + m.name());
  }
  BatchInfo info;
  info.batch_shape.assign(ts.begin(), ts.end() - static_cast<std::ptrdiff_t>(ps.size()));
  info.count = shape_size(info.batch_shape);
  return info;
}

inline BatchInfo broadcast(const BatchInfo& a, const BatchInfo& b) {
  if (a.count == 1 && a.batch_shape.size() <= b.batch_shape.size()) return b;
  if (b.count == 1) return a;
  if (a.batch_shape != b.batch_shape) {
    throw ShapeError("batch shapes " + shape_string(a.batch_shape) + " and " + shape_string(b.batch_shape) +
                     " do not broadcast");
  }
  return a;
}

template <typename T>
std::span<const T> point_row(const Tensor<T>& t, const BatchInfo& info, std::size_t r, std::size_t size) {
  return t.row(info.count == 1 ? 0 : r, size);
}

template <typename T>
Shape with_point_shape(const BatchInfo& b, const Manifold<T>& m) {
  Shape s = b.batch_shape;
  s.insert(s.end(), m.point_shape().begin(), m.point_shape().end());
  return s;
}

template <typename T, typename... Ts>
BatchInfo common_batch(const Manifold<T>& m, const Tensor<T>& first, const Ts&... rest) {
  BatchInfo b = batch_info(m, first, "argument");
  ((b = broadcast(b, batch_info(m, rest, "argument"))), ...);
  return b;
}

/// Applies a vector-valued kernel row by row.
template <typename T, typename Kernel, typename... Ts, std::size_t... I>
Tensor<T> map_vector_impl(const Manifold<T>& m, Kernel& kernel, std::index_sequence<I...>, const Ts&... args) {
  const BatchInfo b = common_batch(m, args...);
  const BatchInfo infos[] = {batch_info(m, args, "argument")...};
  const std::size_t n = m.point_size();
  Tensor<T> out(with_point_shape(b, m));
  for (std::size_t r = 0; r < b.count; ++r) kernel(point_row(args, infos[I], r, n)..., out.row(r, n));
  return out;
}

template <typename T, typename Kernel, typename... Ts>
Tensor<T> map_vector(const Manifold<T>& m, Kernel&& kernel, const Ts&... args) {
  return map_vector_impl(m, kernel, std::index_sequence_for<Ts...>{}, args...);
}

template <typename T, typename Kernel, typename... Ts, std::size_t... I>
Tensor<T> map_scalar_impl(const Manifold<T>& m, Kernel& kernel, std::index_sequence<I...>, const Ts&... args) {
  const BatchInfo b = common_batch(m, args...);
  const BatchInfo infos[] = {batch_info(m, args, "argument")...};
  const std::size_t n = m.point_size();
  Tensor<T> out(b.batch_shape);
  for (std::size_t r = 0; r < b.count; ++r) out[r] = kernel(point_row(args, infos[I], r, n)...);
  return out;
}

template <typename T, typename Kernel, typename... Ts>
Tensor<T> map_scalar(const Manifold<T>& m, Kernel&& kernel, const Ts&... args) {
  return map_scalar_impl(m, kernel, std::index_sequence_for<Ts...>{}, args...);
}

}  // namespace detail

template <typename T>
Tensor<T> inner(const Manifold<T>& m, const Tensor<T>& x, const Tensor<T>& u, const Tensor<T>& v) {
  return detail::map_scalar(m, [&](auto a, auto b, auto c) { return m.inner(a, b, c); }, x, u, v);
}
template <typename T>
Tensor<T> norm(const Manifold<T>& m, const Tensor<T>& x, const Tensor<T>& u) {
  return detail::map_scalar(m, [&](auto a, auto b) { return m.norm(a, b); }, x, u);
}
template <typename T>
Tensor<T> proju(const Manifold<T>& m, const Tensor<T>& x, const Tensor<T>& u) {
  return detail::map_vector(m, [&](auto a, auto b, auto out) { m.proju(a, b, out); }, x, u);
}
template <typename T>
Tensor<T> projx(const Manifold<T>& m, const Tensor<T>& x) {
  return detail::map_vector(m, [&](auto a, auto out) { m.projx(a, out); }, x);
}
template <typename T>
Tensor<T> egrad2rgrad(const Manifold<T>& m, const Tensor<T>& x, const Tensor<T>& g) {
  return detail::map_vector(m, [&](auto a, auto b, auto out) { m.egrad2rgrad(a, b, out); }, x, g);
}
template <typename T>
Tensor<T> exp(const Manifold<T>& m, const Tensor<T>& x, const Tensor<T>& u) {
  return detail::map_vector(m, [&](auto a, auto b, auto out) { m.exp(a, b, out); }, x, u);
}
template <typename T>
Tensor<T> log(const Manifold<T>& m, const Tensor<T>& x, const Tensor<T>& y) {
  return detail::map_vector(m, [&](auto a, auto b, auto out) { m.log(a, b, out); }, x, y);
}
template <typename T>
Tensor<T> retr(const Manifold<T>& m, const Tensor<T>& x, const Tensor<T>& u) {
  return detail::map_vector(m, [&](auto a, auto b, auto out) { m.retr(a, b, out); }, x, u);
}
template <typename T>
Tensor<T> transp(const Manifold<T>& m, const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& v) {
  return detail::map_vector(m, [&](auto a, auto b, auto c, auto out) { m.transp(a, b, c, out); }, x, y, v);
}
template <typename T>
Tensor<T> ptransp(const Manifold<T>& m, const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& v) {
  return detail::map_vector(m, [&](auto a, auto b, auto c, auto out) { m.ptransp(a, b, c, out); }, x, y, v);
}
template <typename T>
Tensor<T> dist(const Manifold<T>& m, const Tensor<T>& x, const Tensor<T>& y) {
  return detail::map_scalar(m, [&](auto a, auto b) { return m.dist(a, b); }, x, y);
}

/// Deterministic batch of random points.
template <typename T>
Tensor<T> random(const Manifold<T>& m, const Shape& batch_shape, std::uint64_t seed) {
  Rng rng(seed);
  detail::BatchInfo b{batch_shape, shape_size(batch_shape)};
  Tensor<T> out(detail::with_point_shape(b, m));
  for (std::size_t r = 0; r < b.count; ++r) m.random_point(rng, out.row(r, m.point_size()));
  return out;
}

/// True iff every batch row is a member within tol.
template <typename T>
bool check_point(const Manifold<T>& m, const Tensor<T>& x, T tol) {
  const auto info = detail::batch_info(m, x, "point");
  for (std::size_t r = 0; r < info.count; ++r)
    if (!m.check_point(x.row(r, m.point_size()), tol)) return false;
  return true;
}

template <typename T>
bool check_vector(const Manifold<T>& m, const Tensor<T>& x, const Tensor<T>& v, T tol) {
  const Tensor<T> ok = detail::map_scalar(
      m, [&](auto a, auto b) { return m.check_vector(a, b, tol) ? T(1) : T(0); }, x, v);
  return std::all_of(ok.values().begin(), ok.values().end(), [](T f) { return f == T(1); });
}

}  // namespace riemopt
