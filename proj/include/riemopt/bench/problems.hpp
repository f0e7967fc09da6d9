#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "riemopt/checks.hpp"
#include "riemopt/error.hpp"
#include "riemopt/linalg.hpp"
#include "riemopt/manifolds.hpp"
#include "riemopt/optimizers.hpp"
#include "riemopt/random.hpp"
#include "riemopt/tensor.hpp"

namespace riemopt::bench {

/// An objective over a batch of manifold points.
template <typename T>
struct Problem {
  using Field = std::function<T(const Tensor<T>&)>;
  using VectorField = std::function<Tensor<T>(const Tensor<T>&)>;

  std::string name;
  ManifoldDescriptor descriptor;
  Shape batch_shape;
  std::function<Tensor<T>(std::uint64_t)> initial_point;
  Field objective;
  /// Gradient consumed by the optimizer, of kind `gradient_kind`.
  VectorField gradient;
  GradientKind gradient_kind = GradientKind::Euclidean;
  /// Analytic ambient gradient, when one exists, for gradient checks.
  VectorField euclidean_gradient;
  std::optional<double> optimal_value;
  Field distance_to_optimum;

  Shape value_shape() const {
    Shape s = batch_shape;
    const Shape p = point_shape(descriptor);
    s.insert(s.end(), p.begin(), p.end());
    return s;
  }
};

struct ProblemSize {
  std::size_t points = 0;
  std::size_t dim = 0;
  std::size_t rank = 0;
};

inline const std::vector<std::string>& list_problems() {
  static const std::vector<std::string> names = {"pole",     "rayleigh", "subspace",
                                                 "procrustes_so3", "spd_mean", "poincare_stress"};
  return names;
}

namespace detail {

/// Decorrelates the starting-point stream from the problem-data stream
/// drawn from the same seed (splitmix64 finalizer).
inline std::uint64_t start_seed(std::uint64_t seed) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

template <typename T>
Matrix<T> random_symmetric(Rng& rng, std::size_t n) {
  Matrix<T> g(n, n);
  for (auto& v : g.values()) v = static_cast<T>(rng.normal());
  return sym(g);
}

template <typename T>
Matrix<T> as_matrix(const Tensor<T>& x, std::size_t rows, std::size_t cols) {
  return Matrix<T>::from_span(rows, cols, x.values());
}

template <typename T>
Tensor<T> as_tensor(const Matrix<T>& m, Shape shape) {
  std::vector<T> v(m.values().begin(), m.values().end());
  return Tensor<T>(std::move(shape), std::move(v));
}

}  // namespace detail

/// N points on the circle pulled toward the pole (0, 1); the loss is the
/// norm of the whole N x 2 difference array.
template <typename T>
Problem<T> make_pole(std::size_t n_points) {
  if (n_points == 0) throw ConfigError("pole needs at least one point");
  Problem<T> p;
  p.name = "pole";
  p.descriptor = make_descriptor(ManifoldKind::Sphere, {2});
  p.batch_shape = {n_points};
  auto m = make_manifold<T>(p.descriptor);
  p.initial_point = [m, n_points](std::uint64_t seed) { return random(*m, {n_points}, seed); };
  auto diff_norm = [](const Tensor<T>& x) {
    T s(0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const T d = x[i] - (i % 2 == 1 ? T(1) : T(0));
      s += d * d;
    }
    return std::sqrt(s);
  };
  p.objective = diff_norm;
  p.gradient = [diff_norm](const Tensor<T>& x) {
    Tensor<T> g(x.shape());
    const T norm = diff_norm(x);
    // The norm has no gradient at the optimum; report a zero subgradient.
    if (norm == T(0)) return g;
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = (x[i] - (i % 2 == 1 ? T(1) : T(0))) / norm;
    return g;
  };
  p.euclidean_gradient = p.gradient;
  p.optimal_value = 0.0;
  p.distance_to_optimum = [m, n_points](const Tensor<T>& x) {
    const std::vector<T> pole{T(0), T(1)};
    T s(0);
    for (std::size_t r = 0; r < n_points; ++r) {
      const T d = m->dist(x.row(r, 2), pole);
      s += d * d;
    }
    return std::sqrt(s);
  };
  return p;
}

/// x^T A x on the unit sphere; the minimum is the smallest eigenvalue.
template <typename T>
Problem<T> make_rayleigh(const Matrix<T>& a) {
  const std::size_t n = a.rows();
  const SymEig<T> eig = sym_eig(a);
  Problem<T> p;
  p.name = "rayleigh";
  p.descriptor = make_descriptor(ManifoldKind::Sphere, {n});
  auto m = make_manifold<T>(p.descriptor);
  p.initial_point = [m](std::uint64_t seed) { return random(*m, {}, detail::start_seed(seed)); };
  p.objective = [a, n](const Tensor<T>& x) {
    const Matrix<T> v = detail::as_matrix(x, n, 1);
    return (v.transpose() * a * v)(0, 0);
  };
  p.gradient = [a, n](const Tensor<T>& x) {
    return detail::as_tensor<T>(a * detail::as_matrix(x, n, 1) * T(2), {n});
  };
  p.euclidean_gradient = p.gradient;
  p.optimal_value = static_cast<double>(eig.values[0]);
  std::vector<T> v0(n), v1(n);
  for (std::size_t i = 0; i < n; ++i) {
    v0[i] = eig.vectors(i, 0);
    v1[i] = -v0[i];
  }
  p.distance_to_optimum = [m, v0, v1](const Tensor<T>& x) {
    return std::min(m->dist(x.values(), v0), m->dist(x.values(), v1));
  };
  return p;
}

template <typename T>
Problem<T> make_rayleigh(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return make_rayleigh(detail::random_symmetric<T>(rng, n));
}

/// -tr(X^T A X) over p-dimensional subspaces; the minimum is minus the sum
/// of the p largest eigenvalues, attained at the dominant eigenspace.
template <typename T>
Problem<T> make_subspace(const Matrix<T>& a, std::size_t rank) {
  const std::size_t n = a.rows();
  const SymEig<T> eig = sym_eig(a);
  Problem<T> p;
  p.name = "subspace";
  p.descriptor = make_descriptor(ManifoldKind::Grassmannian, {n, rank});
  auto m = make_manifold<T>(p.descriptor);
  p.initial_point = [m](std::uint64_t seed) { return random(*m, {}, detail::start_seed(seed)); };
  p.objective = [a, n, rank](const Tensor<T>& x) {
    const Matrix<T> xm = detail::as_matrix(x, n, rank);
    return -(xm.transpose() * a * xm).trace();
  };
  p.gradient = [a, n, rank](const Tensor<T>& x) {
    return detail::as_tensor<T>(a * detail::as_matrix(x, n, rank) * T(-2), {n, rank});
  };
  p.euclidean_gradient = p.gradient;
  double top = 0.0;
  Matrix<T> best(n, rank);
  for (std::size_t k = 0; k < rank; ++k) {
    top += static_cast<double>(eig.values[n - 1 - k]);
    for (std::size_t i = 0; i < n; ++i) best(i, k) = eig.vectors(i, n - 1 - k);
  }
  p.optimal_value = -top;
  std::vector<T> best_flat(best.values().begin(), best.values().end());
  p.distance_to_optimum = [m, best_flat](const Tensor<T>& x) { return m->dist(x.values(), best_flat); };
  return p;
}

template <typename T>
Problem<T> make_subspace(std::size_t n, std::size_t rank, std::uint64_t seed) {
  if (rank == 0 || rank > n) throw ConfigError("subspace rank must lie in [1, dim]");
  Rng rng(seed);
  return make_subspace(detail::random_symmetric<T>(rng, n), rank);
}

/// ||R A - B||_F^2 over SO(3) with B = R* A for a seeded rotation R*.
template <typename T>
Problem<T> make_procrustes_so3(std::uint64_t seed) {
  constexpr std::size_t n = 3;
  Problem<T> p;
  p.name = "procrustes_so3";
  p.descriptor = make_descriptor(ManifoldKind::SpecialOrthogonal, {n});
  auto m = make_manifold<T>(p.descriptor);
  Rng rng(seed);
  Matrix<T> a(n, n);
  for (auto& v : a.values()) v = static_cast<T>(rng.normal());
  std::vector<T> target(n * n);
  m->random_point(rng, target);
  const Matrix<T> b = Matrix<T>::from_span(n, n, std::span<const T>(target)) * a;
  p.initial_point = [m](std::uint64_t s) { return random(*m, {}, detail::start_seed(s)); };
  p.objective = [a, b](const Tensor<T>& x) {
    const Matrix<T> r = detail::as_matrix(x, n, n) * a - b;
    return frobenius_inner(r, r);
  };
  p.gradient = [a, b](const Tensor<T>& x) {
    const Matrix<T> r = detail::as_matrix(x, n, n) * a - b;
    return detail::as_tensor<T>(r * a.transpose() * T(2), {n, n});
  };
  p.euclidean_gradient = p.gradient;
  p.optimal_value = 0.0;
  p.distance_to_optimum = [m, target](const Tensor<T>& x) { return m->dist(x.values(), target); };
  return p;
}

/// Karcher mean of SPD anchors under the affine-invariant metric. The
/// optimizer receives the native Riemannian gradient.
template <typename T>
Problem<T> make_spd_mean(const std::vector<Matrix<T>>& anchors) {
  if (anchors.empty()) throw ConfigError("spd_mean needs at least one anchor");
  const std::size_t n = anchors[0].rows();
  Problem<T> p;
  p.name = "spd_mean";
  p.descriptor = make_descriptor(ManifoldKind::SPDAffineInvariant, {n});
  auto m = make_manifold<T>(p.descriptor);
  std::vector<std::vector<T>> flat;
  for (const auto& a : anchors) flat.emplace_back(a.values().begin(), a.values().end());
  p.initial_point = [m](std::uint64_t seed) { return random(*m, {}, detail::start_seed(seed)); };
  // Evaluated at the symmetric part so finite differences may probe
  // asymmetric neighbours.
  auto symmetric = [n](const Tensor<T>& x) {
    const Matrix<T> s = sym(detail::as_matrix(x, n, n));
    return std::vector<T>(s.values().begin(), s.values().end());
  };
  p.objective = [m, flat, symmetric](const Tensor<T>& x) {
    const std::vector<T> xs = symmetric(x);
    T f(0);
    for (const auto& a : flat) {
      const T d = m->dist(xs, a);
      f += d * d;
    }
    return f;
  };
  auto riemannian = [m, flat, symmetric, n](const Tensor<T>& x) {
    const std::vector<T> xs = symmetric(x);
    Tensor<T> g({n, n});
    std::vector<T> l(n * n);
    for (const auto& a : flat) {
      m->log(xs, a, l);
      for (std::size_t i = 0; i < l.size(); ++i) g[i] -= T(2) * l[i];
    }
    return g;
  };
  p.gradient = riemannian;
  p.gradient_kind = GradientKind::Riemannian;
  // rgrad = X sym(G) X, hence G = X^{-1} rgrad X^{-1}.
  p.euclidean_gradient = [riemannian, symmetric, n](const Tensor<T>& x) {
    const std::vector<T> xs = symmetric(x);
    const Matrix<T> xinv = inv_spd(Matrix<T>::from_span(n, n, std::span<const T>(xs)));
    const Matrix<T> r = detail::as_matrix(riemannian(x), n, n);
    return detail::as_tensor<T>(xinv * r * xinv, {n, n});
  };
  if (anchors.size() == 2) {
    // Geodesic midpoint A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}.
    const Matrix<T> ah = sqrtm_spd(anchors[0]);
    const Matrix<T> aih = invsqrtm_spd(anchors[0]);
    const Matrix<T> mid = ah * sqrtm_spd(sym(aih * anchors[1] * aih)) * ah;
    std::vector<T> midf(mid.values().begin(), mid.values().end());
    p.optimal_value = static_cast<double>(m->dist(midf, flat[0]) * m->dist(midf, flat[0]) +
                                          m->dist(midf, flat[1]) * m->dist(midf, flat[1]));
    p.distance_to_optimum = [m, midf](const Tensor<T>& x) { return m->dist(x.values(), midf); };
  }
  return p;
}

template <typename T>
Problem<T> make_spd_mean(std::size_t n, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Matrix<T>> anchors;
  for (std::size_t i = 0; i < k; ++i) anchors.push_back(riemopt::detail::spd_random<T>(rng, n));
  return make_spd_mean(anchors);
}

/// Hyperbolic multidimensional scaling of a seeded random tree metric in
/// the Poincare disk. Gradients are central differences.
template <typename T>
Problem<T> make_poincare_stress(std::size_t n_points, std::uint64_t seed) {
  if (n_points < 2) throw ConfigError("poincare_stress needs at least two points");
  Problem<T> p;
  p.name = "poincare_stress";
  p.descriptor = make_descriptor(ManifoldKind::Poincare, {2});
  p.batch_shape = {n_points};
  auto m = make_manifold<T>(p.descriptor);

  // Random recursive tree: node i hangs off a uniformly chosen earlier node.
  Rng rng(seed);
  std::vector<std::size_t> parent(n_points, 0);
  std::vector<double> weight(n_points, 0.0);
  for (std::size_t i = 1; i < n_points; ++i) {
    parent[i] = static_cast<std::size_t>(rng.index(i));
    weight[i] = rng.uniform(0.5, 1.0);
  }
  std::vector<double> depth(n_points, 0.0);
  for (std::size_t i = 1; i < n_points; ++i) depth[i] = depth[parent[i]] + weight[i];
  auto ancestors = [&](std::size_t i) {
    std::vector<std::size_t> path{i};
    while (i != 0) path.push_back(i = parent[i]);
    return path;
  };
  std::vector<T> target(n_points * n_points, T(0));
  for (std::size_t i = 0; i < n_points; ++i) {
    const auto pi = ancestors(i);
    for (std::size_t j = 0; j < i; ++j) {
      const auto pj = ancestors(j);
      std::size_t lca = 0;
      for (std::size_t a : pi)
        if (std::find(pj.begin(), pj.end(), a) != pj.end()) {
          lca = a;
          break;
        }
      target[i * n_points + j] = target[j * n_points + i] =
          static_cast<T>(depth[i] + depth[j] - 2.0 * depth[lca]);
    }
  }

  p.initial_point = [m, n_points](std::uint64_t s) { return random(*m, {n_points}, detail::start_seed(s)); };
  p.objective = [m, n_points, target](const Tensor<T>& x) {
    T f(0);
    for (std::size_t i = 0; i < n_points; ++i)
      for (std::size_t j = i + 1; j < n_points; ++j) {
        const T e = m->dist(x.row(i, 2), x.row(j, 2)) - target[i * n_points + j];
        f += e * e;
      }
    return f;
  };
  auto objective = p.objective;
  p.gradient = [objective](const Tensor<T>& x) {
    return central_diff_grad<T>(objective, x, std::is_same_v<T, float> ? T(1e-3) : T(1e-6));
  };
  return p;
}

/// Builds a named problem; zero sizes select the defaults.
template <typename T>
Problem<T> build_problem(const std::string& name, ProblemSize size, std::uint64_t seed) {
  auto pick = [](std::size_t v, std::size_t fallback) { return v ? v : fallback; };
  if (name == "pole") return make_pole<T>(pick(size.points, 16));
  if (name == "rayleigh") return make_rayleigh<T>(pick(size.dim, 10), seed);
  if (name == "subspace") return make_subspace<T>(pick(size.dim, 10), pick(size.rank, 3), seed);
  if (name == "procrustes_so3") return make_procrustes_so3<T>(seed);
  if (name == "spd_mean") return make_spd_mean<T>(pick(size.dim, 3), pick(size.points, 2), seed);
  if (name == "poincare_stress") return make_poincare_stress<T>(pick(size.points, 8), seed);
  throw UnknownProblem("unknown problem '" + name + "'");
}

/// Gradient check of a problem's analytic Euclidean gradient at x.
template <typename T>
CheckReport check_gradient(const Problem<T>& p, const Tensor<T>& x, T h = T(1e-6), double tol = 1e-5) {
  if (!p.euclidean_gradient) throw Unsupported(p.name + " has no analytic Euclidean gradient");
  CheckReport r = riemopt::check_gradient<T>(p.objective, p.euclidean_gradient, x, h, tol);
  r.subject = p.name;
  return r;
}

}  // namespace riemopt::bench
