#pragma once

#include <memory>
#include <vector>

#include "riemopt/manifolds/descriptor.hpp"
#include "riemopt/manifolds/euclidean.hpp"
#include "riemopt/manifolds/hyperbolic.hpp"
#include "riemopt/manifolds/manifold.hpp"
#include "riemopt/manifolds/product.hpp"
#include "riemopt/manifolds/special_orthogonal.hpp"
#include "riemopt/manifolds/spd.hpp"
#include "riemopt/manifolds/sphere.hpp"
#include "riemopt/manifolds/stiefel.hpp"

namespace riemopt {

/// Builds the operator set for a descriptor.
template <typename T>
ManifoldPtr<T> make_manifold(const ManifoldDescriptor& d) {
  validate(d);
  switch (d.kind) {
    case ManifoldKind::Euclidean: return std::make_shared<Euclidean<T>>(d);
    case ManifoldKind::Sphere: return std::make_shared<Sphere<T>>(d);
    case ManifoldKind::Hyperboloid: return std::make_shared<Hyperboloid<T>>(d);
    case ManifoldKind::Poincare: return std::make_shared<Poincare<T>>(d);
    case ManifoldKind::StiefelEuclidean: return std::make_shared<StiefelEuclidean<T>>(d);
    case ManifoldKind::Grassmannian: return std::make_shared<Grassmannian<T>>(d);
    case ManifoldKind::SpecialOrthogonal: return std::make_shared<SpecialOrthogonal<T>>(d);
    case ManifoldKind::SPDAffineInvariant: return std::make_shared<SPDAffineInvariant<T>>(d);
    case ManifoldKind::SPDLogEuclidean: return std::make_shared<SPDLogEuclidean<T>>(d);
    case ManifoldKind::SPDLogCholesky: return std::make_shared<SPDLogCholesky<T>>(d);
    case ManifoldKind::Cholesky: return std::make_shared<CholeskyManifold<T>>(d);
    case ManifoldKind::Product: {
      std::vector<typename Product<T>::Component> parts;
      for (const auto& slice : d.components)
        parts.push_back({make_manifold<T>(slice.descriptor), slice.offset, slice.size});
      return std::make_shared<Product<T>>(d, std::move(parts));
    }
  }
  throw ShapeError("unknown manifold kind");
}

template <typename T>
ManifoldPtr<T> make_manifold(std::string_view text) {
  return make_manifold<T>(parse_descriptor(text));
}

}  // namespace riemopt
