#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "riemopt/error.hpp"
#include "riemopt/tensor.hpp"

namespace riemopt {

enum class ManifoldKind {
  Euclidean,
  Sphere,
  Hyperboloid,
  Poincare,
  StiefelEuclidean,
  Grassmannian,
  SpecialOrthogonal,
  SPDAffineInvariant,
  SPDLogEuclidean,
  SPDLogCholesky,
  Cholesky,
  Product,
};

inline constexpr std::array<ManifoldKind, 12> kAllManifoldKinds = {
    ManifoldKind::Euclidean,          ManifoldKind::Sphere,          ManifoldKind::Hyperboloid,
    ManifoldKind::Poincare,           ManifoldKind::StiefelEuclidean, ManifoldKind::Grassmannian,
    ManifoldKind::SpecialOrthogonal,  ManifoldKind::SPDAffineInvariant, ManifoldKind::SPDLogEuclidean,
    ManifoldKind::SPDLogCholesky,     ManifoldKind::Cholesky,        ManifoldKind::Product,
};

inline std::string_view kind_name(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Euclidean: return "euclidean";
    case ManifoldKind::Sphere: return "sphere";
    case ManifoldKind::Hyperboloid: return "hyperboloid";
    case ManifoldKind::Poincare: return "poincare";
    case ManifoldKind::StiefelEuclidean: return "stiefel";
    case ManifoldKind::Grassmannian: return "grassmannian";
    case ManifoldKind::SpecialOrthogonal: return "so";
    case ManifoldKind::SPDAffineInvariant: return "spd_affine";
    case ManifoldKind::SPDLogEuclidean: return "spd_logeuclidean";
    case ManifoldKind::SPDLogCholesky: return "spd_logcholesky";
    case ManifoldKind::Cholesky: return "cholesky";
    case ManifoldKind::Product: return "product";
  }
  return "unknown";
}

inline std::optional<ManifoldKind> kind_from_name(std::string_view name) {
  for (ManifoldKind k : kAllManifoldKinds)
    if (kind_name(k) == name) return k;
  return std::nullopt;
}

struct ProductSlice;

/// Identifies a geometry. `dims` are the kind's parameters: the ambient
/// length for Sphere, the intrinsic dimension n for Hyperboloid (points
/// live in R^{n+1}), (n, p) for Stiefel/Grassmannian, n for the n x n
/// matrix kinds, arbitrary trailing dims for Euclidean.
struct ManifoldDescriptor {
  ManifoldKind kind = ManifoldKind::Euclidean;
  std::vector<std::size_t> dims;
  double curvature = 1.0;
  std::vector<ProductSlice> components;

  bool operator==(const ManifoldDescriptor&) const;
};

struct ProductSlice {
  ManifoldDescriptor descriptor;
  std::size_t offset = 0;
  std::size_t size = 0;

  bool operator==(const ProductSlice&) const = default;
};

inline bool ManifoldDescriptor::operator==(const ManifoldDescriptor& o) const {
  return kind == o.kind && dims == o.dims && curvature == o.curvature && components == o.components;
}

/// Trailing-axis shape of a point.
inline Shape point_shape(const ManifoldDescriptor& d) {
  switch (d.kind) {
    case ManifoldKind::Euclidean:
    case ManifoldKind::Sphere:
    case ManifoldKind::Poincare:
      return Shape(d.dims.begin(), d.dims.end());
    case ManifoldKind::Hyperboloid:
      return Shape{d.dims.at(0) + 1};
    case ManifoldKind::StiefelEuclidean:
    case ManifoldKind::Grassmannian:
      return Shape{d.dims.at(0), d.dims.at(1)};
    case ManifoldKind::SpecialOrthogonal:
    case ManifoldKind::SPDAffineInvariant:
    case ManifoldKind::SPDLogEuclidean:
    case ManifoldKind::SPDLogCholesky:
    case ManifoldKind::Cholesky:
      return Shape{d.dims.at(0), d.dims.at(0)};
    case ManifoldKind::Product: {
      std::size_t total = 0;
      for (const auto& c : d.components) total += c.size;
      return Shape{total};
    }
  }
  return {};
}

inline void validate(const ManifoldDescriptor& d) {
  const std::string name(kind_name(d.kind));
  auto require_dims = [&](std::size_t count) {
    if (d.dims.size() != count) {
      throw ShapeError(name + " expects " + std::to_string(count) + " shape parameter(s)");
    }
  };
  for (std::size_t v : d.dims)
    if (v < 1) throw ShapeError(name + ": shape dimensions must be >= 1");
  switch (d.kind) {
    case ManifoldKind::Euclidean:
      if (d.dims.empty()) throw ShapeError("euclidean expects at least one dimension");
      break;
    case ManifoldKind::Poincare:
      require_dims(1);
      if (!(d.curvature > 0.0) || !std::isfinite(d.curvature)) throw ShapeError("poincare curvature must be > 0");
      break;
    case ManifoldKind::Sphere:
    case ManifoldKind::Hyperboloid:
    case ManifoldKind::SpecialOrthogonal:
    case ManifoldKind::SPDAffineInvariant:
    case ManifoldKind::SPDLogEuclidean:
    case ManifoldKind::SPDLogCholesky:
    case ManifoldKind::Cholesky:
      require_dims(1);
      break;
    case ManifoldKind::StiefelEuclidean:
    case ManifoldKind::Grassmannian:
      require_dims(2);
      if (d.dims[0] < d.dims[1]) throw ShapeError(name + " requires n >= p");
      break;
    case ManifoldKind::Product: {
      if (d.components.empty()) throw ShapeError("product needs at least one component");
      std::size_t expected = 0;
      for (const auto& c : d.components) {
        validate(c.descriptor);
        if (c.offset != expected || c.size != shape_size(point_shape(c.descriptor))) {
          throw ShapeError("product slices do not partition the trailing axis");
        }
        expected += c.size;
      }
      break;
    }
  }
}

inline ManifoldDescriptor make_descriptor(ManifoldKind kind, std::vector<std::size_t> dims,
                                          double curvature = 1.0) {
  ManifoldDescriptor d{kind, std::move(dims), curvature, {}};
  validate(d);
  return d;
}

/// Product descriptor with slices laid out consecutively.
inline ManifoldDescriptor make_product(const std::vector<ManifoldDescriptor>& parts) {
  ManifoldDescriptor d{ManifoldKind::Product, {}, 1.0, {}};
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t size = shape_size(point_shape(p));
    d.components.push_back(ProductSlice{p, offset, size});
    offset += size;
  }
  validate(d);
  return d;
}

/// Descriptor used when a kind is named without parameters.
inline ManifoldDescriptor default_descriptor(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Euclidean: return make_descriptor(kind, {3});
    case ManifoldKind::Sphere: return make_descriptor(kind, {3});
    case ManifoldKind::Hyperboloid: return make_descriptor(kind, {3});
    case ManifoldKind::Poincare: return make_descriptor(kind, {2});
    case ManifoldKind::StiefelEuclidean: return make_descriptor(kind, {5, 2});
    case ManifoldKind::Grassmannian: return make_descriptor(kind, {5, 2});
    case ManifoldKind::SpecialOrthogonal: return make_descriptor(kind, {3});
    case ManifoldKind::SPDAffineInvariant:
    case ManifoldKind::SPDLogEuclidean:
    case ManifoldKind::SPDLogCholesky:
    case ManifoldKind::Cholesky:
      return make_descriptor(kind, {3});
    case ManifoldKind::Product:
      return make_product({make_descriptor(ManifoldKind::Sphere, {3}),
                           make_descriptor(ManifoldKind::Poincare, {2}),
                           make_descriptor(ManifoldKind::SPDAffineInvariant, {2})});
  }
  throw ShapeError("unknown manifold kind");
}

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("failed to format number");
  return std::string(buf, end);
}

class DescriptorParser {
 public:
  explicit DescriptorParser(std::string_view text) : text_(text) {}

  ManifoldDescriptor parse_all() {
    ManifoldDescriptor d = parse();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return d;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ShapeError("cannot parse manifold '" + std::string(text_) + "': " + why);
  }
  void skip_ws() {
    while (pos_ < text_.size() && text_[pos_] == ' ') ++pos_;
  }
  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  std::string_view identifier() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    return text_.substr(start, pos_ - start);
  }
  double number() {
    skip_ws();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc()) fail("expected a number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return v;
  }
  std::size_t count() {
    skip_ws();
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc()) fail("expected a dimension");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return v;
  }

  ManifoldDescriptor parse() {
    const std::string_view name = identifier();
    const auto kind = kind_from_name(name);
    if (!kind) fail("unknown kind '" + std::string(name) + "'");
    if (!consume('(')) return default_descriptor(*kind);
    if (*kind == ManifoldKind::Product) {
      std::vector<ManifoldDescriptor> parts;
      do {
        parts.push_back(parse());
      } while (consume(','));
      if (!consume(')')) fail("expected ')'");
      return make_product(parts);
    }
    std::vector<std::size_t> dims;
    double curvature = 1.0;
    do {
      skip_ws();
      if (text_.substr(pos_, 2) == "c=") {
        pos_ += 2;
        curvature = number();
      } else {
        dims.push_back(count());
      }
    } while (consume(','));
    if (!consume(')')) fail("expected ')'");
    return make_descriptor(*kind, std::move(dims), curvature);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Text form, e.g. "sphere(3)", "poincare(2,c=0.5)",
/// "product(sphere(3),so(3))". Round-trips through parse_descriptor.
inline std::string to_string(const ManifoldDescriptor& d) {
  std::string out(kind_name(d.kind));
  out += "(";
  if (d.kind == ManifoldKind::Product) {
    for (std::size_t i = 0; i < d.components.size(); ++i) {
      if (i) out += ",";
      out += to_string(d.components[i].descriptor);
    }
  } else {
    for (std::size_t i = 0; i < d.dims.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(d.dims[i]);
    }
    if (d.kind == ManifoldKind::Poincare) out += ",c=" + detail::format_double(d.curvature);
  }
  return out + ")";
}

inline ManifoldDescriptor parse_descriptor(std::string_view text) {
  return detail::DescriptorParser(text).parse_all();
}

}  // namespace riemopt
