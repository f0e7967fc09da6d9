#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "riemopt/error.hpp"
#include "riemopt/linalg.hpp"
#include "riemopt/manifolds.hpp"
#include "riemopt/tensor.hpp"

namespace riemopt {

enum class Algorithm { RSGD, CRMSProp, RAdam };

inline std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::RSGD: return "rsgd";
    case Algorithm::CRMSProp: return "crmsprop";
    case Algorithm::RAdam: return "radam";
  }
  return "?";
}

inline Algorithm algorithm_from_name(std::string_view s) {
  if (s == "rsgd") return Algorithm::RSGD;
  if (s == "crmsprop") return Algorithm::CRMSProp;
  if (s == "radam") return Algorithm::RAdam;
  throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::RSGD;
  double learning_rate = 1e-3;
  double momentum = 0.0;
  double rho = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool amsgrad = false;
  /// Move accumulators with ptransp where the manifold has it, else transp.
  bool use_exact_transport = true;
  /// Step with exp where the manifold has it, else retr.
  bool use_exp = true;

  void validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v < 1.0; };
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
    if (!in_unit(momentum)) throw ConfigError("momentum must lie in [0, 1)");
    if (!in_unit(rho)) throw ConfigError("rho must lie in [0, 1)");
    if (!in_unit(beta1)) throw ConfigError("beta1 must lie in [0, 1)");
    if (!in_unit(beta2)) throw ConfigError("beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be positive");
  }
};

/// A named parameter array constrained row-wise to a manifold.
template <typename T>
struct ParameterBinding {
  std::string name;
  ManifoldDescriptor descriptor;
  Tensor<T> values;
  ManifoldPtr<T> manifold;

  std::size_t rows() const { return values.size() / manifold->point_size(); }
  std::size_t row_size() const { return manifold->point_size(); }
};

/// Binds `values` to a manifold. Every row must already lie on it.
template <typename T>
ParameterBinding<T> bind(std::string name, const ManifoldDescriptor& descriptor, Tensor<T> values) {
  if (name.empty()) throw ConfigError("parameter name must not be empty");
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == ':'))
      throw ConfigError("parameter name '" + name + "' may only contain [A-Za-z0-9_.:-]");
  }
  auto m = make_manifold<T>(descriptor);
  detail::batch_info(*m, values, name.c_str());
  if (!check_point(*m, values, Precision<T>::membership))
    throw ConfigError("parameter '" + name + "' has rows off " + m->name());
  return ParameterBinding<T>{std::move(name), descriptor, std::move(values), std::move(m)};
}

/// Unbound parameters live in Euclidean space along their last axis.
template <typename T>
ParameterBinding<T> bind(std::string name, Tensor<T> values) {
  if (values.shape().empty()) values.reshape({1});
  auto descriptor = make_descriptor(ManifoldKind::Euclidean, {values.shape().back()});
  return riemopt::bind(std::move(name), descriptor, std::move(values));
}

template <typename T>
struct SlotState {
  std::uint64_t step = 0;
  Tensor<T> momentum;
  Tensor<T> second_moment;
  Tensor<T> max_second_moment;
  Tensor<T> previous_point;

  bool operator==(const SlotState&) const = default;
};

template <typename T>
struct OptimizerState {
  OptimizerConfig config;
  std::map<std::string, SlotState<T>> slots;

  SlotState<T>& slot(const std::string& name) {
    auto it = slots.find(name);
    if (it == slots.end()) throw ConfigError("parameter '" + name + "' was not registered with this optimizer");
    return it->second;
  }
};

enum class GradientKind { Euclidean, Riemannian };

template <typename T>
OptimizerState<T> init(const OptimizerConfig& config, const std::vector<ParameterBinding<T>>& bindings) {
  config.validate();
  OptimizerState<T> state;
  state.config = config;
  for (const auto& b : bindings) {
    if (state.slots.count(b.name)) throw ConfigError("duplicate parameter name '" + b.name + "'");
    if (!check_point(*b.manifold, b.values, Precision<T>::membership))
      throw ConfigError("parameter '" + b.name + "' has rows off " + b.manifold->name());
    SlotState<T> s;
    const Shape& shape = b.values.shape();
    switch (config.algorithm) {
      case Algorithm::RSGD:
        if (config.momentum > 0.0) s.momentum = Tensor<T>(shape);
        break;
      case Algorithm::CRMSProp:
        s.momentum = Tensor<T>(shape);
        s.previous_point = b.values;
        break;
      case Algorithm::RAdam: {
        s.momentum = Tensor<T>(shape);
        const Shape batch = detail::batch_info(*b.manifold, b.values, "parameter").batch_shape;
        s.second_moment = Tensor<T>(batch);
        if (config.amsgrad) s.max_second_moment = Tensor<T>(batch);
        break;
      }
    }
    state.slots.emplace(b.name, std::move(s));
  }
  return state;
}

namespace detail {

template <typename T>
void require_slot_shapes(const OptimizerConfig& c, const SlotState<T>& s, const ParameterBinding<T>& b) {
  const Shape& shape = b.values.shape();
  const std::size_t rows = b.rows();
  auto expect = [&](const Tensor<T>& t, bool needed, std::size_t size, const char* what) {
    if (needed && t.size() != size)
      throw ShapeError(std::string("slot '") + what + "' of parameter '" + b.name + "' does not match its values");
  };
  const bool rsgd_m = c.algorithm == Algorithm::RSGD && c.momentum > 0.0;
  expect(s.momentum, rsgd_m || c.algorithm != Algorithm::RSGD, shape_size(shape), "momentum");
  expect(s.previous_point, c.algorithm == Algorithm::CRMSProp, shape_size(shape), "previous_point");
  expect(s.second_moment, c.algorithm == Algorithm::RAdam, rows, "second_moment");
  expect(s.max_second_moment, c.algorithm == Algorithm::RAdam && c.amsgrad, rows, "max_second_moment");
}

/// One optimizer update of a single row. `g` is the row gradient (zero for
/// rows a sparse update does not touch).
template <typename T>
class RowUpdater {
 public:
  RowUpdater(const OptimizerConfig& c, const Manifold<T>& m, std::uint64_t step, GradientKind kind)
      : c_(c), m_(m), kind_(kind), n_(m.point_size()), step_(step),
        exact_(c.use_exact_transport && m.has_ptransp()), use_exp_(c.use_exp && m.has_exp()),
        lr_(static_cast<T>(c.learning_rate)), eps_(static_cast<T>(c.epsilon)),
        bias1_(static_cast<T>(1.0 - std::pow(c.beta1, static_cast<double>(step)))),
        bias2_(static_cast<T>(1.0 - std::pow(c.beta2, static_cast<double>(step)))),
        r_(n_), d_(n_), x_new_(n_), tmp_(n_) {}

  void operator()(SlotState<T>& s, std::span<T> x, std::span<const T> g, std::size_t row) {
    riemannian_gradient(x, g);
    switch (c_.algorithm) {
      case Algorithm::RSGD: rsgd(s, x, row); break;
      case Algorithm::CRMSProp: crmsprop(s, x, g, row); break;
      case Algorithm::RAdam: radam(s, x, row); break;
    }
  }

 private:
  using In = std::span<const T>;

  void riemannian_gradient(In x, In g) {
    if (kind_ == GradientKind::Riemannian)
      std::copy(g.begin(), g.end(), r_.begin());
    else
      m_.egrad2rgrad(x, g, r_);
  }

  /// x <- step(x, -lr * d); returns false when d is zero and x is left as is.
  bool move(std::span<T> x) {
    if (std::all_of(d_.begin(), d_.end(), [](T v) { return v == T(0); })) {
      std::copy(x.begin(), x.end(), x_new_.begin());
      return false;
    }
    for (auto& v : d_) v = -lr_ * v;
    if (use_exp_)
      m_.exp(x, d_, x_new_);
    else
      m_.retr(x, d_, x_new_);
    return true;
  }

  void transport(In from, In to, std::span<T> v) {
    if (exact_)
      m_.ptransp(from, to, v, tmp_);
    else
      m_.transp(from, to, v, tmp_);
    std::copy(tmp_.begin(), tmp_.end(), v.begin());
  }

  void commit(std::span<T> x) { std::copy(x_new_.begin(), x_new_.end(), x.begin()); }

  void rsgd(SlotState<T>& s, std::span<T> x, std::size_t row) {
    if (c_.momentum == 0.0) {
      d_ = r_;
      if (move(x)) commit(x);
      return;
    }
    const T mu = static_cast<T>(c_.momentum);
    std::span<T> b = s.momentum.row(row, n_);
    for (std::size_t i = 0; i < n_; ++i) b[i] = mu * b[i] + r_[i];
    std::copy(b.begin(), b.end(), d_.begin());
    move(x);
    transport(x, x_new_, b);
    commit(x);
  }

  void crmsprop(SlotState<T>& s, std::span<T> x, In g, std::size_t row) {
    const T rho = static_cast<T>(c_.rho);
    std::span<T> m = s.momentum.row(row, n_);
    std::span<T> prev = s.previous_point.row(row, n_);
    if (step_ > 1) transport(prev, x, m);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = g[i] * g[i];
    m_.proju(x, tmp_, d_);
    for (std::size_t i = 0; i < n_; ++i) m[i] = rho * m[i] + (T(1) - rho) * d_[i];
    // The projected square can go negative off flat space; its magnitude sets the scale.
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = r_[i] / (std::sqrt(std::abs(m[i])) + eps_);
    m_.proju(x, tmp_, d_);
    std::copy(x.begin(), x.end(), prev.begin());
    if (move(x)) commit(x);
  }

  void radam(SlotState<T>& s, std::span<T> x, std::size_t row) {
    const T b1 = static_cast<T>(c_.beta1);
    const T b2 = static_cast<T>(c_.beta2);
    std::span<T> m = s.momentum.row(row, n_);
    T& v = s.second_moment[row];
    for (std::size_t i = 0; i < n_; ++i) m[i] = b1 * m[i] + (T(1) - b1) * r_[i];
    v = b2 * v + (T(1) - b2) * m_.inner(x, r_, r_);
    T vhat = v / bias2_;
    if (c_.amsgrad) {
      T& vmax = s.max_second_moment[row];
      vmax = std::max(vmax, vhat);
      vhat = vmax;
    }
    const T denom = std::sqrt(vhat) + eps_;
    for (std::size_t i = 0; i < n_; ++i) d_[i] = (m[i] / bias1_) / denom;
    move(x);
    transport(x, x_new_, m);
    commit(x);
  }

  const OptimizerConfig& c_;
  const Manifold<T>& m_;
  GradientKind kind_;
  std::size_t n_;
  std::uint64_t step_;
  bool exact_;
  bool use_exp_;
  T lr_, eps_, bias1_, bias2_;
  std::vector<T> r_, d_, x_new_, tmp_;
};

template <typename T>
void require_finite(std::span<const T> g, const std::string& name) {
  for (T v : g)
    if (!std::isfinite(v)) throw NonFiniteGradient("gradient of '" + name + "' contains NaN or Inf");
}

/// Runs `row_gradient(r)` -> span over every row, committing only if all
/// rows succeed.
template <typename T, typename RowGradient>
void apply_rows(OptimizerState<T>& state, ParameterBinding<T>& binding, GradientKind kind, RowGradient&& row_gradient) {
  SlotState<T>& live = state.slot(binding.name);
  require_slot_shapes(state.config, live, binding);
  SlotState<T> s = live;
  Tensor<T> values = binding.values;
  ++s.step;
  RowUpdater<T> update(state.config, *binding.manifold, s.step, kind);
  const std::size_t n = binding.row_size();
  for (std::size_t r = 0; r < binding.rows(); ++r) update(s, values.row(r, n), row_gradient(r), r);
  live = std::move(s);
  binding.values = std::move(values);
}

}  // namespace detail

/// Dense update: `grad` has the shape of the parameter values.
template <typename T>
void apply_dense(OptimizerState<T>& state, ParameterBinding<T>& binding, const Tensor<T>& grad,
                 GradientKind kind = GradientKind::Euclidean) {
  if (grad.shape() != binding.values.shape()) {
    throw ShapeError("gradient of shape " + shape_string(grad.shape()) + " does not match parameter '" +
                     binding.name + "' of shape " + shape_string(binding.values.shape()));
  }
  detail::require_finite(grad.values(), binding.name);
  const std::size_t n = binding.row_size();
  detail::apply_rows(state, binding, kind, [&](std::size_t r) { return grad.row(r, n); });
}

/// Sparse update of the listed rows; every other row sees a zero gradient,
/// so accumulators decay exactly as in the dense update.
template <typename T>
void apply_sparse(OptimizerState<T>& state, ParameterBinding<T>& binding, const std::vector<std::size_t>& rows,
                  const Tensor<T>& row_grads, GradientKind kind = GradientKind::Euclidean) {
  const std::size_t n = binding.row_size();
  const std::size_t count = binding.rows();
  Shape expected{rows.size()};
  expected.insert(expected.end(), binding.manifold->point_shape().begin(), binding.manifold->point_shape().end());
  if (row_grads.shape() != expected) {
    throw ShapeError("row gradients of shape " + shape_string(row_grads.shape()) + " expected " +
                     shape_string(expected));
  }
  std::vector<std::optional<std::size_t>> where(count);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= count)
      throw IndexError("row index " + std::to_string(rows[k]) + " out of range for " + std::to_string(count) + " rows");
    if (where[rows[k]]) throw IndexError("row index " + std::to_string(rows[k]) + " listed twice");
    where[rows[k]] = k;
  }
  detail::require_finite(row_grads.values(), binding.name);
  const std::vector<T> zero(n, T(0));
  detail::apply_rows(state, binding, kind, [&](std::size_t r) -> std::span<const T> {
    return where[r] ? row_grads.row(*where[r], n) : std::span<const T>(zero);
  });
}

}  // namespace riemopt
