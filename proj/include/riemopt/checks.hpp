#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "riemopt/error.hpp"
#include "riemopt/manifolds.hpp"
#include "riemopt/random.hpp"
#include "riemopt/tensor.hpp"

namespace riemopt {

/// Outcome of one verified property.
struct CheckRecord {
  std::string property;
  std::size_t trials = 0;
  double max_error = 0.0;
  double tol = 0.0;
  bool pass = true;
  bool skipped = false;
  std::string note;
};

struct CheckReport {
  std::string subject;
  std::vector<CheckRecord> records;

  bool pass() const {
    return std::all_of(records.begin(), records.end(), [](const CheckRecord& r) { return r.pass; });
  }
  const CheckRecord* find(const std::string& property) const {
    for (const auto& r : records)
      if (r.property == property) return &r;
    return nullptr;
  }
};

inline nlohmann::ordered_json to_json(const CheckRecord& r) {
  nlohmann::ordered_json j;
  j["property"] = r.property;
  j["trials"] = r.trials;
  if (std::isfinite(r.max_error))
    j["max_error"] = r.max_error;
  else
    j["max_error"] = nullptr;
  j["tol"] = r.tol;
  j["pass"] = r.pass;
  if (r.skipped) j["skipped"] = true;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline nlohmann::ordered_json to_json(const CheckReport& report) {
  nlohmann::ordered_json j;
  j["subject"] = report.subject;
  j["pass"] = report.pass();
  j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : report.records) j["records"].push_back(to_json(r));
  return j;
}

/// Central-difference gradient of a scalar field over a flat array.
///
/// Each coordinate also compares the one-sided quotients; when they disagree
/// by more than 10% the field is not differentiable at x (a kink or a
/// cusp) and UnstableGradient is raised.
template <typename T, typename F>
Tensor<T> central_diff_grad(F&& f, const Tensor<T>& x, T h = T(1e-6)) {
  auto eval = [&](const Tensor<T>& at) {
    const T v = static_cast<T>(f(at));
    if (!std::isfinite(v)) throw NonFiniteObjective("objective is not finite near the evaluation point");
    return v;
  };
  const T f0 = eval(x);
  Tensor<T> grad(x.shape());
  Tensor<T> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const T fp = eval(probe);
    probe[i] = x[i] - h;
    const T fm = eval(probe);
    probe[i] = x[i];
    const T forward = (fp - f0) / h;
    const T backward = (f0 - fm) / h;
    const T scale = std::max({T(1), std::abs(forward), std::abs(backward)});
    if (std::abs(forward - backward) > T(0.1) * scale) {
      throw UnstableGradient("one-sided differences disagree at coordinate " + std::to_string(i) +
                             ": objective is not differentiable here");
    }
    grad[i] = (fp - fm) / (T(2) * h);
  }
  return grad;
}

/// Compares an analytic Euclidean gradient with central differences.
template <typename T, typename F, typename G>
CheckReport check_gradient(F&& f, G&& gradient, const Tensor<T>& x, T h = T(1e-6), double tol = 1e-5) {
  const Tensor<T> fd = central_diff_grad<T>(f, x, h);
  const Tensor<T> g = gradient(x);
  if (g.shape() != x.shape()) throw ShapeError("gradient shape " + shape_string(g.shape()) + " differs from point shape");
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(g[i]) - static_cast<double>(fd[i]);
    diff += d * d;
    ref += static_cast<double>(fd[i]) * static_cast<double>(fd[i]);
  }
  CheckRecord r;
  r.property = "gradient";
  r.trials = 1;
  r.max_error = std::sqrt(diff) / std::max(1.0, std::sqrt(ref));
  r.tol = tol;
  r.pass = r.max_error <= tol;
  return CheckReport{"gradient", {r}};
}

/// Tolerances of the manifold property suite.
struct SuiteTolerances {
  double idempotence = 1e-10;
  double membership = 1e-9;
  double inversion = 1e-6;
  double zero_laws = 1e-12;
  double geodesic = 1e-8;
  double isometry = 1e-8;
  double riesz = 1e-8;
  /// Allowed shortfall of the retraction-order slope below 2.
  double order_deficit = 0.1;
};

namespace detail {

class SuiteAccumulator {
 public:
  SuiteAccumulator(std::string property, double tol) {
    record_.property = std::move(property);
    record_.tol = tol;
  }

  void add(double err) {
    ++record_.trials;
    if (std::isnan(err)) err = std::numeric_limits<double>::infinity();
    record_.max_error = std::max(record_.max_error, err);
  }
  void fail(const std::string& what) {
    add(std::numeric_limits<double>::infinity());
    if (record_.note.empty()) record_.note = what;
  }
  template <typename F>
  void measure(F&& f) {
    try {
      add(f());
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  std::size_t trials() const noexcept { return record_.trials; }
  CheckRecord finish(bool skipped = false, std::string note = {}) {
    record_.skipped = skipped;
    if (!note.empty()) record_.note = std::move(note);
    record_.pass = skipped || (record_.trials > 0 && record_.max_error <= record_.tol);
    return record_;
  }

 private:
  CheckRecord record_;
};

template <typename T>
double max_abs_diff(std::span<const T> a, std::span<const T> b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(static_cast<double>(a[i]) - b[i]));
  return e;
}

template <typename T>
double l2(std::span<const T> a) {
  double s = 0.0;
  for (T v : a) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

template <typename T>
double l2_diff(std::span<const T> a, std::span<const T> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

/// Relative error a / b; falls back to the absolute error when the
/// reference vanishes (zero-dimensional tangent spaces).
inline double ratio(double a, double b) { return b == 0.0 ? a : a / b; }

template <typename T>
std::vector<T> ambient_normal(Rng& rng, std::size_t n) {
  std::vector<T> g(n);
  for (auto& v : g) v = static_cast<T>(rng.normal());
  return g;
}

/// Projected Gaussian draw rescaled to Riemannian norm `radius`.
template <typename T>
std::vector<T> random_tangent(const Manifold<T>& m, std::span<const T> x, Rng& rng, double radius) {
  const std::vector<T> g = ambient_normal<T>(rng, m.point_size());
  std::vector<T> u(m.point_size());
  m.proju(x, g, u);
  const T nu = m.norm(x, u);
  // A zero-dimensional tangent space leaves only roundoff after projection.
  if (!(nu > T(1e-10) * static_cast<T>(l2<T>(g)))) return std::vector<T>(m.point_size(), T(0));
  for (auto& v : u) v *= static_cast<T>(radius) / nu;
  return u;
}

template <typename T>
double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

template <typename T>
CheckRecord product_componentwise(const Product<T>& prod, std::size_t trials, Rng& rng) {
  SuiteAccumulator acc("product_componentwise", 0.0);
  const std::size_t n = prod.point_size();
  for (std::size_t t = 0; t < trials; ++t) {
    acc.measure([&] {
      std::vector<T> x(n), y(n);
      prod.random_point(rng, x);
      prod.random_point(rng, y);
      const std::vector<T> u = random_tangent(prod, std::span<const T>(x), rng, 0.3);
      const std::vector<T> v = random_tangent(prod, std::span<const T>(x), rng, 0.3);
      const std::vector<T> g = ambient_normal<T>(rng, n);
      std::vector<T> whole(n), part;
      double err = 0.0;
      auto compare = [&](auto&& op_whole, auto&& op_part) {
        op_whole(whole);
        for (const auto& c : prod.components()) {
          part.assign(c.size, T(0));
          op_part(c, part);
          err = std::max(err, max_abs_diff<T>(std::span<const T>(whole).subspan(c.offset, c.size), part));
        }
      };
      auto sl = [](const std::vector<T>& a, const auto& c) { return std::span<const T>(a).subspan(c.offset, c.size); };
      compare([&](auto out) { prod.proju(x, g, out); },
              [&](const auto& c, auto out) { c.manifold->proju(sl(x, c), sl(g, c), out); });
      compare([&](auto out) { prod.egrad2rgrad(x, g, out); },
              [&](const auto& c, auto out) { c.manifold->egrad2rgrad(sl(x, c), sl(g, c), out); });
      compare([&](auto out) { prod.projx(g, out); },
              [&](const auto& c, auto out) {
                // projx is only well defined on nonzero input; the draw guarantees that.
                c.manifold->projx(sl(g, c), out);
              });
      compare([&](auto out) { prod.retr(x, u, out); },
              [&](const auto& c, auto out) { c.manifold->retr(sl(x, c), sl(u, c), out); });
      compare([&](auto out) { prod.transp(x, y, v, out); },
              [&](const auto& c, auto out) { c.manifold->transp(sl(x, c), sl(y, c), sl(v, c), out); });
      if (prod.has_exp())
        compare([&](auto out) { prod.exp(x, u, out); },
                [&](const auto& c, auto out) { c.manifold->exp(sl(x, c), sl(u, c), out); });
      if (prod.has_log())
        compare([&](auto out) { prod.log(x, y, out); },
                [&](const auto& c, auto out) { c.manifold->log(sl(x, c), sl(y, c), out); });
      if (prod.has_ptransp())
        compare([&](auto out) { prod.ptransp(x, y, v, out); },
                [&](const auto& c, auto out) { c.manifold->ptransp(sl(x, c), sl(y, c), sl(v, c), out); });
      T inner_sum(0), dist_sq(0), perr(0);
      for (const auto& c : prod.components()) {
        inner_sum += c.manifold->inner(sl(x, c), sl(u, c), sl(v, c));
        perr = std::max(perr, c.manifold->point_error(sl(x, c)));
        if (prod.has_log()) {
          const T d = c.manifold->dist(sl(x, c), sl(y, c));
          dist_sq += d * d;
        }
      }
      err = std::max(err, std::abs(static_cast<double>(prod.inner(x, u, v) - inner_sum)));
      err = std::max(err, std::abs(static_cast<double>(prod.point_error(x) - perr)));
      if (prod.has_log()) err = std::max(err, std::abs(static_cast<double>(prod.dist(x, y) - std::sqrt(dist_sq))));
      return err;
    });
  }
  return acc.finish();
}

}  // namespace detail

/// Runs every operator property on `trials` seeded random configurations.
///
/// Failures never throw; an operator raising an error during a trial makes
/// the affected property fail with an infinite error and a note.
template <typename T>
CheckReport run_manifold_suite(const Manifold<T>& m, std::size_t trials, std::uint64_t seed,
                               const SuiteTolerances& tol = {}) {
  using detail::SuiteAccumulator;
  using Vec = std::vector<T>;
  using CSpan = std::span<const T>;
  if (trials == 0) throw ConfigError("trials must be at least 1");

  Rng rng(seed);
  const std::size_t n = m.point_size();
  const bool with_exp = m.has_exp();
  const bool with_log = m.has_log();
  const bool with_ptransp = m.has_ptransp();
  const bool order_applies = with_exp && !m.retr_is_exp();

  SuiteAccumulator random_membership("random_membership", tol.membership);
  SuiteAccumulator idempotence("proju_idempotence", tol.idempotence);
  SuiteAccumulator tangency("proju_tangency", tol.membership);
  SuiteAccumulator exp_membership("exp_membership", tol.membership);
  SuiteAccumulator retr_membership("retr_membership", tol.membership);
  SuiteAccumulator zero_laws("zero_laws", tol.zero_laws);
  SuiteAccumulator inversion("exp_log_inversion", tol.inversion);
  SuiteAccumulator geodesic("geodesic_length", tol.geodesic);
  SuiteAccumulator isometry("ptransp_isometry", tol.isometry);
  SuiteAccumulator transport_tangency("transport_tangency", tol.membership);
  SuiteAccumulator riesz("rgrad_riesz", tol.riesz);
  SuiteAccumulator order("retraction_order", tol.order_deficit);

  static constexpr double kSteps[] = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};

  for (std::size_t trial = 0; trial < trials; ++trial) {
    Vec x(n);
    m.random_point(rng, x);
    const CSpan xs(x);
    const Vec u = detail::random_tangent(m, xs, rng, rng.uniform(0.05, 0.5));
    const Vec v = detail::random_tangent(m, xs, rng, rng.uniform(0.05, 0.5));
    const Vec w = detail::random_tangent(m, xs, rng, rng.uniform(0.05, 0.5));
    const Vec g = detail::ambient_normal<T>(rng, n);
    const Vec zero(n, T(0));
    Vec out(n), out2(n);

    random_membership.measure([&] { return static_cast<double>(m.point_error(xs)); });

    idempotence.measure([&] {
      m.proju(xs, g, out);
      m.proju(xs, out, out2);
      return detail::max_abs_diff<T>(out2, out) / std::max(1.0, detail::l2<T>(out));
    });
    tangency.measure([&] {
      m.proju(xs, g, out);
      return static_cast<double>(m.vector_error(xs, out));
    });

    if (with_exp) {
      exp_membership.measure([&] {
        m.exp(xs, u, out);
        return static_cast<double>(m.point_error(out));
      });
    }
    retr_membership.measure([&] {
      m.retr(xs, u, out);
      return static_cast<double>(m.point_error(out));
    });

    zero_laws.measure([&] {
      double e = 0.0;
      m.retr(xs, zero, out);
      e = std::max(e, detail::max_abs_diff<T>(out, x));
      if (with_exp) {
        m.exp(xs, zero, out);
        e = std::max(e, detail::max_abs_diff<T>(out, x));
      }
      if (with_log) {
        m.log(xs, xs, out);
        e = std::max(e, detail::max_abs_diff<T>(out, zero));
        e = std::max(e, std::abs(static_cast<double>(m.dist(xs, xs))));
      }
      return e;
    });

    if (with_exp && with_log) {
      inversion.measure([&] {
        m.exp(xs, u, out);
        m.log(xs, out, out2);
        return detail::ratio(detail::l2_diff<T>(out2, u), detail::l2<T>(u));
      });
      geodesic.measure([&] {
        m.exp(xs, u, out);
        const double d = static_cast<double>(m.dist(xs, out));
        const double nu = static_cast<double>(m.norm(xs, u));
        return detail::ratio(std::abs(d - nu), nu);
      });
    }

    Vec y(n);
    try {
      if (with_exp)
        m.exp(xs, w, y);
      else
        m.retr(xs, w, y);
    } catch (const Error& e) {
      y = x;
      if (with_ptransp) isometry.fail(e.what());
      transport_tangency.fail(e.what());
    }
    const CSpan ys(y);

    if (with_ptransp) {
      isometry.measure([&] {
        Vec pu(n), pv(n);
        m.ptransp(xs, ys, u, pu);
        m.ptransp(xs, ys, v, pv);
        const double before = static_cast<double>(m.inner(xs, u, v));
        const double after = static_cast<double>(m.inner(ys, pu, pv));
        const double scale = static_cast<double>(m.norm(xs, u) * m.norm(xs, v));
        double e = detail::ratio(std::abs(after - before), scale);
        m.ptransp(xs, xs, v, out);
        e = std::max(e, detail::ratio(detail::l2_diff<T>(out, v), detail::l2<T>(v)));
        return e;
      });
    }
    transport_tangency.measure([&] {
      double e = 0.0;
      m.transp(xs, ys, v, out);
      e = std::max(e, static_cast<double>(m.vector_error(ys, out)));
      m.transp(xs, xs, v, out);
      e = std::max(e, detail::max_abs_diff<T>(out, v));
      if (with_ptransp) {
        m.ptransp(xs, ys, v, out);
        e = std::max(e, static_cast<double>(m.vector_error(ys, out)));
      }
      return e;
    });

    // <rgrad, v>_x must equal the Euclidean pairing <g, v> for tangent v.
    riesz.measure([&] {
      m.egrad2rgrad(xs, g, out);
      const double lhs = static_cast<double>(m.inner(xs, out, v));
      double rhs = 0.0;
      for (std::size_t i = 0; i < n; ++i) rhs += static_cast<double>(g[i]) * v[i];
      const double scale = detail::l2<T>(g) * detail::l2<T>(v);
      return std::max(detail::ratio(std::abs(lhs - rhs), scale), static_cast<double>(m.vector_error(xs, out)));
    });

    if (order_applies && m.norm(xs, u) > T(0)) {
      try {
        Vec dir = u;
        const T nu = m.norm(xs, u);
        for (auto& c : dir) c *= T(0.5) / nu;
        const double floor = 100.0 * std::numeric_limits<T>::epsilon() * std::max(1.0, detail::l2<T>(x));
        std::vector<double> logt, loge;
        Vec step(n);
        for (double t : kSteps) {
          for (std::size_t i = 0; i < n; ++i) step[i] = static_cast<T>(t) * dir[i];
          m.retr(xs, step, out);
          m.exp(xs, step, out2);
          const double e = detail::l2_diff<T>(out, out2);
          if (e > floor) {
            logt.push_back(std::log(t));
            loge.push_back(std::log(e));
          }
        }
        // Fewer than four resolvable gaps means retr agrees with exp to
        // roundoff on this draw; no slope can be fitted.
        if (logt.size() >= 4) order.add(2.0 - detail::least_squares_slope<double>(logt, loge));
      } catch (const Error& e) {
        order.fail(e.what());
      }
    }
  }

  CheckReport report;
  report.subject = m.name();
  auto& r = report.records;
  r.push_back(random_membership.finish());
  r.push_back(idempotence.finish());
  r.push_back(tangency.finish());
  r.push_back(with_exp ? exp_membership.finish() : exp_membership.finish(true, "no closed-form exp"));
  r.push_back(retr_membership.finish());
  r.push_back(zero_laws.finish());
  const bool inv_skip = !(with_exp && with_log);
  r.push_back(inv_skip ? inversion.finish(true, "no closed-form exp/log") : inversion.finish());
  r.push_back(inv_skip ? geodesic.finish(true, "no closed-form exp/log") : geodesic.finish());
  r.push_back(with_ptransp ? isometry.finish() : isometry.finish(true, "no closed-form parallel transport"));
  r.push_back(transport_tangency.finish());
  r.push_back(riesz.finish());
  if (!with_exp)
    r.push_back(order.finish(true, "no closed-form exp"));
  else if (!order_applies)
    r.push_back(order.finish(true, "retr is exp"));
  else if (order.trials() == 0)
    r.push_back(order.finish(true, "retr and exp agree to roundoff on every draw"));
  else
    r.push_back(order.finish());

  if (const auto* prod = dynamic_cast<const Product<T>*>(&m)) {
    r.push_back(detail::product_componentwise(*prod, trials, rng));
  }
  return report;
}

/// Suite over a descriptor; `membership_tol` overrides the membership
/// tolerance, every other tolerance keeps its default.
inline CheckReport run_manifold_suite(const ManifoldDescriptor& d, std::size_t trials, std::uint64_t seed,
                                      double membership_tol = 1e-9) {
  SuiteTolerances tol;
  tol.membership = membership_tol;
  const auto m = make_manifold<double>(d);
  return run_manifold_suite(*m, trials, seed, tol);
}

}  // namespace riemopt
