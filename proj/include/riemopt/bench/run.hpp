#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "riemopt/bench/problems.hpp"
#include "riemopt/error.hpp"
#include "riemopt/linalg.hpp"
#include "riemopt/optimizers.hpp"

namespace riemopt::bench {

struct TraceRow {
  std::uint64_t step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::optional<double> dist_to_opt;
};

struct Trace {
  std::string problem;
  OptimizerConfig config;
  std::uint64_t seed = 0;
  std::string precision;
  std::vector<TraceRow> rows;
  /// Largest membership violation over every visited point.
  double max_point_error = 0.0;
  bool aborted = false;
  std::string abort_reason;
  /// Final iterate, flattened.
  std::vector<double> final_point;
};

/// Riemannian gradient norm over all rows of the batch.
template <typename T>
T riemannian_grad_norm(const Manifold<T>& m, const Tensor<T>& x, const Tensor<T>& grad, GradientKind kind) {
  const std::size_t n = m.point_size();
  std::vector<T> r(n);
  T s(0);
  for (std::size_t row = 0; row < x.size() / n; ++row) {
    if (kind == GradientKind::Riemannian) {
      const auto g = grad.row(row, n);
      std::copy(g.begin(), g.end(), r.begin());
    } else {
      m.egrad2rgrad(x.row(row, n), grad.row(row, n), r);
    }
    s += m.inner(x.row(row, n), r, r);
  }
  return std::sqrt(std::max(s, T(0)));
}

/// Runs `steps` optimizer updates from the seeded initial point, recording
/// the state before the first update and after each one.
template <typename T>
Trace run(const Problem<T>& problem, const OptimizerConfig& config, std::size_t steps, std::uint64_t seed) {
  if (steps == 0) throw ConfigError("steps must be at least 1");
  Trace trace;
  trace.problem = problem.name;
  trace.config = config;
  trace.seed = seed;
  trace.precision = Precision<T>::name;

  std::vector<ParameterBinding<T>> params{riemopt::bind<T>("x", problem.descriptor, problem.initial_point(seed))};
  OptimizerState<T> state = init(config, params);
  ParameterBinding<T>& x = params[0];
  const Manifold<T>& m = *x.manifold;

  for (std::uint64_t step = 0;; ++step) {
    for (std::size_t r = 0; r < x.rows(); ++r)
      trace.max_point_error = std::max(trace.max_point_error, static_cast<double>(m.point_error(x.values.row(r, x.row_size()))));
    TraceRow row;
    row.step = step;
    try {
      row.loss = static_cast<double>(problem.objective(x.values));
      if (!std::isfinite(row.loss)) throw NonFiniteObjective("objective is not finite at step " + std::to_string(step));
      const Tensor<T> grad = problem.gradient(x.values);
      row.grad_norm = static_cast<double>(riemannian_grad_norm(m, x.values, grad, problem.gradient_kind));
      if (problem.distance_to_optimum) {
        try {
          row.dist_to_opt = static_cast<double>(problem.distance_to_optimum(x.values));
        } catch (const CutLocus&) {
          row.dist_to_opt = std::numeric_limits<double>::quiet_NaN();
        }
      }
      trace.rows.push_back(row);
      if (step == steps) break;
      apply_dense(state, x, grad, problem.gradient_kind);
    } catch (const NonFiniteObjective& e) {
      trace.aborted = true;
      trace.abort_reason = e.what();
      break;
    } catch (const NonFiniteGradient& e) {
      trace.aborted = true;
      trace.abort_reason = e.what();
      break;
    }
  }
  trace.final_point.assign(x.values.values().begin(), x.values.values().end());
  return trace;
}

inline std::string format_trace_csv(const Trace& trace) {
  const bool with_dist = !trace.rows.empty() && trace.rows.front().dist_to_opt.has_value();
  std::string out = with_dist ? "step,loss,grad_norm,dist_to_opt\n" : "step,loss,grad_norm\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
  };
  for (const auto& r : trace.rows) {
    out += std::to_string(r.step);
    out += ',';
    num(r.loss);
    out += ',';
    num(r.grad_norm);
    if (with_dist) {
      out += ',';
      num(r.dist_to_opt.value_or(std::numeric_limits<double>::quiet_NaN()));
    }
    out += '\n';
  }
  return out;
}

inline void write_trace_csv(const Trace& trace, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << format_trace_csv(trace);
  if (!f) throw Error("failed writing " + path);
}

}  // namespace riemopt::bench
