#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "riemopt/bench/problems.hpp"
#include "riemopt/bench/run.hpp"
#include "riemopt/checks.hpp"
#include "riemopt/manifolds.hpp"

namespace riemopt::bench {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

struct RunOptions {
  std::string problem;
  std::string optimizer;
  double lr = 0.0;
  double momentum = 0.0;
  double rho = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  bool amsgrad = false;
  std::size_t steps = 100;
  std::uint64_t seed = 0;
  std::string precision = "double";
  bool retraction = false;
  bool approx_transport = false;
  std::string out;
  ProblemSize size;
};

struct CheckOptions {
  std::string manifold;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  std::string json;
};

namespace detail {

template <typename T>
int run_command(const RunOptions& o, const OptimizerConfig& config, std::ostream& out, std::ostream& err) {
  const Problem<T> problem = build_problem<T>(o.problem, o.size, o.seed);
  const Trace trace = run(problem, config, o.steps, o.seed);
  write_trace_csv(trace, o.out);
  const TraceRow& last = trace.rows.back();
  out << problem.name << " " << algorithm_name(config.algorithm) << " " << trace.precision << ": step "
      << last.step << " loss " << last.loss << " grad_norm " << last.grad_norm << "\n";
  if (trace.aborted) {
    err << "run aborted: " << trace.abort_reason << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

inline std::vector<ManifoldDescriptor> check_targets(const std::string& what) {
  std::vector<ManifoldDescriptor> out;
  if (what == "all") {
    for (ManifoldKind k : kAllManifoldKinds) out.push_back(default_descriptor(k));
  } else if (what.find('(') == std::string::npos) {
    const auto kind = kind_from_name(what);
    if (!kind) throw ConfigError("unknown manifold kind '" + what + "'");
    out.push_back(default_descriptor(*kind));
  } else {
    out.push_back(parse_descriptor(what));
  }
  return out;
}

inline int check_command(const CheckOptions& o, const std::vector<ManifoldDescriptor>& targets, std::ostream& out) {
  bool all_pass = true;
  nlohmann::ordered_json reports = nlohmann::ordered_json::array();
  for (const auto& d : targets) {
    const CheckReport report = run_manifold_suite(d, o.trials, o.seed, o.tol);
    all_pass = all_pass && report.pass();
    out << (report.pass() ? "PASS " : "FAIL ") << report.subject << "\n";
    for (const auto& r : report.records) {
      out << "  " << (r.skipped ? "skip" : r.pass ? "ok  " : "FAIL") << " " << r.property;
      if (!r.skipped) out << " max_error=" << r.max_error << " tol=" << r.tol;
      if (!r.note.empty()) out << " (" << r.note << ")";
      out << "\n";
    }
    reports.push_back(to_json(report));
  }
  if (!o.json.empty()) {
    std::ofstream f(o.json, std::ios::binary);
    if (!f) throw Error("cannot open " + o.json + " for writing");
    f << reports.dump(2) << "\n";
  }
  return all_pass ? kExitOk : kExitFailure;
}

}  // namespace detail

/// Entry point of the riemopt_bench tool.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Riemannian optimization benchmarks and manifold checks", "riemopt_bench"};
  app.require_subcommand(1);

  RunOptions ro;
  CLI::App* run_cmd = app.add_subcommand("run", "Optimize a benchmark problem and write its trace as CSV");
  run_cmd->add_option("--problem", ro.problem, "Problem name")->required()->check(CLI::IsMember(list_problems()));
  run_cmd->add_option("--optimizer", ro.optimizer, "rsgd, crmsprop or radam")
      ->required()
      ->check(CLI::IsMember({"rsgd", "crmsprop", "radam"}));
  run_cmd->add_option("--lr", ro.lr, "Learning rate")->required();
  run_cmd->add_option("--momentum", ro.momentum, "RSGD momentum");
  run_cmd->add_option("--rho", ro.rho, "CRMSProp decay");
  run_cmd->add_option("--beta1", ro.beta1, "RAdam first-moment decay");
  run_cmd->add_option("--beta2", ro.beta2, "RAdam second-moment decay");
  run_cmd->add_flag("--amsgrad", ro.amsgrad, "Use the AMSGrad maximum");
  run_cmd->add_option("--steps", ro.steps, "Number of updates")->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", ro.seed, "Seed for problem data and starting point");
  run_cmd->add_option("--precision", ro.precision, "single or double")->check(CLI::IsMember({"single", "double"}));
  run_cmd->add_flag("--retraction", ro.retraction, "Step with retr instead of exp");
  run_cmd->add_flag("--approx-transport", ro.approx_transport, "Move accumulators with transp instead of ptransp");
  run_cmd->add_option("--out", ro.out, "CSV output path")->required();
  run_cmd->add_option("--points", ro.size.points, "Points (pole, poincare_stress) or anchors (spd_mean)");
  run_cmd->add_option("--dim", ro.size.dim, "Ambient dimension (rayleigh, subspace) or matrix size (spd_mean)");
  run_cmd->add_option("--rank", ro.size.rank, "Subspace dimension (subspace)");

  CheckOptions co;
  CLI::App* check_cmd = app.add_subcommand("check", "Run the manifold property suite");
  check_cmd->add_option("--manifold", co.manifold, "Manifold kind, descriptor such as sphere(5), or 'all'")
      ->required();
  check_cmd->add_option("--trials", co.trials, "Random configurations per manifold")->check(CLI::PositiveNumber);
  check_cmd->add_option("--seed", co.seed, "Seed");
  check_cmd->add_option("--tol", co.tol, "Membership tolerance")->check(CLI::PositiveNumber);
  check_cmd->add_option("--json", co.json, "Write the reports as JSON");

  CLI::App* list_cmd = app.add_subcommand("list", "List the benchmark problems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "riemopt_bench: " << e.what() << "\n";
    if (const CLI::App* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front())
      err << "see '" << sub->get_name() << " --help'\n";
    else
      err << "see '--help'\n";
    return kExitUsage;
  }

  try {
    if (list_cmd->parsed()) {
      for (const auto& name : list_problems()) out << name << "\n";
      return kExitOk;
    }
    if (check_cmd->parsed()) {
      std::vector<ManifoldDescriptor> targets;
      try {
        targets = detail::check_targets(co.manifold);
      } catch (const Error& e) {
        err << "riemopt_bench: " << e.what() << "\n";
        return kExitUsage;
      }
      return detail::check_command(co, targets, out);
    }
    if (run_cmd->parsed()) {
      OptimizerConfig config;
      config.algorithm = algorithm_from_name(ro.optimizer);
      config.learning_rate = ro.lr;
      config.momentum = ro.momentum;
      config.rho = ro.rho;
      config.beta1 = ro.beta1;
      config.beta2 = ro.beta2;
      config.amsgrad = ro.amsgrad;
      config.use_exp = !ro.retraction;
      config.use_exact_transport = !ro.approx_transport;
      try {
        config.validate();
      } catch (const ConfigError& e) {
        err << "riemopt_bench: " << e.what() << "\n";
        return kExitUsage;
      }
      try {
        if (ro.precision == "single") return detail::run_command<float>(ro, config, out, err);
        return detail::run_command<double>(ro, config, out, err);
      } catch (const ConfigError& e) {
        err << "riemopt_bench: " << e.what() << "\n";
        return kExitUsage;
      }
    }
  } catch (const Error& e) {
    err << "riemopt_bench: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace riemopt::bench
