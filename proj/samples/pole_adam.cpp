// Sixteen points on the unit circle pulled toward (0, 1) with Riemannian Adam.
#include <cmath>
#include <cstdio>
#include <vector>

#include "riemopt/riemopt.hpp"

using namespace riemopt;

int main() {
  constexpr std::size_t kPoints = 16;
  constexpr int kSteps = 10;

  const ManifoldDescriptor circle = make_descriptor(ManifoldKind::Sphere, {2});
  const auto m = make_manifold<double>(circle);
  std::vector<ParameterBinding<double>> params{riemopt::bind<double>("var", circle, random(*m, {kPoints}, 1))};
  ParameterBinding<double>& var = params[0];

  OptimizerConfig config;
  config.algorithm = Algorithm::RAdam;
  config.learning_rate = 0.2;
  OptimizerState<double> opt = init(config, params);

  const double pole[2] = {0.0, 1.0};
  for (int step = 0; step <= kSteps; ++step) {
    double sq = 0.0;
    for (std::size_t i = 0; i < var.values.size(); ++i) sq += std::pow(var.values[i] - pole[i % 2], 2);
    const double loss = std::sqrt(sq);
    std::printf("step %2d  loss %.6f\n", step, loss);
    if (step == kSteps) break;

    Tensor<double> grad(var.values.shape());
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = (var.values[i] - pole[i % 2]) / loss;
    apply_dense(opt, var, grad);
  }
}
