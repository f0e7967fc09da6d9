// Low-level operators on the 2-sphere.
#include <cstdio>

#include "riemopt/riemopt.hpp"

using riemopt::Tensor;

static void print(const char* label, const Tensor<double>& t) {
  std::printf("%-4s", label);
  for (double v : t.values()) std::printf(" % .6f", v);
  std::printf("\n");
}

int main() {
  const auto s2 = riemopt::make_manifold<double>("sphere(3)");
  const auto& m = *s2;

  const Tensor<double> x = riemopt::projx(m, Tensor<double>({3}, {0.1, -0.1, 0.1}));
  const Tensor<double> u = riemopt::proju(m, x, Tensor<double>({3}, {1.0, 1.0, 1.0}));
  const Tensor<double> v = riemopt::proju(m, x, Tensor<double>({3}, {-0.7, -1.4, 1.4}));

  const Tensor<double> y = riemopt::exp(m, x, v);
  const Tensor<double> u_moved = riemopt::transp(m, x, y, u);
  const Tensor<double> v_moved = riemopt::transp(m, x, y, v);

  print("x", x);
  print("u", u);
  print("v", v);
  print("y", y);
  print("u'", u_moved);
  print("v'", v_moved);
  std::printf("dist(x, y) = %.6f, |v|_x = %.6f\n", riemopt::dist(m, x, y)[0], riemopt::norm(m, x, v)[0]);
  std::printf("y on sphere: %s\n", riemopt::check_point(m, y, 1e-9) ? "yes" : "no");
}
