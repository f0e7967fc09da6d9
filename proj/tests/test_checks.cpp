#include <gtest/gtest.h>

#include <cmath>

#include "riemopt/checks.hpp"
#include "riemopt/manifolds.hpp"

using riemopt::Shape;
using riemopt::Tensor;

namespace {

Tensor<double> scalar(double v) { return Tensor<double>(Shape{1}, {v}); }

enum class Fault {
  None,
  RandomOffManifold,
  ProjuNotIdempotent,
  ProjuNotTangent,
  ExpOffManifold,
  RetrOffManifold,
  ExpZeroMoves,
  LogScaled,
  DistScaled,
  PtranspSignFlip,
  PtranspNotIsometric,
  TranspNotTangent,
  RgradScaled,
  RetrFirstOrder,
};

/// Forwards every operator to a sphere, corrupting the one named by the fault.
class FaultyManifold : public riemopt::Manifold<double> {
 public:
  FaultyManifold(riemopt::ManifoldPtr<double> inner, Fault fault)
      : Manifold<double>(inner->descriptor()), inner_(std::move(inner)), fault_(fault) {}

  double inner(In x, In u, In v) const override { return inner_->inner(x, u, v); }
  void proju(In x, In u, Out out) const override {
    inner_->proju(x, u, out);
    if (fault_ == Fault::ProjuNotIdempotent)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += 1e-3 * u[i];
    if (fault_ == Fault::ProjuNotTangent)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += 1e-3 * x[i];
  }
  void projx(In x, Out out) const override { inner_->projx(x, out); }
  void egrad2rgrad(In x, In g, Out out) const override {
    inner_->egrad2rgrad(x, g, out);
    if (fault_ == Fault::RgradScaled)
      for (auto& v : out) v *= 1.01;
  }
  void exp(In x, In u, Out out) const override {
    inner_->exp(x, u, out);
    if (fault_ == Fault::ExpOffManifold)
      for (auto& v : out) v *= 1.001;
    if (fault_ == Fault::ExpZeroMoves)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += 1e-10 * x[i];
  }
  void log(In x, In y, Out out) const override {
    inner_->log(x, y, out);
    if (fault_ == Fault::LogScaled)
      for (auto& v : out) v *= 1.001;
  }
  void retr(In x, In u, Out out) const override {
    if (fault_ == Fault::RetrFirstOrder) {
      std::vector<double> w(u.begin(), u.end());
      for (auto& v : w) v *= 1.2;
      inner_->retr(x, w, out);
      return;
    }
    inner_->retr(x, u, out);
    if (fault_ == Fault::RetrOffManifold)
      for (auto& v : out) v *= 1.001;
  }
  void transp(In x, In y, In v, Out out) const override {
    if (fault_ == Fault::TranspNotTangent) {
      std::copy(v.begin(), v.end(), out.begin());
      return;
    }
    inner_->transp(x, y, v, out);
  }
  void ptransp(In x, In y, In v, Out out) const override {
    inner_->ptransp(x, y, v, out);
    if (fault_ == Fault::PtranspSignFlip)
      for (auto& c : out) c = -c;
    if (fault_ == Fault::PtranspNotIsometric)
      for (auto& c : out) c *= 1.01;
  }
  double dist(In x, In y) const override {
    const double d = inner_->dist(x, y);
    return fault_ == Fault::DistScaled ? 1.001 * d : d;
  }
  void random_point(riemopt::Rng& rng, Out out) const override {
    inner_->random_point(rng, out);
    if (fault_ == Fault::RandomOffManifold)
      for (auto& v : out) v *= 1.01;
  }
  double point_error(In x) const override { return inner_->point_error(x); }
  double vector_error(In x, In v) const override { return inner_->vector_error(x, v); }
  bool has_exp() const override { return inner_->has_exp(); }
  bool has_log() const override { return inner_->has_log(); }
  bool has_ptransp() const override { return inner_->has_ptransp(); }
  bool retr_is_exp() const override { return inner_->retr_is_exp(); }

 private:
  riemopt::ManifoldPtr<double> inner_;
  Fault fault_;
};

riemopt::CheckReport faulty_report(Fault f, const char* base = "sphere(4)") {
  FaultyManifold m(riemopt::make_manifold<double>(base), f);
  return riemopt::run_manifold_suite(m, 100, 7);
}

}  // namespace

// --- finite differences ----------------------------------------------------

TEST(CentralDiff, QuadraticIsExact) {
  const auto g = riemopt::central_diff_grad<double>(
      [](const Tensor<double>& x) { return x[0] * x[0]; }, scalar(3.0), 1e-5);
  EXPECT_NEAR(g[0], 6.0, 1e-9);
}

TEST(CentralDiff, ConstantHasZeroGradient) {
  const auto g = riemopt::central_diff_grad<double>([](const Tensor<double>&) { return 4.2; },
                                                    Tensor<double>(Shape{2, 2}, {1, 2, 3, 4}));
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(g.shape(), (Shape{2, 2}));
}

TEST(CentralDiff, KinkIsFlagged) {
  const Tensor<double> p(Shape{3}, {0.3, -1.0, 2.0});
  auto dist = [&](const Tensor<double>& x) {
    double s = 0;
    for (std::size_t i = 0; i < 3; ++i) s += (x[i] - p[i]) * (x[i] - p[i]);
    return std::sqrt(s);
  };
  EXPECT_THROW(riemopt::central_diff_grad<double>(dist, p), riemopt::UnstableGradient);
  EXPECT_THROW(riemopt::central_diff_grad<double>(dist, p), riemopt::NonFiniteObjective);
}

TEST(CentralDiff, NonFiniteObjectiveIsReported) {
  auto f = [](const Tensor<double>& x) { return std::log(x[0]); };
  EXPECT_THROW(riemopt::central_diff_grad<double>(f, scalar(0.0), 1e-6), riemopt::NonFiniteObjective);
}

TEST(CentralDiff, SecondOrderAccuracy) {
  // error of the central quotient of sin at 1 shrinks by ~100 when h shrinks by 10
  auto f = [](const Tensor<double>& x) { return std::sin(x[0]); };
  const double e1 = std::abs(riemopt::central_diff_grad<double>(f, scalar(1.0), 1e-2)[0] - std::cos(1.0));
  const double e2 = std::abs(riemopt::central_diff_grad<double>(f, scalar(1.0), 1e-3)[0] - std::cos(1.0));
  EXPECT_NEAR(std::log10(e1 / e2), 2.0, 0.05);
}

// --- gradient check --------------------------------------------------------

namespace {

riemopt::Matrix<double> rayleigh_matrix() {
  return riemopt::Matrix<double>(3, 3, {2, -1, 0.5, -1, 3, 0.2, 0.5, 0.2, 1});
}

double rayleigh(const Tensor<double>& x) {
  const auto a = rayleigh_matrix();
  double s = 0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) s += x[i] * a(i, j) * x[j];
  return s;
}

Tensor<double> scaled_grad(const Tensor<double>& x, double k) {
  const auto a = rayleigh_matrix();
  Tensor<double> g(Shape{3});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) g[i] += k * a(i, j) * x[j];
  return g;
}

}  // namespace

TEST(CheckGradient, RayleighPasses) {
  const Tensor<double> x(Shape{3}, {0.6, 0.0, 0.8});
  const auto r = riemopt::check_gradient(rayleigh, [](const Tensor<double>& y) { return scaled_grad(y, 2.0); }, x,
                                         1e-6, 1e-5);
  EXPECT_TRUE(r.pass()) << r.records[0].max_error;
  EXPECT_EQ(r.records[0].property, "gradient");
}

TEST(CheckGradient, ScaledGradientFails) {
  const Tensor<double> x(Shape{3}, {0.6, 0.0, 0.8});
  const auto r = riemopt::check_gradient(rayleigh, [](const Tensor<double>& y) { return scaled_grad(y, 2.1); }, x,
                                         1e-6, 1e-5);
  EXPECT_FALSE(r.pass());
}

TEST(CheckGradient, ZeroObjectivePasses) {
  const auto r = riemopt::check_gradient([](const Tensor<double>&) { return 0.0; },
                                         [](const Tensor<double>& y) { return Tensor<double>(y.shape()); },
                                         Tensor<double>(Shape{4}, {1, 2, 3, 4}));
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.records[0].max_error, 0.0);
}

TEST(CheckGradient, WrongShapeThrows) {
  EXPECT_THROW(riemopt::check_gradient([](const Tensor<double>&) { return 0.0; },
                                       [](const Tensor<double>&) { return Tensor<double>(Shape{2}); },
                                       Tensor<double>(Shape{3})),
               riemopt::ShapeError);
}

// --- suite -----------------------------------------------------------------

TEST(Suite, SphereSeedSevenPasses) {
  const auto r = riemopt::run_manifold_suite(riemopt::parse_descriptor("sphere(3)"), 100, 7);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.subject, "sphere(3)");
}

TEST(Suite, EuclideanSkipsOnlyRetractionOrder) {
  const auto r = riemopt::run_manifold_suite(riemopt::parse_descriptor("euclidean(3)"), 100, 7);
  EXPECT_TRUE(r.pass());
  for (const auto& rec : r.records) EXPECT_EQ(rec.skipped, rec.property == "retraction_order") << rec.property;
}

TEST(Suite, DeterministicGivenSeed) {
  const auto d = riemopt::parse_descriptor("spd_affine(3)");
  EXPECT_EQ(riemopt::to_json(riemopt::run_manifold_suite(d, 20, 3)).dump(),
            riemopt::to_json(riemopt::run_manifold_suite(d, 20, 3)).dump());
  EXPECT_NE(riemopt::to_json(riemopt::run_manifold_suite(d, 20, 3)).dump(),
            riemopt::to_json(riemopt::run_manifold_suite(d, 20, 4)).dump());
}

TEST(Suite, ZeroTrialsIsAConfigError) {
  EXPECT_THROW(riemopt::run_manifold_suite(riemopt::parse_descriptor("sphere(3)"), 0, 1), riemopt::ConfigError);
}

TEST(Suite, MembershipToleranceIsHonoured) {
  // a tolerance below roundoff makes membership fail
  const auto r = riemopt::run_manifold_suite(riemopt::parse_descriptor("so(4)"), 20, 1, 1e-30);
  EXPECT_FALSE(r.pass());
}

TEST(Suite, JsonKeyOrder) {
  const auto r = riemopt::run_manifold_suite(riemopt::parse_descriptor("stiefel(4,2)"), 3, 1);
  const auto j = riemopt::to_json(r);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"subject", "pass", "records"}));
  const auto& rec = j["records"][0];
  keys.clear();
  for (auto it = rec.begin(); it != rec.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"property", "trials", "max_error", "tol", "pass"}));
  const auto* skipped = r.find("exp_membership");
  ASSERT_NE(skipped, nullptr);
  EXPECT_TRUE(skipped->skipped);
  EXPECT_TRUE(to_json(*skipped).contains("note"));
}

TEST(Suite, NonFiniteErrorsSerializeAsNull) {
  riemopt::CheckRecord rec;
  rec.property = "x";
  rec.max_error = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(riemopt::to_json(rec)["max_error"].is_null());
}

// --- mutation tests --------------------------------------------------------

TEST(Mutation, UnfaultedWrapperPasses) {
  const auto r = faulty_report(Fault::None);
  EXPECT_TRUE(r.pass());
}

struct MutationCase {
  Fault fault;
  const char* property;
};

class Mutation : public testing::TestWithParam<MutationCase> {};

TEST_P(Mutation, MatchingPropertyDetectsFault) {
  const auto r = faulty_report(GetParam().fault);
  const auto* rec = r.find(GetParam().property);
  ASSERT_NE(rec, nullptr);
  EXPECT_FALSE(rec->skipped);
  EXPECT_FALSE(rec->pass) << GetParam().property << " max_error=" << rec->max_error;
  EXPECT_FALSE(r.pass());
}

INSTANTIATE_TEST_SUITE_P(
    Faults, Mutation,
    testing::Values(MutationCase{Fault::RandomOffManifold, "random_membership"},
                    MutationCase{Fault::ProjuNotIdempotent, "proju_idempotence"},
                    MutationCase{Fault::ProjuNotTangent, "proju_tangency"},
                    MutationCase{Fault::ExpOffManifold, "exp_membership"},
                    MutationCase{Fault::RetrOffManifold, "retr_membership"},
                    MutationCase{Fault::ExpZeroMoves, "zero_laws"},
                    MutationCase{Fault::LogScaled, "exp_log_inversion"},
                    MutationCase{Fault::DistScaled, "geodesic_length"},
                    MutationCase{Fault::PtranspSignFlip, "ptransp_isometry"},
                    MutationCase{Fault::PtranspNotIsometric, "ptransp_isometry"},
                    MutationCase{Fault::TranspNotTangent, "transport_tangency"},
                    MutationCase{Fault::RgradScaled, "rgrad_riesz"},
                    MutationCase{Fault::RetrFirstOrder, "retraction_order"}));

TEST(Suite, ProductComponentwiseIsExact) {
  const auto r = riemopt::run_manifold_suite(riemopt::parse_descriptor("product(sphere(3),spd_affine(2))"), 20, 1);
  const auto* rec = r.find("product_componentwise");
  ASSERT_NE(rec, nullptr);
  EXPECT_TRUE(rec->pass);
  EXPECT_EQ(rec->max_error, 0.0);
}
