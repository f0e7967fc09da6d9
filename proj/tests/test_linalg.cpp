#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "riemopt/linalg.hpp"
#include "test_util.hpp"

using riemopt::Matrix;
using riemopt::Rng;
using namespace testutil;

TEST(SymEig, DiagonalInputSortsAscending) {
  const auto e = riemopt::sym_eig(Matrix<double>::diagonal({3.0, 1.0}));
  EXPECT_DOUBLE_EQ(e.values[0], 1.0);
  EXPECT_DOUBLE_EQ(e.values[1], 3.0);
  EXPECT_NEAR(std::abs(e.vectors(1, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(e.vectors(0, 1)), 1.0, 1e-15);
}

TEST(SymEig, IdentityHasUnitSpectrum) {
  const auto e = riemopt::sym_eig(Matrix<double>::identity(3));
  for (double v : e.values) EXPECT_DOUBLE_EQ(v, 1.0);
  EXPECT_LE(max_diff(e.vectors.transpose() * e.vectors, Matrix<double>::identity(3)), 1e-14);
}

TEST(SymEig, TwoByTwoMatchesCharacteristicRoots) {
  const Matrix<double> a(2, 2, {2, 1, 1, 2});
  // roots of l^2 - tr l + det
  const double tr = 4, dt = 3;
  const double disc = std::sqrt(tr * tr - 4 * dt);
  const auto e = riemopt::sym_eig(a);
  EXPECT_NEAR(e.values[0], (tr - disc) / 2, 1e-15);
  EXPECT_NEAR(e.values[1], (tr + disc) / 2, 1e-15);
}

TEST(SymEig, RejectsAsymmetricInput) {
  EXPECT_THROW(riemopt::sym_eig(Matrix<double>(2, 2, {1, 2, 0, 1})), riemopt::NotSymmetric);
}

TEST(SymEig, SymmetrizesTinyAsymmetry) {
  const Matrix<double> a(2, 2, {2, 1 + 1e-12, 1, 2});
  EXPECT_NO_THROW(riemopt::sym_eig(a));
}

TEST(SymEig, RandomReconstructionProperty) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + trial % 8;
    const Matrix<double> a = random_symmetric(rng, n);
    const auto e = riemopt::sym_eig(a);
    const Matrix<double> rebuilt =
        e.vectors * Matrix<double>::diagonal(std::span<const double>(e.values)) * e.vectors.transpose();
    ASSERT_LE(max_diff(rebuilt, a), 1e-9 * a.max_abs()) << "trial " << trial;
    ASSERT_LE(max_diff(e.vectors.transpose() * e.vectors, Matrix<double>::identity(n)), 1e-10);
    for (std::size_t i = 1; i < n; ++i) ASSERT_LE(e.values[i - 1], e.values[i]);
  }
}

TEST(SymEig, SinglePrecision) {
  Rng rng(5);
  const Matrix<double> a = random_symmetric(rng, 5);
  Matrix<float> af(5, 5);
  for (std::size_t i = 0; i < 25; ++i) af.values()[i] = static_cast<float>(a.values()[i]);
  const auto e = riemopt::sym_eig(af);
  const auto ed = riemopt::sym_eig(a);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(e.values[i], ed.values[i], 1e-4);
}

TEST(Cholesky, Identity) {
  EXPECT_EQ(riemopt::cholesky(Matrix<double>::identity(3)), Matrix<double>::identity(3));
}

TEST(Cholesky, TwoByTwo) {
  const Matrix<double> a(2, 2, {4, 2, 2, 5});
  const Matrix<double> l = riemopt::cholesky(a);
  EXPECT_LE(max_diff(l, Matrix<double>(2, 2, {2, 0, 1, 2})), 1e-15);
  EXPECT_LE(max_diff(l * l.transpose(), a), 1e-14);
}

TEST(Cholesky, IndefiniteReportsPivot) {
  try {
    riemopt::cholesky(Matrix<double>(2, 2, {1, 2, 2, 1}));
    FAIL() << "expected NotPositiveDefinite";
  } catch (const riemopt::NotPositiveDefinite& e) {
    EXPECT_EQ(e.pivot(), 1u);
  }
}

TEST(Cholesky, RandomReconstruction) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + t % 7;
    const Matrix<double> g = gaussian(rng, n, n);
    const Matrix<double> a = g * g.transpose() + Matrix<double>::identity(n) * 0.1;
    const Matrix<double> l = riemopt::cholesky(a);
    ASSERT_LE(max_diff(l * l.transpose(), a), 1e-10 * a.max_abs());
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_GT(l(i, i), 0.0);
      for (std::size_t j = i + 1; j < n; ++j) ASSERT_EQ(l(i, j), 0.0);
    }
  }
}

TEST(QR, Identity) {
  const auto f = riemopt::qr_signfix(Matrix<double>::identity(2));
  EXPECT_EQ(f.q, Matrix<double>::identity(2));
  EXPECT_EQ(f.r, Matrix<double>::identity(2));
}

TEST(QR, ScalingLandsInR) {
  const auto f = riemopt::qr_signfix(Matrix<double>::identity(2) * 2.0);
  EXPECT_LE(max_diff(f.q, Matrix<double>::identity(2)), 1e-15);
  EXPECT_LE(max_diff(f.r, Matrix<double>::identity(2) * 2.0), 1e-15);
}

TEST(QR, UnitColumn) {
  const auto f = riemopt::qr_signfix(Matrix<double>(2, 1, {0, 1}));
  EXPECT_EQ(f.q, Matrix<double>(2, 1, {0, 1}));
  EXPECT_EQ(f.r, Matrix<double>(1, 1, {1}));
}

TEST(QR, NegativeDiagonalIsFlipped) {
  const auto f = riemopt::qr_signfix(Matrix<double>(2, 2, {-1, 0, 0, -3}));
  EXPECT_LE(max_diff(f.q, Matrix<double>(2, 2, {-1, 0, 0, -1})), 1e-15);
  EXPECT_LE(max_diff(f.r, Matrix<double>(2, 2, {1, 0, 0, 3})), 1e-15);
}

TEST(QR, RankDeficientReportsColumn) {
  try {
    riemopt::qr_signfix(Matrix<double>(3, 2, {1, 2, 1, 2, 1, 2}));
    FAIL() << "expected RankDeficient";
  } catch (const riemopt::RankDeficient& e) {
    EXPECT_EQ(e.column(), 1u);
  }
}

TEST(QR, RandomProperties) {
  Rng rng(11);
  for (int t = 0; t < 300; ++t) {
    const std::size_t p = 1 + t % 5;
    const std::size_t n = p + t % 4;
    const Matrix<double> a = gaussian(rng, n, p);
    const auto f = riemopt::qr_signfix(a);
    ASSERT_LE(max_diff(f.q.transpose() * f.q, Matrix<double>::identity(p)), 1e-10);
    ASSERT_LE(max_diff(f.q * f.r, a), 1e-10 * a.max_abs());
    for (std::size_t i = 0; i < p; ++i) {
      ASSERT_GT(f.r(i, i), 0.0);
      for (std::size_t j = 0; j < i; ++j) ASSERT_EQ(f.r(i, j), 0.0);
    }
  }
}

TEST(SpectralFunctions, Examples) {
  EXPECT_EQ(riemopt::expm_sym(Matrix<double>(2, 2)), Matrix<double>::identity(2));
  const double e2 = std::exp(2.0);
  EXPECT_LE(max_diff(riemopt::logm_spd(Matrix<double>::diagonal({e2, 1.0})), Matrix<double>::diagonal({2.0, 0.0})),
            1e-15);
  EXPECT_LE(max_diff(riemopt::sqrtm_spd(Matrix<double>::diagonal({4.0, 9.0})), Matrix<double>::diagonal({2.0, 3.0})),
            1e-15);
  EXPECT_LE(max_diff(riemopt::invsqrtm_spd(Matrix<double>::diagonal({4.0, 9.0})),
                     Matrix<double>::diagonal({0.5, 1.0 / 3.0})),
            1e-15);
}

TEST(SpectralFunctions, RejectNonPositiveSpectrum) {
  EXPECT_THROW(riemopt::logm_spd(Matrix<double>::diagonal({1.0, 0.0})), riemopt::NotPositiveDefinite);
  EXPECT_THROW(riemopt::sqrtm_spd(Matrix<double>::diagonal({1.0, -2.0})), riemopt::NotPositiveDefinite);
}

TEST(SpectralFunctions, ExpLogRoundTripUpToConditionMillion) {
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + t % 6;
    std::vector<double> spectrum(n);
    for (std::size_t i = 0; i < n; ++i) spectrum[i] = std::pow(10.0, -3.0 + 6.0 * rng.uniform(0, 1));
    spectrum[0] = 1e-3;
    spectrum[n - 1] = 1e3;
    const Matrix<double> a = with_spectrum(rng, spectrum);
    const Matrix<double> back = riemopt::expm_sym(riemopt::logm_spd(a));
    ASSERT_LE((back - a).frobenius(), 1e-8 * a.frobenius()) << "trial " << t;
  }
}

TEST(SpectralFunctions, SqrtSquaresBack) {
  Rng rng(19);
  const Matrix<double> a = with_spectrum(rng, {0.5, 2.0, 7.0});
  const Matrix<double> s = riemopt::sqrtm_spd(a);
  EXPECT_LE(max_diff(s * s, a), 1e-13);
  EXPECT_LE(max_diff(riemopt::inv_spd(a) * a, Matrix<double>::identity(3)), 1e-13);
}

TEST(Dlogm, AtIdentityIsIdentityMap) {
  const Matrix<double> u(2, 2, {0.3, -1.2, -1.2, 2.0});
  EXPECT_LE(max_diff(riemopt::dlogm_spd(Matrix<double>::identity(2), u), u), 1e-15);
}

TEST(Dlogm, ScalarMatrix) {
  const double a = 2.5;
  const Matrix<double> u(2, 2, {0.3, -1.2, -1.2, 2.0});
  EXPECT_LE(max_diff(riemopt::dlogm_spd(Matrix<double>::diagonal({a, a}), u), u * (1.0 / a)), 1e-15);
}

TEST(Dlogm, DiagonalExampleAgainstCentralDifference) {
  const double e = std::exp(1.0);
  const Matrix<double> a = Matrix<double>::diagonal({1.0, e});
  const Matrix<double> u = Matrix<double>::diagonal({0.0, 1.0});
  const double h = 1e-5;
  const Matrix<double> fd = (riemopt::logm_spd(a + u * h) - riemopt::logm_spd(a - u * h)) * (1.0 / (2 * h));
  const Matrix<double> got = riemopt::dlogm_spd(a, u);
  EXPECT_LE(max_diff(got, Matrix<double>::diagonal({0.0, 1.0 / e})), 1e-15);
  EXPECT_LE(max_diff(got, fd), 1e-9);
}

TEST(Dlogm, MatchesCentralDifferences) {
  Rng rng(23);
  const double h = 1e-5;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + t % 4;
    std::vector<double> spectrum(n);
    for (auto& v : spectrum) v = std::exp(rng.uniform(-1.5, 1.5));
    if (t % 5 == 0) spectrum[1] = spectrum[0] * (1 + 1e-12);  // near-equal pair
    const Matrix<double> a = with_spectrum(rng, spectrum);
    const Matrix<double> u = random_symmetric(rng, n);
    const Matrix<double> fd = (riemopt::logm_spd(a + u * h) - riemopt::logm_spd(a - u * h)) * (1.0 / (2 * h));
    const Matrix<double> got = riemopt::dlogm_spd(a, u);
    ASSERT_LE((got - fd).frobenius(), 1e-5 * fd.frobenius()) << "trial " << t;
  }
}

TEST(Dexpm, MatchesCentralDifferencesAndInvertsDlogm) {
  Rng rng(29);
  const double h = 1e-5;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + t % 4;
    const Matrix<double> s = random_symmetric(rng, n);
    const Matrix<double> u = random_symmetric(rng, n);
    const Matrix<double> fd = (riemopt::expm_sym(s + u * h) - riemopt::expm_sym(s - u * h)) * (1.0 / (2 * h));
    const Matrix<double> got = riemopt::dexpm_sym(s, u);
    ASSERT_LE((got - fd).frobenius(), 1e-5 * fd.frobenius());
    // chain rule: dlog at exp(S) undoes dexp at S
    const Matrix<double> back = riemopt::dlogm_spd(riemopt::expm_sym(s), got);
    ASSERT_LE((back - u).frobenius(), 1e-9 * u.frobenius());
  }
}

TEST(SolveTriangular, Examples) {
  using riemopt::Triangle;
  const Matrix<double> b(2, 2, {1, 2, 3, 4});
  EXPECT_EQ(riemopt::solve_triangular(Matrix<double>::identity(2), b, Triangle::Lower), b);
  EXPECT_LE(max_diff(riemopt::solve_triangular(Matrix<double>::diagonal({2.0, 4.0}), Matrix<double>::diagonal({2.0, 4.0}),
                                               Triangle::Lower),
                     Matrix<double>::identity(2)),
            1e-15);
  const Matrix<double> x =
      riemopt::solve_triangular(Matrix<double>(2, 2, {1, 0, 1, 1}), Matrix<double>(2, 1, {1, 2}), Triangle::Lower);
  EXPECT_LE(max_diff(x, Matrix<double>(2, 1, {1, 1})), 1e-15);
}

TEST(SolveTriangular, AllVariantsHaveSmallResidual) {
  using namespace riemopt;
  Rng rng(31);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + t % 6;
    Matrix<double> l = gaussian(rng, n, n);
    for (std::size_t i = 0; i < n; ++i) {
      l(i, i) = 1.0 + std::abs(l(i, i));
      for (std::size_t j = i + 1; j < n; ++j) l(i, j) = 0.0;
    }
    const Matrix<double> u = l.transpose();
    const Matrix<double> b = gaussian(rng, n, 3);
    const Matrix<double> bt = b.transpose();
    ASSERT_LE(max_diff(l * solve_triangular(l, b, Triangle::Lower), b), 1e-12 * (1 + b.max_abs()) * 10);
    ASSERT_LE(max_diff(u * solve_triangular(u, b, Triangle::Upper), b), 1e-11);
    ASSERT_LE(max_diff(l.transpose() * solve_triangular(l, b, Triangle::Lower, Side::Left, Transpose::Yes), b), 1e-11);
    ASSERT_LE(max_diff(solve_triangular(l, bt, Triangle::Lower, Side::Right) * l, bt), 1e-11);
    ASSERT_LE(max_diff(solve_triangular(u, bt, Triangle::Upper, Side::Right, Transpose::Yes) * u.transpose(), bt),
              1e-11);
  }
}

TEST(SolveTriangular, ZeroDiagonalIsSingular) {
  EXPECT_THROW(riemopt::solve_triangular(Matrix<double>(2, 2, {1, 0, 1, 0}), Matrix<double>::identity(2),
                                         riemopt::Triangle::Lower),
               riemopt::Singular);
}

TEST(LU, SolveAndDeterminant) {
  const Matrix<double> a(2, 2, {1, 2, 3, 4});
  EXPECT_NEAR(riemopt::det(a), -2.0, 1e-15);
  const Matrix<double> x = riemopt::solve(a, Matrix<double>(2, 1, {5, 6}));
  // Cramer's rule
  EXPECT_NEAR(x(0, 0), (5 * 4 - 2 * 6) / -2.0, 1e-14);
  EXPECT_NEAR(x(1, 0), (1 * 6 - 3 * 5) / -2.0, 1e-14);
  EXPECT_THROW(riemopt::solve(Matrix<double>(2, 2, {1, 2, 2, 4}), Matrix<double>::identity(2)), riemopt::Singular);
}

TEST(Expm, RotationGenerator) {
  const double th = 0.7;
  const Matrix<double> k(2, 2, {0, -th, th, 0});
  const Matrix<double> r(2, 2, {std::cos(th), -std::sin(th), std::sin(th), std::cos(th)});
  EXPECT_LE(max_diff(riemopt::expm(k), r), 1e-14);
}

TEST(Expm, MatchesTaylorOracle) {
  Rng rng(37);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + t % 6;
    const Matrix<double> a = gaussian(rng, n, n) * (0.1 + 0.5 * (t % 7));
    const Matrix<double> want = taylor_expm(a);
    ASSERT_LE(max_diff(riemopt::expm(a), want), 1e-12 * std::max(1.0, want.max_abs())) << "trial " << t;
  }
}

TEST(Expm, AgreesWithSymmetricPath) {
  Rng rng(41);
  const Matrix<double> s = random_symmetric(rng, 4);
  EXPECT_LE(max_diff(riemopt::expm(s), riemopt::expm_sym(s)), 1e-12 * riemopt::expm_sym(s).max_abs());
}

TEST(SVD, ReconstructionAndOrder) {
  Rng rng(43);
  for (int t = 0; t < 200; ++t) {
    const std::size_t p = 1 + t % 5;
    const std::size_t n = p + t % 3;
    const Matrix<double> a = gaussian(rng, n, p);
    const auto f = riemopt::svd_thin(a);
    const Matrix<double> rebuilt =
        f.u * Matrix<double>::diagonal(std::span<const double>(f.sigma)) * f.v.transpose();
    ASSERT_LE(max_diff(rebuilt, a), 1e-12 * a.max_abs());
    ASSERT_LE(max_diff(f.u.transpose() * f.u, Matrix<double>::identity(p)), 1e-12);
    ASSERT_LE(max_diff(f.v.transpose() * f.v, Matrix<double>::identity(p)), 1e-12);
    for (std::size_t i = 1; i < p; ++i) ASSERT_GE(f.sigma[i - 1], f.sigma[i]);
  }
}

TEST(SVD, RankDeficientInputConverges) {
  // Last row zero: rank 3 with four columns.
  const Matrix<double> a(4, 4, {-0.0038961038961038961, 0.062337662337662338, -0.18701298701298702, 0,
                                -0.03896103896103896, 0.023376623376623377, 0.12467532467532468,
                                0.062337662337662338, 0.07792207792207792, 0, 0.14025974025974025,
                                0.062337662337662338, 0, 0, 0, 0});
  const auto f = riemopt::svd_thin(a);
  EXPECT_LE(f.sigma[3], 1e-15);
  const Matrix<double> rebuilt = f.u * Matrix<double>::diagonal(std::span<const double>(f.sigma)) * f.v.transpose();
  EXPECT_LE(max_diff(rebuilt, a), 1e-15);
}

TEST(MatrixBasics, SymSkewSplit) {
  const Matrix<double> a(2, 2, {1, 2, 3, 4});
  EXPECT_EQ(riemopt::sym(a) + riemopt::skew(a), a);
  EXPECT_EQ(riemopt::sym(a).asymmetry(), 0.0);
  EXPECT_THROW(a * Matrix<double>(3, 1), riemopt::ShapeError);
}
