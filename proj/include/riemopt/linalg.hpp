#pragma once

// Small dense real linear-algebra kernel. Sizes are desk scale (n <= 64);
// every routine favors accuracy and simple verification over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "riemopt/error.hpp"

namespace riemopt {

/// Precision-dependent tolerances shared by the kernel and the manifolds.
template <typename T>
struct Precision;

template <>
struct Precision<double> {
  static constexpr double sym_rel = 1e-8;
  static constexpr double eig_offdiag_rel = 1e-14;
  static constexpr double rank_rel = 1e-12;
  static constexpr double chol_post_rel = 1e-10;
  static constexpr double membership = 1e-8;
  static constexpr double div_guard = 1e-15;
  static constexpr double domain_clamp = 1e-12;
  static constexpr const char* name = "double";
  static constexpr const char* dtype = "f64";
};

template <>
struct Precision<float> {
  static constexpr float sym_rel = 1e-4f;
  static constexpr float eig_offdiag_rel = 1e-6f;
  static constexpr float rank_rel = 1e-5f;
  static constexpr float chol_post_rel = 1e-4f;
  static constexpr float membership = 1e-4f;
  static constexpr float div_guard = 1e-30f;
  static constexpr float domain_clamp = 1e-6f;
  static constexpr const char* name = "single";
  static constexpr const char* dtype = "f32";
};

template <typename T>
class Matrix {
  static_assert(std::is_floating_point_v<T>);

 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}
  Matrix(std::size_t rows, std::size_t cols, std::initializer_list<T> values)
      : rows_(rows), cols_(cols), data_(values) {
    if (data_.size() != rows * cols) throw ShapeError("matrix initializer has wrong length");
  }

  static Matrix from_span(std::size_t rows, std::size_t cols, std::span<const T> values) {
    if (values.size() != rows * cols) throw ShapeError("matrix span has wrong length");
    Matrix m(rows, cols);
    std::copy(values.begin(), values.end(), m.data_.begin());
    return m;
  }
  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }
  static Matrix diagonal(std::span<const T> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
  static Matrix diagonal(std::initializer_list<T> d) {
    return diagonal(std::span<const T>(d.begin(), d.size()));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  void copy_to(std::span<T> out) const {
    if (out.size() != data_.size()) throw ShapeError("matrix copy target has wrong length");
    std::copy(data_.begin(), data_.end(), out.begin());
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix& operator+=(const Matrix& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Matrix& operator*=(T s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, T s) { return a *= s; }
  friend Matrix operator*(T s, Matrix a) { return a *= s; }
  friend Matrix operator-(Matrix a) { return a *= T(-1); }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) {
      throw ShapeError("matmul mismatch " + std::to_string(a.rows_) + "x" + std::to_string(a.cols_) +
                       " * " + std::to_string(b.rows_) + "x" + std::to_string(b.cols_));
    }
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const T aik = a(i, k);
        if (aik == T(0)) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  /// Elementwise (Hadamard) product.
  Matrix hadamard(const Matrix& o) const {
    check_same(o);
    Matrix c(rows_, cols_);
    for (std::size_t k = 0; k < data_.size(); ++k) c.data_[k] = data_[k] * o.data_[k];
    return c;
  }

  T max_abs() const {
    T m(0);
    for (T v : data_) m = std::max(m, std::abs(v));
    return m;
  }
  T frobenius() const {
    T s(0);
    for (T v : data_) s += v * v;
    return std::sqrt(s);
  }
  T trace() const {
    T s(0);
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
    return s;
  }
  /// max |A - A^T|
  T asymmetry() const {
    if (!square()) return std::numeric_limits<T>::infinity();
    T m(0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i + 1; j < cols_; ++j) m = std::max(m, std::abs((*this)(i, j) - (*this)(j, i)));
    return m;
  }

  bool operator==(const Matrix& o) const = default;

 private:
  void check_same(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw ShapeError("matrix dimension mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <typename T>
T frobenius_inner(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("inner dimension mismatch");
  T s(0);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t k = 0; k < av.size(); ++k) s += av[k] * bv[k];
  return s;
}

/// (A + A^T) / 2
template <typename T>
Matrix<T> sym(const Matrix<T>& a) {
  if (!a.square()) throw ShapeError("sym of non-square matrix");
  Matrix<T> s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = (a(i, j) + a(j, i)) / T(2);
  return s;
}

/// (A - A^T) / 2
template <typename T>
Matrix<T> skew(const Matrix<T>& a) {
  if (!a.square()) throw ShapeError("skew of non-square matrix");
  Matrix<T> s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = (a(i, j) - a(j, i)) / T(2);
  return s;
}

namespace detail {

/// Rejects inputs whose asymmetry exceeds sym_tol, otherwise symmetrizes.
template <typename T>
Matrix<T> require_symmetric(const Matrix<T>& a, const char* routine) {
  if (!a.square()) throw ShapeError(std::string(routine) + ": matrix is not square");
  if (a.rows() == 0) throw ShapeError(std::string(routine) + ": empty matrix");
  const T tol = Precision<T>::sym_rel * std::max(a.max_abs(), std::numeric_limits<T>::min());
  const T asym = a.asymmetry();
  if (!(asym <= tol)) {
    throw NotSymmetric(std::string(routine) + ": input asymmetry " + std::to_string(asym) +
                       " exceeds tolerance " + std::to_string(tol));
  }
  return sym(a);
}

}  // namespace detail

template <typename T>
struct SymEig {
  std::vector<T> values;  // ascending
  Matrix<T> vectors;      // columns are eigenvectors
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
template <typename T>
SymEig<T> sym_eig(const Matrix<T>& input) {
  constexpr std::size_t kMaxSweeps = 100;
  Matrix<T> a = detail::require_symmetric(input, "sym_eig");
  const std::size_t n = a.rows();
  Matrix<T> v = Matrix<T>::identity(n);
  const T tol = Precision<T>::eig_offdiag_rel * a.frobenius();

  auto off_norm = [&] {
    T s(0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  bool converged = false;
  for (std::size_t sweep = 0; sweep <= kMaxSweeps; ++sweep) {
    if (off_norm() <= tol) {
      converged = true;
      break;
    }
    if (sweep == kMaxSweeps) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const T apq = a(p, q);
        if (apq == T(0)) continue;
        const T theta = (a(q, q) - a(p, p)) / (T(2) * apq);
        T t;
        if (std::abs(theta) > T(1) / std::sqrt(std::numeric_limits<T>::epsilon())) {
          t = T(1) / (T(2) * theta);
        } else {
          t = (theta >= T(0) ? T(1) : T(-1)) / (std::abs(theta) + std::sqrt(theta * theta + T(1)));
        }
        const T c = T(1) / std::sqrt(t * t + T(1));
        const T s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const T akp = a(k, p);
          const T akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const T apk = a(p, k);
          const T aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = T(0);
        a(q, p) = T(0);
        for (std::size_t k = 0; k < n; ++k) {
          const T vkp = v(k, p);
          const T vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) throw NonConvergence("sym_eig", kMaxSweeps);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymEig<T> out{std::vector<T>(n), Matrix<T>(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

/// Q f(Lambda) Q^T for an eigendecomposition.
template <typename T, typename F>
Matrix<T> spectral_map(const SymEig<T>& eig, F&& f) {
  const std::size_t n = eig.values.size();
  Matrix<T> out(n, n);
  std::vector<T> fl(n);
  for (std::size_t k = 0; k < n; ++k) fl[k] = f(eig.values[k], k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      T s(0);
      for (std::size_t k = 0; k < n; ++k) s += eig.vectors(i, k) * fl[k] * eig.vectors(j, k);
      out(i, j) = s;
      out(j, i) = s;
    }
  return out;
}

namespace detail {

template <typename T>
void require_positive_spectrum(const SymEig<T>& eig, const char* routine) {
  for (std::size_t k = 0; k < eig.values.size(); ++k) {
    if (!(eig.values[k] > T(0))) {
      throw NotPositiveDefinite(k, std::string(routine) + ": eigenvalue " +
                                       std::to_string(eig.values[k]) + " is not positive");
    }
  }
}

}  // namespace detail

template <typename T>
Matrix<T> expm_sym(const Matrix<T>& a) {
  return spectral_map(sym_eig(a), [](T l, std::size_t) { return std::exp(l); });
}

template <typename T>
Matrix<T> logm_spd(const Matrix<T>& a) {
  auto eig = sym_eig(a);
  detail::require_positive_spectrum(eig, "logm_spd");
  return spectral_map(eig, [](T l, std::size_t) { return std::log(l); });
}

template <typename T>
Matrix<T> sqrtm_spd(const Matrix<T>& a) {
  auto eig = sym_eig(a);
  detail::require_positive_spectrum(eig, "sqrtm_spd");
  return spectral_map(eig, [](T l, std::size_t) { return std::sqrt(l); });
}

template <typename T>
Matrix<T> invsqrtm_spd(const Matrix<T>& a) {
  auto eig = sym_eig(a);
  detail::require_positive_spectrum(eig, "invsqrtm_spd");
  return spectral_map(eig, [](T l, std::size_t) { return T(1) / std::sqrt(l); });
}

template <typename T>
Matrix<T> inv_spd(const Matrix<T>& a) {
  auto eig = sym_eig(a);
  detail::require_positive_spectrum(eig, "inv_spd");
  return spectral_map(eig, [](T l, std::size_t) { return T(1) / l; });
}

namespace detail {

template <typename T>
bool near_equal_eigenvalues(T a, T b) {
  return std::abs(a - b) < T(1e-10) * std::max(std::abs(a), std::abs(b));
}

/// Divided difference of log: (log a - log b) / (a - b).
template <typename T>
T log_divided_difference(T a, T b) {
  if (near_equal_eigenvalues(a, b)) return T(2) / (a + b);
  const T lo = std::min(a, b);
  const T hi = std::max(a, b);
  return std::log1p((hi - lo) / lo) / (hi - lo);
}

/// Divided difference of exp: (e^a - e^b) / (a - b).
template <typename T>
T exp_divided_difference(T a, T b) {
  if (a == b || near_equal_eigenvalues(a, b)) return std::exp((a + b) / T(2));
  const T lo = std::min(a, b);
  const T d = std::max(a, b) - lo;
  return std::exp(lo) * std::expm1(d) / d;
}

/// Daleckii-Krein: Q (F o (Q^T U Q)) Q^T.
template <typename T, typename DD>
Matrix<T> daleckii_krein(const SymEig<T>& eig, const Matrix<T>& u, DD&& divided) {
  const std::size_t n = eig.values.size();
  if (u.rows() != n || u.cols() != n) throw ShapeError("Frechet direction has wrong shape");
  const Matrix<T>& q = eig.vectors;
  Matrix<T> w = q.transpose() * sym(u) * q;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) w(i, j) *= divided(eig.values[i], eig.values[j]);
  return sym(q * w * q.transpose());
}

}  // namespace detail

/// Frechet derivative of the matrix logarithm at SPD A in direction U.
template <typename T>
Matrix<T> dlogm_spd(const Matrix<T>& a, const Matrix<T>& u) {
  auto eig = sym_eig(a);
  detail::require_positive_spectrum(eig, "dlogm_spd");
  detail::require_symmetric(u, "dlogm_spd");
  return detail::daleckii_krein(eig, u, [](T x, T y) { return detail::log_divided_difference(x, y); });
}

/// Frechet derivative of the matrix exponential at symmetric S in direction U.
template <typename T>
Matrix<T> dexpm_sym(const Matrix<T>& s, const Matrix<T>& u) {
  auto eig = sym_eig(s);
  detail::require_symmetric(u, "dexpm_sym");
  return detail::daleckii_krein(eig, u, [](T x, T y) { return detail::exp_divided_difference(x, y); });
}

/// Lower-triangular L with positive diagonal such that L L^T = A.
template <typename T>
Matrix<T> cholesky(const Matrix<T>& input) {
  Matrix<T> a = detail::require_symmetric(input, "cholesky");
  const std::size_t n = a.rows();
  Matrix<T> l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    T d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > T(0)) || !std::isfinite(d)) throw NotPositiveDefinite(j, "cholesky: non-positive pivot");
    const T ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      T s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  const T residual = (l * l.transpose() - a).max_abs();
  if (!(residual <= Precision<T>::chol_post_rel * a.max_abs())) {
    throw NotPositiveDefinite(n - 1, "cholesky: reconstruction residual " + std::to_string(residual));
  }
  return l;
}

template <typename T>
struct QR {
  Matrix<T> q;  // n x p, orthonormal columns
  Matrix<T> r;  // p x p, upper triangular, positive diagonal
};

/// Thin QR with diag(R) > 0, computed by twice-iterated classical
/// Gram-Schmidt (orthogonality at machine precision, positive diagonal by
/// construction).
template <typename T>
QR<T> qr_signfix(const Matrix<T>& a) {
  const std::size_t n = a.rows();
  const std::size_t p = a.cols();
  if (n < p || p == 0) throw ShapeError("qr_signfix requires rows >= cols >= 1");
  const T rank_tol = Precision<T>::rank_rel * a.frobenius();
  QR<T> out{Matrix<T>(n, p), Matrix<T>(p, p)};
  std::vector<T> v(n);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) v[i] = a(i, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        T r(0);
        for (std::size_t i = 0; i < n; ++i) r += out.q(i, k) * v[i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= r * out.q(i, k);
        out.r(k, j) += r;
      }
    }
    T norm(0);
    for (T x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > rank_tol)) throw RankDeficient(j);
    out.r(j, j) = norm;
    for (std::size_t i = 0; i < n; ++i) out.q(i, j) = v[i] / norm;
  }
  return out;
}

enum class Triangle { Lower, Upper };
enum class Side { Left, Right };
enum class Transpose { No, Yes };

/// Solves op(M) X = B (Side::Left) or X op(M) = B (Side::Right) for
/// triangular M.
template <typename T>
Matrix<T> solve_triangular(const Matrix<T>& m, const Matrix<T>& b, Triangle tri,
                           Side side = Side::Left, Transpose trans = Transpose::No) {
  if (!m.square()) throw ShapeError("solve_triangular: matrix is not square");
  const std::size_t n = m.rows();
  T diag_scale(0);
  for (std::size_t i = 0; i < n; ++i) diag_scale = std::max(diag_scale, std::abs(m(i, i)));
  for (std::size_t i = 0; i < n; ++i) {
    if (!(std::abs(m(i, i)) > Precision<T>::rank_rel * diag_scale)) {
      throw Singular("solve_triangular: zero diagonal entry at " + std::to_string(i));
    }
  }
  if (side == Side::Right) {
    // X op(M) = B  <=>  op(M)^T X^T = B^T
    const Transpose flipped = trans == Transpose::No ? Transpose::Yes : Transpose::No;
    return solve_triangular(m, b.transpose(), tri, Side::Left, flipped).transpose();
  }
  if (b.rows() != n) throw ShapeError("solve_triangular: right-hand side has wrong row count");
  auto op = [&](std::size_t i, std::size_t j) { return trans == Transpose::No ? m(i, j) : m(j, i); };
  const bool lower = (tri == Triangle::Lower) == (trans == Transpose::No);
  Matrix<T> x = b;
  for (std::size_t c = 0; c < b.cols(); ++c) {
    if (lower) {
      for (std::size_t i = 0; i < n; ++i) {
        T s = x(i, c);
        for (std::size_t k = 0; k < i; ++k) s -= op(i, k) * x(k, c);
        x(i, c) = s / op(i, i);
      }
    } else {
      for (std::size_t ii = n; ii-- > 0;) {
        T s = x(ii, c);
        for (std::size_t k = ii + 1; k < n; ++k) s -= op(ii, k) * x(k, c);
        x(ii, c) = s / op(ii, ii);
      }
    }
  }
  return x;
}

template <typename T>
struct LU {
  Matrix<T> lu;
  std::vector<std::size_t> perm;
  int sign = 1;
};

/// LU with partial pivoting.
template <typename T>
LU<T> lu_factor(const Matrix<T>& a) {
  if (!a.square()) throw ShapeError("lu_factor: matrix is not square");
  const std::size_t n = a.rows();
  LU<T> f{a, std::vector<std::size_t>(n), 1};
  std::iota(f.perm.begin(), f.perm.end(), std::size_t{0});
  const T tol = std::numeric_limits<T>::epsilon() * T(n) * std::max(a.max_abs(), std::numeric_limits<T>::min());
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(f.lu(i, k)) > std::abs(f.lu(piv, k))) piv = i;
    if (!(std::abs(f.lu(piv, k)) > tol)) throw Singular("lu_factor: singular matrix at column " + std::to_string(k));
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(piv, j));
      std::swap(f.perm[k], f.perm[piv]);
      f.sign = -f.sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      f.lu(i, k) /= f.lu(k, k);
      const T lik = f.lu(i, k);
      for (std::size_t j = k + 1; j < n; ++j) f.lu(i, j) -= lik * f.lu(k, j);
    }
  }
  return f;
}

/// A^{-1} B
template <typename T>
Matrix<T> solve(const Matrix<T>& a, const Matrix<T>& b) {
  if (b.rows() != a.rows()) throw ShapeError("solve: right-hand side has wrong row count");
  const auto f = lu_factor(a);
  const std::size_t n = a.rows();
  Matrix<T> x(n, b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      T s = b(f.perm[i], c);
      for (std::size_t k = 0; k < i; ++k) s -= f.lu(i, k) * x(k, c);
      x(i, c) = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      T s = x(i, c);
      for (std::size_t k = i + 1; k < n; ++k) s -= f.lu(i, k) * x(k, c);
      x(i, c) = s / f.lu(i, i);
    }
  }
  return x;
}

template <typename T>
T det(const Matrix<T>& a) {
  LU<T> f;
  try {
    f = lu_factor(a);
  } catch (const Singular&) {
    return T(0);
  }
  T d = T(f.sign);
  for (std::size_t i = 0; i < a.rows(); ++i) d *= f.lu(i, i);
  return d;
}

/// General matrix exponential: scaling and squaring with a [6/6] Pade
/// approximant.
template <typename T>
Matrix<T> expm(const Matrix<T>& a) {
  if (!a.square()) throw ShapeError("expm: matrix is not square");
  const std::size_t n = a.rows();
  T norm_inf(0);
  for (std::size_t i = 0; i < n; ++i) {
    T row(0);
    for (std::size_t j = 0; j < n; ++j) row += std::abs(a(i, j));
    norm_inf = std::max(norm_inf, row);
  }
  int squarings = 0;
  if (norm_inf > T(0.5)) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm_inf / T(0.5)))));
  const Matrix<T> scaled = a * std::ldexp(T(1), -squarings);

  constexpr int q = 6;
  // c_k = (2q-k)! q! / ((2q)! k! (q-k)!)
  T c = T(1);
  Matrix<T> power = Matrix<T>::identity(n);
  Matrix<T> num = Matrix<T>::identity(n);
  Matrix<T> den = Matrix<T>::identity(n);
  for (int k = 1; k <= q; ++k) {
    c = c * T(q - k + 1) / T(k * (2 * q - k + 1));
    power = power * scaled;
    num += power * c;
    den += power * ((k % 2 == 0) ? c : -c);
  }
  Matrix<T> result = solve(den, num);
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

template <typename T>
struct SVD {
  Matrix<T> u;           // n x p; columns for zero singular values are zero
  std::vector<T> sigma;  // descending
  Matrix<T> v;           // p x p orthogonal
};

/// Thin SVD of an n x p matrix (n >= p) by one-sided Jacobi rotations.
template <typename T>
SVD<T> svd_thin(const Matrix<T>& a) {
  constexpr std::size_t kMaxSweeps = 100;
  const std::size_t n = a.rows();
  const std::size_t p = a.cols();
  if (n < p || p == 0) throw ShapeError("svd_thin requires rows >= cols >= 1");
  Matrix<T> w = a;
  Matrix<T> v = Matrix<T>::identity(p);
  const T eps = std::numeric_limits<T>::epsilon();
  // Columns below this squared norm are roundoff of a rank deficiency; they
  // never become orthogonal to the rest, so they are left alone.
  const T negligible = T(n * n) * eps * eps * a.frobenius() * a.frobenius();
  bool converged = false;
  for (std::size_t sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t i = 0; i + 1 < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        T alpha(0), beta(0), gamma(0);
        for (std::size_t k = 0; k < n; ++k) {
          alpha += w(k, i) * w(k, i);
          beta += w(k, j) * w(k, j);
          gamma += w(k, i) * w(k, j);
        }
        if (alpha <= negligible || beta <= negligible) continue;
        if (gamma == T(0) || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        converged = false;
        const T zeta = (beta - alpha) / (T(2) * gamma);
        const T t = (zeta >= T(0) ? T(1) : T(-1)) / (std::abs(zeta) + std::sqrt(T(1) + zeta * zeta));
        const T cs = T(1) / std::sqrt(T(1) + t * t);
        const T sn = cs * t;
        for (std::size_t k = 0; k < n; ++k) {
          const T wi = w(k, i);
          const T wj = w(k, j);
          w(k, i) = cs * wi - sn * wj;
          w(k, j) = sn * wi + cs * wj;
        }
        for (std::size_t k = 0; k < p; ++k) {
          const T vi = v(k, i);
          const T vj = v(k, j);
          v(k, i) = cs * vi - sn * vj;
          v(k, j) = sn * vi + cs * vj;
        }
      }
    }
  }
  if (!converged) throw NonConvergence("svd_thin", kMaxSweeps);

  std::vector<T> sigma(p);
  for (std::size_t j = 0; j < p; ++j) {
    T s(0);
    for (std::size_t k = 0; k < n; ++k) s += w(k, j) * w(k, j);
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });
  const T smax = sigma[order[0]];
  SVD<T> out{Matrix<T>(n, p), std::vector<T>(p), Matrix<T>(p, p)};
  for (std::size_t c = 0; c < p; ++c) {
    const std::size_t src = order[c];
    out.sigma[c] = sigma[src];
    for (std::size_t k = 0; k < p; ++k) out.v(k, c) = v(k, src);
    if (sigma[src] > T(n) * eps * smax && sigma[src] > std::numeric_limits<T>::min()) {
      for (std::size_t k = 0; k < n; ++k) out.u(k, c) = w(k, src) / sigma[src];
    }
  }
  return out;
}

}  // namespace riemopt
