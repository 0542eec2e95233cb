#ifndef BUNDLEDIFF_SMALLMAT_HPP
#define BUNDLEDIFF_SMALLMAT_HPP

#include <array>
#include <cassert>
#include <cmath>
#include <complex>
#include <cstring>
#include <stdexcept>

// Fixed-capacity dense kit for the per-step geometry assembly. Dimensions are
// tiny (chart dim <= 6, chart+group <= 9, irrep dim <= 6); everything lives on
// the stack so the Monte-Carlo hot loop never allocates.

namespace bundlediff {

inline constexpr int kMaxDim = 12;   // chart + group coordinates combined
inline constexpr int kMaxTen = 6;    // chart dimension for rank-3 tensors
inline constexpr int kMaxIrr = 6;    // largest irrep dimension shipped

struct Vec {
  int n = 0;
  std::array<double, kMaxDim> a;  // contents defined only after setZero/assignment
  Vec() = default;
  explicit Vec(int n_) : n(n_) {}
  double& operator[](int i) { return a[static_cast<size_t>(i)]; }
  double operator[](int i) const { return a[static_cast<size_t>(i)]; }
  void setZero(int n_) {
    n = n_;
    for (int i = 0; i < n_; ++i) a[static_cast<size_t>(i)] = 0.0;
  }
};

struct Mat {
  int r = 0, c = 0;
  std::array<double, kMaxDim * kMaxDim> a;  // contents defined only after setZero/assignment
  Mat() = default;
  Mat(int r_, int c_) : r(r_), c(c_) {}
  double& operator()(int i, int j) { return a[static_cast<size_t>(i * c + j)]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i * c + j)]; }
  void setZero(int r_, int c_) {
    r = r_;
    c = c_;
    for (int i = 0; i < r_ * c_; ++i) a[static_cast<size_t>(i)] = 0.0;
  }
  void setIdentity(int n_) {
    setZero(n_, n_);
    for (int i = 0; i < n_; ++i) (*this)(i, i) = 1.0;
  }
};

// rank-3 tensor T[i][j][k], all indices < kMaxTen except the group slots which
// share the same bound (n_G <= 3 in the shipped models).
struct Ten3 {
  int n1 = 0, n2 = 0, n3 = 0;
  std::array<double, kMaxTen * kMaxTen * kMaxTen> a;  // defined only after setZero
  Ten3() = default;
  Ten3(int a_, int b_, int c_) : n1(a_), n2(b_), n3(c_) {}
  double& operator()(int i, int j, int k) {
    return a[static_cast<size_t>((i * n2 + j) * n3 + k)];
  }
  double operator()(int i, int j, int k) const {
    return a[static_cast<size_t>((i * n2 + j) * n3 + k)];
  }
  void setZero(int a_, int b_, int c_) {
    n1 = a_;
    n2 = b_;
    n3 = c_;
    for (int i = 0; i < a_ * b_ * c_; ++i) a[static_cast<size_t>(i)] = 0.0;
  }
};

inline Mat matmul(const Mat& A, const Mat& B) {
  assert(A.c == B.r);
  Mat C(A.r, B.c);
  for (int i = 0; i < A.r; ++i)
    for (int j = 0; j < B.c; ++j) {
      double s = 0.0;
      for (int k = 0; k < A.c; ++k) s += A(i, k) * B(k, j);
      C(i, j) = s;
    }
  return C;
}

inline Mat transpose(const Mat& A) {
  Mat T(A.c, A.r);
  for (int i = 0; i < A.r; ++i)
    for (int j = 0; j < A.c; ++j) T(j, i) = A(i, j);
  return T;
}

inline Mat operator-(const Mat& A, const Mat& B) {
  assert(A.r == B.r && A.c == B.c);
  Mat C(A.r, A.c);
  for (int i = 0; i < A.r * A.c; ++i) C.a[static_cast<size_t>(i)] = A.a[static_cast<size_t>(i)] - B.a[static_cast<size_t>(i)];
  return C;
}

inline Mat operator+(const Mat& A, const Mat& B) {
  assert(A.r == B.r && A.c == B.c);
  Mat C(A.r, A.c);
  for (int i = 0; i < A.r * A.c; ++i) C.a[static_cast<size_t>(i)] = A.a[static_cast<size_t>(i)] + B.a[static_cast<size_t>(i)];
  return C;
}

inline Mat operator*(double s, const Mat& A) {
  Mat C(A.r, A.c);
  for (int i = 0; i < A.r * A.c; ++i) C.a[static_cast<size_t>(i)] = s * A.a[static_cast<size_t>(i)];
  return C;
}

inline double max_abs(const Mat& A) {
  double m = 0.0;
  for (int i = 0; i < A.r * A.c; ++i) m = std::max(m, std::fabs(A.a[static_cast<size_t>(i)]));
  return m;
}

// Gauss-Jordan with partial pivoting; returns determinant, throws on singular.
inline double invert(const Mat& A, Mat& out, double singular_tol = 0.0) {
  assert(A.r == A.c);
  const int n = A.r;
  Mat w = A;
  out.setIdentity(n);
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int i = col + 1; i < n; ++i)
      if (std::fabs(w(i, col)) > std::fabs(w(piv, col))) piv = i;
    if (piv != col) {
      for (int j = 0; j < n; ++j) {
        std::swap(w(col, j), w(piv, j));
        std::swap(out(col, j), out(piv, j));
      }
      det = -det;
    }
    const double p = w(col, col);
    if (std::fabs(p) <= singular_tol || p == 0.0)
      throw std::runtime_error("smallmat: singular matrix in invert()");
    det *= p;
    const double ip = 1.0 / p;
    for (int j = 0; j < n; ++j) {
      w(col, j) *= ip;
      out(col, j) *= ip;
    }
    for (int i = 0; i < n; ++i) {
      if (i == col) continue;
      const double f = w(i, col);
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        w(i, j) -= f * w(col, j);
        out(i, j) -= f * out(col, j);
      }
    }
  }
  return det;
}

inline double determinant(const Mat& A) {
  Mat tmp;
  return invert(A, tmp);
}

// Cholesky factor L (lower) of an SPD matrix, A = L L^T.
inline void cholesky(const Mat& A, Mat& L) {
  assert(A.r == A.c);
  const int n = A.r;
  L.setZero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = A(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      if (i == j) {
        if (s <= 0.0) throw std::runtime_error("smallmat: matrix not positive definite");
        L(i, i) = std::sqrt(s);
      } else {
        L(i, j) = s / L(j, j);
      }
    }
  }
}

// Small complex matrices for irrep weights.
using cplx = std::complex<double>;

struct CMat {
  int n = 0;
  std::array<cplx, kMaxIrr * kMaxIrr> a;  // defined only after setZero/assignment
  CMat() = default;
  explicit CMat(int n_) : n(n_) {}
  cplx& operator()(int i, int j) { return a[static_cast<size_t>(i * n + j)]; }
  cplx operator()(int i, int j) const { return a[static_cast<size_t>(i * n + j)]; }
  void setZero(int n_) {
    n = n_;
    for (int i = 0; i < n_ * n_; ++i) a[static_cast<size_t>(i)] = cplx(0.0, 0.0);
  }
  void setIdentity(int n_) {
    setZero(n_);
    for (int i = 0; i < n_; ++i) (*this)(i, i) = 1.0;
  }
};

inline CMat cmul(const CMat& A, const CMat& B) {
  assert(A.n == B.n);
  CMat C(A.n);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) {
      cplx s = 0.0;
      for (int k = 0; k < A.n; ++k) s += A(i, k) * B(k, j);
      C(i, j) = s;
    }
  return C;
}

inline CMat cadd(const CMat& A, const CMat& B) {
  assert(A.n == B.n);
  CMat C(A.n);
  for (int i = 0; i < A.n * A.n; ++i) C.a[static_cast<size_t>(i)] = A.a[static_cast<size_t>(i)] + B.a[static_cast<size_t>(i)];
  return C;
}

inline CMat cscale(cplx s, const CMat& A) {
  CMat C(A.n);
  for (int i = 0; i < A.n * A.n; ++i) C.a[static_cast<size_t>(i)] = s * A.a[static_cast<size_t>(i)];
  return C;
}

inline CMat ctranspose(const CMat& A) {
  CMat T(A.n);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) T(j, i) = A(i, j);
  return T;
}

inline CMat cadjoint(const CMat& A) {
  CMat T(A.n);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) T(j, i) = std::conj(A(i, j));
  return T;
}

inline double cmax_abs(const CMat& A) {
  double m = 0.0;
  for (int i = 0; i < A.n * A.n; ++i) m = std::max(m, std::abs(A.a[static_cast<size_t>(i)]));
  return m;
}

inline double cfrob(const CMat& A) {
  double m = 0.0;
  for (int i = 0; i < A.n * A.n; ++i) m += std::norm(A.a[static_cast<size_t>(i)]);
  return std::sqrt(m);
}

// scaling-and-squaring exponential, adequate for the small step matrices here
inline CMat cexpm(const CMat& A) {
  double nrm = cmax_abs(A);
  int s = 0;
  while (nrm > 0.125) { nrm *= 0.5; ++s; }
  CMat X = A;
  const double f = std::ldexp(1.0, -s);
  for (int i = 0; i < X.n * X.n; ++i) X.a[static_cast<size_t>(i)] *= f;
  CMat R; R.setIdentity(A.n);
  CMat term; term.setIdentity(A.n);
  for (int k = 1; k <= 14; ++k) {
    term = cmul(term, X);
    for (int i = 0; i < term.n * term.n; ++i) term.a[static_cast<size_t>(i)] /= k;
    R = cadd(R, term);
  }
  for (int k = 0; k < s; ++k) R = cmul(R, R);
  return R;
}

}  // namespace bundlediff

#endif
