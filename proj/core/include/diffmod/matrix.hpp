#pragma once

#include <optional>
#include <vector>

#include "diffmod/errors.hpp"
#include "diffmod/puiseux.hpp"
#include "diffmod/rat.hpp"

namespace diffmod {

// Ring glue for the scalar types matrices are used with. Default
// construction must give the additive identity.
template <typename T>
T ring_one();
template <typename T>
bool ring_is_zero(const T& x);

template <>
inline Rat ring_one<Rat>() {
  return Rat(1);
}
template <>
inline bool ring_is_zero<Rat>(const Rat& x) {
  return x == 0;
}
template <>
inline PuiseuxPoly ring_one<PuiseuxPoly>() {
  return poly_const(Rat(1));
}
template <>
inline bool ring_is_zero<PuiseuxPoly>(const PuiseuxPoly& x) {
  return x.is_zero();
}

template <typename T>
struct Mat {
  int rows = 0, cols = 0;
  std::vector<T> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}

  T& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  const T& at(int i, int j) const {
    return a[static_cast<std::size_t>(i) * cols + j];
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = ring_one<T>();
    return m;
  }

  bool is_zero() const {
    for (const T& x : a)
      if (!ring_is_zero<T>(x)) return false;
    return true;
  }

  bool operator==(const Mat& o) const {
    if (rows != o.rows || cols != o.cols) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!(a[i] == o.a[i])) return false;
    return true;
  }
};

template <typename T>
Mat<T> operator+(const Mat<T>& x, const Mat<T>& y) {
  Mat<T> out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.a.size(); ++i) out.a[i] = x.a[i] + y.a[i];
  return out;
}

template <typename T>
Mat<T> operator-(const Mat<T>& x, const Mat<T>& y) {
  Mat<T> out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.a.size(); ++i) out.a[i] = x.a[i] - y.a[i];
  return out;
}

template <typename T>
Mat<T> operator-(const Mat<T>& x) {
  Mat<T> out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.a.size(); ++i) out.a[i] = -x.a[i];
  return out;
}

template <typename T>
Mat<T> operator*(const Mat<T>& x, const Mat<T>& y) {
  Mat<T> out(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      if (ring_is_zero<T>(x.at(i, k))) continue;
      for (int j = 0; j < y.cols; ++j) {
        if (ring_is_zero<T>(y.at(k, j))) continue;
        out.at(i, j) = out.at(i, j) + x.at(i, k) * y.at(k, j);
      }
    }
  return out;
}

template <typename T>
Mat<T> operator*(const T& c, const Mat<T>& x) {
  Mat<T> out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.a.size(); ++i) out.a[i] = c * x.a[i];
  return out;
}

template <typename T>
Mat<T> transpose(const Mat<T>& x) {
  Mat<T> out(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) out.at(j, i) = x.at(i, j);
  return out;
}

// Kronecker product, index pairing (p,q) -> p*y.rows + q on both sides.
template <typename T>
Mat<T> kron(const Mat<T>& x, const Mat<T>& y) {
  Mat<T> out(x.rows * y.rows, x.cols * y.cols);
  for (int p = 0; p < x.rows; ++p)
    for (int pp = 0; pp < x.cols; ++pp) {
      if (ring_is_zero<T>(x.at(p, pp))) continue;
      for (int q = 0; q < y.rows; ++q)
        for (int qq = 0; qq < y.cols; ++qq)
          out.at(p * y.rows + q, pp * y.cols + qq) = x.at(p, pp) * y.at(q, qq);
    }
  return out;
}

template <typename T>
Mat<T> block_diag(const std::vector<Mat<T>>& blocks) {
  int n = 0, m = 0;
  for (const auto& b : blocks) n += b.rows, m += b.cols;
  Mat<T> out(n, m);
  int i0 = 0, j0 = 0;
  for (const auto& b : blocks) {
    for (int i = 0; i < b.rows; ++i)
      for (int j = 0; j < b.cols; ++j) out.at(i0 + i, j0 + j) = b.at(i, j);
    i0 += b.rows;
    j0 += b.cols;
  }
  return out;
}

template <typename T, typename F>
auto map_entries(const Mat<T>& x, F f) -> Mat<decltype(f(x.a[0]))> {
  Mat<decltype(f(x.a[0]))> out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.a.size(); ++i) out.a[i] = f(x.a[i]);
  return out;
}

// ---- field algorithms (T must support exact division) ---------------------

// Row-reduce in place; returns the rank. Columns beyond `cols_limit` (if
// >= 0) are carried along but not used for pivoting.
template <typename T>
int row_reduce(Mat<T>& m, int cols_limit = -1) {
  int pivot_cols = cols_limit < 0 ? m.cols : cols_limit;
  int r = 0;
  for (int c = 0; c < pivot_cols && r < m.rows; ++c) {
    int sel = -1;
    for (int i = r; i < m.rows; ++i)
      if (!ring_is_zero<T>(m.at(i, c))) {
        sel = i;
        break;
      }
    if (sel < 0) continue;
    if (sel != r)
      for (int j = 0; j < m.cols; ++j) std::swap(m.at(sel, j), m.at(r, j));
    T piv = m.at(r, c);
    for (int j = 0; j < m.cols; ++j) m.at(r, j) = m.at(r, j) / piv;
    for (int i = 0; i < m.rows; ++i) {
      if (i == r || ring_is_zero<T>(m.at(i, c))) continue;
      T f = m.at(i, c);
      for (int j = 0; j < m.cols; ++j)
        m.at(i, j) = m.at(i, j) - f * m.at(r, j);
    }
    ++r;
  }
  return r;
}

template <typename T>
int mat_rank(Mat<T> m) {
  return row_reduce(m);
}

template <typename T>
T mat_det(Mat<T> m) {
  if (m.rows != m.cols) throw InputError("det of a non-square matrix");
  T det = ring_one<T>();
  int n = m.rows;
  for (int c = 0; c < n; ++c) {
    int sel = -1;
    for (int i = c; i < n; ++i)
      if (!ring_is_zero<T>(m.at(i, c))) {
        sel = i;
        break;
      }
    if (sel < 0) return T{};
    if (sel != c) {
      for (int j = 0; j < n; ++j) std::swap(m.at(sel, j), m.at(c, j));
      det = -det;
    }
    det = det * m.at(c, c);
    T piv = m.at(c, c);
    for (int i = c + 1; i < n; ++i) {
      if (ring_is_zero<T>(m.at(i, c))) continue;
      T f = m.at(i, c) / piv;
      for (int j = c; j < n; ++j) m.at(i, j) = m.at(i, j) - f * m.at(c, j);
    }
  }
  return det;
}

template <typename T>
std::optional<Mat<T>> mat_inverse(const Mat<T>& m) {
  if (m.rows != m.cols) throw InputError("inverse of a non-square matrix");
  int n = m.rows;
  Mat<T> aug(n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) aug.at(i, j) = m.at(i, j);
    aug.at(i, n + i) = ring_one<T>();
  }
  if (row_reduce(aug, n) != n) return std::nullopt;
  Mat<T> inv(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) inv.at(i, j) = aug.at(i, n + j);
  return inv;
}

// Solve A x = b for a unique solution; nullopt when A is singular.
template <typename T>
std::optional<std::vector<T>> solve_linear(const Mat<T>& A,
                                           const std::vector<T>& b) {
  if (A.rows != A.cols || static_cast<int>(b.size()) != A.rows)
    throw InputError("solve_linear shape mismatch");
  int n = A.rows;
  Mat<T> aug(n, n + 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) aug.at(i, j) = A.at(i, j);
    aug.at(i, n) = b[i];
  }
  if (row_reduce(aug, n) != n) return std::nullopt;
  std::vector<T> x(n);
  for (int i = 0; i < n; ++i) x[i] = aug.at(i, n);
  return x;
}

// Basis of the right kernel.
template <typename T>
std::vector<std::vector<T>> nullspace(Mat<T> m) {
  int n = m.cols;
  row_reduce(m);
  std::vector<int> pivot_of_col(n, -1);
  int r = 0;
  for (int c = 0; c < n && r < m.rows; ++c)
    if (!ring_is_zero<T>(m.at(r, c))) pivot_of_col[c] = r++;
  std::vector<std::vector<T>> basis;
  for (int c = 0; c < n; ++c) {
    if (pivot_of_col[c] >= 0) continue;
    std::vector<T> v(n);
    v[c] = ring_one<T>();
    for (int cc = 0; cc < n; ++cc)
      if (pivot_of_col[cc] >= 0) v[cc] = -m.at(pivot_of_col[cc], c);
    basis.push_back(std::move(v));
  }
  return basis;
}

// Characteristic polynomial coefficients c_0..c_d of det(tI - A), monic
// (c_d = 1), by the trace recursion; needs division by integers only.
inline std::vector<Rat> char_poly(const Mat<Rat>& A) {
  int n = A.rows;
  std::vector<Rat> c(n + 1);
  c[n] = 1;
  Mat<Rat> M = Mat<Rat>::identity(n);  // M_0
  for (int k = 1; k <= n; ++k) {
    M = A * M;
    Rat tr(0);
    for (int i = 0; i < n; ++i) tr += M.at(i, i);
    c[n - k] = -tr / k;
    for (int i = 0; i < n; ++i) M.at(i, i) += c[n - k];
  }
  return c;
}

}  // namespace diffmod
