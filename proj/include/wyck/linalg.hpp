// Small fixed-size vector/matrix helpers and integer Smith normal form.

#ifndef WYCK_LINALG_HPP_
#define WYCK_LINALG_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace wyck {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;  // row-major
using IVec3 = std::array<std::int64_t, 3>;
using IMat3 = std::array<std::array<std::int64_t, 3>, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator*(double s, const Vec3& a) {
  return {s * a[0], s * a[1], s * a[2]};
}
inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline Vec3 mat_vec(const Mat3& m, const Vec3& v) {
  Vec3 r;
  for (int i = 0; i < 3; ++i)
    r[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
  return r;
}
inline Mat3 mat_mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int k = 0; k < 3; ++k)
        s += a[i][k] * b[k][j];
      r[i][j] = s;
    }
  return r;
}
inline Mat3 transpose(const Mat3& m) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      r[i][j] = m[j][i];
  return r;
}
inline double det(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}
inline Mat3 inverse(const Mat3& m) {
  double d = det(m);
  if (std::fabs(d) < 1e-300)
    throw std::domain_error("singular matrix");
  Mat3 r;
  r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
  r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
  r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
  r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
  r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
  r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
  r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
  r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
  r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
  return r;
}

inline std::int64_t idet(const IMat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline double frac_part(double x) { return x - std::floor(x); }

// distance to the nearest integer
inline double dist_to_int(double x) {
  double f = x - std::round(x);
  return std::fabs(f);
}

// Smith normal form of a small integer matrix.
// Returns D (diagonal, m x n) together with unimodular U (m x m) and
// V (n x n) such that U * A * V = D.
struct Smith {
  std::vector<std::vector<std::int64_t>> d, u, v;
};

inline Smith smith_normal_form(std::vector<std::vector<std::int64_t>> a) {
  size_t m = a.size(), n = a.empty() ? 0 : a[0].size();
  Smith s;
  s.d = a;
  s.u.assign(m, std::vector<std::int64_t>(m, 0));
  s.v.assign(n, std::vector<std::int64_t>(n, 0));
  for (size_t i = 0; i < m; ++i)
    s.u[i][i] = 1;
  for (size_t j = 0; j < n; ++j)
    s.v[j][j] = 1;
  auto& d = s.d;

  auto row_op = [&](size_t i1, size_t i2, std::int64_t f) {
    // row i1 -= f * row i2, applied to D and U
    for (size_t j = 0; j < n; ++j)
      d[i1][j] -= f * d[i2][j];
    for (size_t j = 0; j < m; ++j)
      s.u[i1][j] -= f * s.u[i2][j];
  };
  auto col_op = [&](size_t j1, size_t j2, std::int64_t f) {
    for (size_t i = 0; i < m; ++i)
      d[i][j1] -= f * d[i][j2];
    for (size_t i = 0; i < n; ++i)
      s.v[i][j1] -= f * s.v[i][j2];
  };
  auto row_swap = [&](size_t i1, size_t i2) {
    std::swap(d[i1], d[i2]);
    std::swap(s.u[i1], s.u[i2]);
  };
  auto col_swap = [&](size_t j1, size_t j2) {
    for (size_t i = 0; i < m; ++i)
      std::swap(d[i][j1], d[i][j2]);
    for (size_t i = 0; i < n; ++i)
      std::swap(s.v[i][j1], s.v[i][j2]);
  };

  size_t t = 0;
  while (t < m && t < n) {
    // find smallest nonzero pivot in the submatrix
    size_t pi = t, pj = t;
    std::int64_t best = 0;
    for (size_t i = t; i < m; ++i)
      for (size_t j = t; j < n; ++j) {
        std::int64_t v = std::abs(d[i][j]);
        if (v != 0 && (best == 0 || v < best)) {
          best = v;
          pi = i;
          pj = j;
        }
      }
    if (best == 0)
      break;
    row_swap(t, pi);
    col_swap(t, pj);
    bool clean = false;
    while (!clean) {
      clean = true;
      for (size_t i = t + 1; i < m; ++i)
        if (d[i][t] != 0) {
          std::int64_t f = d[i][t] / d[t][t];
          row_op(i, t, f);
          if (d[i][t] != 0) {  // remainder becomes the new, smaller pivot
            row_swap(t, i);
            clean = false;
          }
        }
      for (size_t j = t + 1; j < n; ++j)
        if (d[t][j] != 0) {
          std::int64_t f = d[t][j] / d[t][t];
          col_op(j, t, f);
          if (d[t][j] != 0) {
            col_swap(t, j);
            clean = false;
          }
        }
    }
    ++t;
  }
  // make diagonal nonnegative
  for (size_t i = 0; i < m && i < n; ++i)
    if (d[i][i] < 0) {
      for (size_t j = 0; j < n; ++j)
        d[i][j] = -d[i][j];
      for (size_t j = 0; j < m; ++j)
        s.u[i][j] = -s.u[i][j];
    }
  return s;
}

}  // namespace wyck

#endif
