// Crystal and lattice value types shared across the library.

#ifndef WYCK_CRYSTAL_HPP_
#define WYCK_CRYSTAL_HPP_

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "wyck/linalg.hpp"

namespace wyck {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

// Cartesian row-vector lattice derived from cell parameters (Å, degrees).
struct Lattice {
  Mat3 rows{};

  Lattice() = default;
  explicit Lattice(const Mat3& m) : rows(m) {}

  // a along x, b in the xy plane; right-handed by construction
  Lattice(double a, double b, double c, double alpha, double beta,
          double gamma) {
    if (a <= 0 || b <= 0 || c <= 0)
      throw std::invalid_argument("non-positive cell length");
    if (alpha <= 0 || alpha >= 180 || beta <= 0 || beta >= 180 ||
        gamma <= 0 || gamma >= 180)
      throw std::invalid_argument("cell angle outside (0, 180)");
    double ca = std::cos(alpha * kDegToRad), cb = std::cos(beta * kDegToRad);
    double cg = std::cos(gamma * kDegToRad), sg = std::sin(gamma * kDegToRad);
    double v2 = 1 - ca * ca - cb * cb - cg * cg + 2 * ca * cb * cg;
    if (v2 <= 0)
      throw std::invalid_argument("degenerate cell angles");
    rows[0] = {a, 0, 0};
    rows[1] = {b * cg, b * sg, 0};
    rows[2] = {c * cb, c * (ca - cb * cg) / sg, c * std::sqrt(v2) / sg};
  }

  Vec3 frac_to_cart(const Vec3& f) const {
    return {f[0] * rows[0][0] + f[1] * rows[1][0] + f[2] * rows[2][0],
            f[0] * rows[0][1] + f[1] * rows[1][1] + f[2] * rows[2][1],
            f[0] * rows[0][2] + f[1] * rows[1][2] + f[2] * rows[2][2]};
  }

  double volume() const { return std::fabs(det(rows)); }

  double length(int i) const { return norm(rows[i]); }

  double angle_deg(int i, int j) const {
    double c = dot(rows[i], rows[j]) / (norm(rows[i]) * norm(rows[j]));
    c = std::max(-1.0, std::min(1.0, c));
    return std::acos(c) * kRadToDeg;
  }

  // metric tensor g_ij = v_i . v_j
  Mat3 metric() const { return mat_mul(rows, transpose(rows)); }

  double a() const { return length(0); }
  double b() const { return length(1); }
  double c() const { return length(2); }
  double alpha() const { return angle_deg(1, 2); }
  double beta() const { return angle_deg(0, 2); }
  double gamma() const { return angle_deg(0, 1); }
};

struct Site {
  std::string element;
  Vec3 frac{};
};

// Explicit atom list with cell parameters; fractional coordinates in [0, 1).
struct Crystal {
  double a = 1, b = 1, c = 1;
  double alpha = 90, beta = 90, gamma = 90;
  std::vector<Site> sites;

  Lattice lattice() const { return Lattice(a, b, c, alpha, beta, gamma); }
};

inline Vec3 reduce_mod1(const Vec3& v) {
  Vec3 r;
  for (int i = 0; i < 3; ++i) {
    r[i] = v[i] - std::floor(v[i]);
    if (r[i] >= 1.0)  // guard against -1e-18 flooring to -0 then wrapping
      r[i] = 0.0;
  }
  return r;
}

// component-wise torus distance (max over coordinates)
inline double frac_dist_inf(const Vec3& p, const Vec3& q) {
  double m = 0;
  for (int i = 0; i < 3; ++i)
    m = std::max(m, dist_to_int(p[i] - q[i]));
  return m;
}

}  // namespace wyck

#endif
