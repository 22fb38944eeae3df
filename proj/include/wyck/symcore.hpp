// Space-group database, symbolic Wyckoff expressions, orbit expansion,
// Wyckoff-label assignment, and tolerance-based space-group detection.

#ifndef WYCK_SYMCORE_HPP_
#define WYCK_SYMCORE_HPP_

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wyck/crystal.hpp"
#include "wyck/linalg.hpp"
#include "wyck/rational.hpp"

namespace wyck {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// fractional tolerance for deduplication inside expand_orbit
constexpr double kEpsOrbit = 1e-6;
// default symmetry tolerance for assignment/detection
constexpr double kDefaultSymTol = 0.01;
// lattice-metric compatibility pre-filter for detection
constexpr double kMetricLengthRelTol = 1e-3;
constexpr double kMetricAngleTolDeg = 0.5;
// origin-shift search bound per operation
constexpr int kOriginCandidateCap = 1000;

// ---------------------------------------------------------------------------
// Symmetry operations as exact rational affine maps on fractional coordinates.

struct SymmetryOp {
  std::array<std::array<Rat, 3>, 3> rot{};  // row-major
  std::array<Rat, 3> trans{};               // each reduced to [0, 1)

  static SymmetryOp identity() {
    SymmetryOp op;
    for (int i = 0; i < 3; ++i)
      op.rot[i][i] = Rat(1);
    return op;
  }

  bool is_identity_rotation() const {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (rot[i][j] != Rat(i == j ? 1 : 0))
          return false;
    return true;
  }

  bool rotation_is_integer() const {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (!rot[i][j].is_integer())
          return false;
    return true;
  }

  IMat3 rotation_int() const {
    IMat3 m{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (!rot[i][j].is_integer())
          throw Error("non-integer rotation entry");
        m[i][j] = rot[i][j].num;
      }
    return m;
  }

  Mat3 rotation_double() const {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        m[i][j] = rot[i][j].to_double();
    return m;
  }

  Vec3 translation_double() const {
    return {trans[0].to_double(), trans[1].to_double(), trans[2].to_double()};
  }

  Vec3 apply(const Vec3& p) const {
    Vec3 r;
    for (int i = 0; i < 3; ++i)
      r[i] = rot[i][0].to_double() * p[0] + rot[i][1].to_double() * p[1] +
             rot[i][2].to_double() * p[2] + trans[i].to_double();
    return r;
  }

  // this ∘ other, translation reduced mod 1
  SymmetryOp compose(const SymmetryOp& o) const {
    SymmetryOp r;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        Rat s(0);
        for (int k = 0; k < 3; ++k)
          s = s + rot[i][k] * o.rot[k][j];
        r.rot[i][j] = s;
      }
      Rat t = trans[i];
      for (int k = 0; k < 3; ++k)
        t = t + rot[i][k] * o.trans[k];
      r.trans[i] = t.mod1();
    }
    return r;
  }

  SymmetryOp inverse() const {
    // adjugate over rationals; determinant must be ±1 for group ops
    SymmetryOp r;
    Rat d(0);
    for (int j = 0; j < 3; ++j)
      d = d + rot[0][j] * cofactor(0, j);
    if (d.den != 1 || (d.num != 1 && d.num != -1))
      throw Error("rotation determinant is not ±1");
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r.rot[i][j] = cofactor(j, i) * d;  // d == 1/d for ±1
    for (int i = 0; i < 3; ++i) {
      Rat t(0);
      for (int k = 0; k < 3; ++k)
        t = t - r.rot[i][k] * trans[k];
      r.trans[i] = t.mod1();
    }
    return r;
  }

  Rat cofactor(int i, int j) const {
    int r0 = (i + 1) % 3, r1 = (i + 2) % 3;
    int c0 = (j + 1) % 3, c1 = (j + 2) % 3;
    if (r0 > r1)
      std::swap(r0, r1);
    if (c0 > c1)
      std::swap(c0, c1);
    Rat m = rot[r0][c0] * rot[r1][c1] - rot[r0][c1] * rot[r1][c0];
    return ((i + j) % 2 == 0) ? m : -m;
  }

  friend bool operator==(const SymmetryOp& a, const SymmetryOp& b) {
    for (int i = 0; i < 3; ++i) {
      if (a.trans[i] != b.trans[i])
        return false;
      for (int j = 0; j < 3; ++j)
        if (a.rot[i][j] != b.rot[i][j])
          return false;
    }
    return true;
  }

  std::string triplet() const;
};

// ---------------------------------------------------------------------------
// Coordinate-triplet grammar: three comma-separated affine expressions over
// x, y, z with rational ("p/q"), integer, or decimal coefficients.

namespace detail {

inline Rat parse_number(const std::string& tok, const std::string& where) {
  auto bad = [&]() -> Rat {
    throw Error("bad numeric token '" + tok + "' in " + where);
  };
  auto slash = tok.find('/');
  if (slash != std::string::npos) {
    std::string ns = tok.substr(0, slash), ds = tok.substr(slash + 1);
    if (ns.empty() || ds.empty() || ns.size() > 9 || ds.size() > 9 ||
        ns.find_first_not_of("0123456789") != std::string::npos ||
        ds.find_first_not_of("0123456789") != std::string::npos)
      return bad();
    std::int64_t den = std::stoll(ds);
    if (den == 0)
      return bad();
    return Rat(std::stoll(ns), den);
  }
  auto dotpos = tok.find('.');
  if (dotpos != std::string::npos) {
    std::string ip = tok.substr(0, dotpos), fp = tok.substr(dotpos + 1);
    if ((ip.empty() && fp.empty()) || ip.size() > 9 ||
        ip.find_first_not_of("0123456789") != std::string::npos ||
        fp.find_first_not_of("0123456789") != std::string::npos ||
        fp.size() > 15)
      return bad();
    std::int64_t den = 1;
    for (size_t i = 0; i < fp.size(); ++i)
      den *= 10;
    std::int64_t num = (ip.empty() ? 0 : std::stoll(ip)) * den +
                       (fp.empty() ? 0 : std::stoll(fp));
    return Rat(num, den);
  }
  if (tok.empty() || tok.size() > 9 ||
      tok.find_first_not_of("0123456789") != std::string::npos)
    return bad();
  return Rat(std::stoll(tok));
}

}  // namespace detail

// Exact parse of a coordinate triplet such as "-y,x-y,z+1/2" or "x,2x,1/4".
inline SymmetryOp parse_triplet(const std::string& text) {
  SymmetryOp op;
  std::vector<std::string> comps;
  std::string cur;
  for (char ch : text) {
    if (ch == ',') {
      comps.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur.push_back(ch);
    }
  }
  comps.push_back(cur);
  if (comps.size() != 3)
    throw Error("triplet '" + text + "' has " + std::to_string(comps.size()) +
                " components, want 3");

  for (int i = 0; i < 3; ++i) {
    const std::string& comp = comps[i];
    const std::string where =
        "component " + std::to_string(i + 1) + " of '" + text + "'";
    if (comp.empty())
      throw Error("empty " + where);
    std::array<Rat, 3> row{};
    Rat offset(0);
    size_t pos = 0;
    bool any_term = false;
    while (pos < comp.size()) {
      int sign = 1;
      if (comp[pos] == '+' || comp[pos] == '-') {
        sign = comp[pos] == '-' ? -1 : 1;
        ++pos;
        if (pos >= comp.size())
          throw Error("dangling sign in " + where);
      } else if (any_term) {
        throw Error("missing operator at position " + std::to_string(pos) +
                    " in " + where);
      }
      Rat coeff(1);
      bool have_number = false;
      size_t start = pos;
      while (pos < comp.size() &&
             (std::isdigit(static_cast<unsigned char>(comp[pos])) ||
              comp[pos] == '.' || comp[pos] == '/'))
        ++pos;
      if (pos > start) {
        coeff = detail::parse_number(comp.substr(start, pos - start), where);
        have_number = true;
      }
      if (pos < comp.size() && comp[pos] == '*') {
        if (!have_number)
          throw Error("stray '*' in " + where);
        ++pos;
        if (pos >= comp.size())
          throw Error("dangling '*' in " + where);
      }
      if (pos < comp.size() &&
          (comp[pos] == 'x' || comp[pos] == 'y' || comp[pos] == 'z')) {
        int var = comp[pos] == 'x' ? 0 : comp[pos] == 'y' ? 1 : 2;
        row[var] = row[var] + (sign < 0 ? -coeff : coeff);
        ++pos;
      } else if (have_number) {
        offset = offset + (sign < 0 ? -coeff : coeff);
      } else {
        throw Error("unexpected character '" + std::string(1, comp[pos]) +
                    "' at position " + std::to_string(pos) + " in " + where);
      }
      any_term = true;
    }
    op.rot[i] = row;
    op.trans[i] = offset.mod1();
  }
  return op;
}

inline std::string SymmetryOp::triplet() const {
  std::string out;
  for (int i = 0; i < 3; ++i) {
    if (i)
      out.push_back(',');
    std::string comp;
    const char* vars = "xyz";
    for (int j = 0; j < 3; ++j) {
      const Rat& c = rot[i][j];
      if (c.is_zero())
        continue;
      if (c.num < 0)
        comp.push_back('-');
      else if (!comp.empty())
        comp.push_back('+');
      Rat a = c.num < 0 ? -c : c;
      if (!(a.num == 1 && a.den == 1))
        comp += a.str();
      comp.push_back(vars[j]);
    }
    if (!trans[i].is_zero()) {
      if (!comp.empty())
        comp.push_back('+');
      comp += trans[i].str();
    }
    if (comp.empty())
      comp = "0";
    out += comp;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Database types.

struct WyckoffPosition {
  char letter = 'a';  // a..z, then A.. for groups with more than 26 positions
  int multiplicity = 0;
  std::vector<SymmetryOp> site_exprs;  // centering-compressed
  int free_variable_count = 0;
};

struct SpaceGroup {
  int number = 0;
  std::string hm_symbol;
  std::string crystal_system;
  std::vector<SymmetryOp> ops;  // full conventional coset, centering expanded
  std::vector<WyckoffPosition> wyckoff_positions;  // mult desc, then letter

  const WyckoffPosition* find_position(int multiplicity, char letter) const {
    for (const auto& wp : wyckoff_positions)
      if (wp.multiplicity == multiplicity && wp.letter == letter)
        return &wp;
    return nullptr;
  }
};

namespace detail {

// ITA letter sequence: a..z then A..; uppercase sorts after lowercase.
inline std::pair<int, char> letter_rank(char l) {
  return {std::isupper(static_cast<unsigned char>(l)) ? 1 : 0, l};
}

inline int matrix_rank3(const Mat3& m, double eps = 1e-9) {
  // Gram-Schmidt on rows
  std::vector<Vec3> basis;
  for (int i = 0; i < 3; ++i) {
    Vec3 v = m[i];
    for (const Vec3& b : basis)
      v = v - dot(v, b) * b;
    double n = norm(v);
    if (n > eps)
      basis.push_back((1.0 / n) * v);
  }
  return static_cast<int>(basis.size());
}

}  // namespace detail

class SpaceGroupTable {
 public:
  static SpaceGroupTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
      throw Error("cannot open space-group data file: " + path);
    SpaceGroupTable table;
    table.groups_.resize(231);
    std::string line;
    int lineno = 0;
    auto next_line = [&](std::string& out) {
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
          continue;
        out = line;
        return true;
      }
      return false;
    };
    std::string l;
    while (next_line(l)) {
      std::istringstream hdr(l);
      std::string tag;
      SpaceGroup g;
      int n_ops = 0;
      hdr >> tag >> g.number >> g.hm_symbol >> g.crystal_system >> n_ops;
      if (tag != "SG" || !hdr || g.number < 1 || g.number > 230 || n_ops < 1)
        throw Error("bad group header at line " + std::to_string(lineno) +
                    ": " + l);
      for (int i = 0; i < n_ops; ++i) {
        if (!next_line(l))
          throw Error("truncated op list for group " +
                      std::to_string(g.number));
        g.ops.push_back(parse_triplet(l));
      }
      if (!next_line(l))
        throw Error("missing WYCKOFF header for group " +
                    std::to_string(g.number));
      std::istringstream wh(l);
      std::string wtag;
      int n_pos = 0;
      wh >> wtag >> n_pos;
      if (wtag != "WYCKOFF" || !wh || n_pos < 1)
        throw Error("bad WYCKOFF header at line " + std::to_string(lineno));
      for (int i = 0; i < n_pos; ++i) {
        if (!next_line(l))
          throw Error("truncated Wyckoff list for group " +
                      std::to_string(g.number));
        g.wyckoff_positions.push_back(parse_wyckoff_line(l, lineno));
      }
      validate_group(g);
      std::sort(g.wyckoff_positions.begin(), g.wyckoff_positions.end(),
                [](const WyckoffPosition& a, const WyckoffPosition& b) {
                  if (a.multiplicity != b.multiplicity)
                    return a.multiplicity > b.multiplicity;
                  return detail::letter_rank(a.letter) <
                         detail::letter_rank(b.letter);
                });
      if (table.groups_[g.number].number != 0)
        throw Error("duplicate group " + std::to_string(g.number));
      table.groups_[g.number] = std::move(g);
    }
    for (int n = 1; n <= 230; ++n)
      if (table.groups_[n].number == 0)
        throw Error("group " + std::to_string(n) + " missing from data file");
    for (int n = 1; n <= 230; ++n) {
      const auto& sym = table.groups_[n].hm_symbol;
      if (!table.symbol_to_number_.emplace(sym, n).second)
        throw Error("duplicate HM symbol " + sym);
    }
    table.detection_order_.resize(230);
    for (int i = 0; i < 230; ++i)
      table.detection_order_[i] = i + 1;
    std::sort(table.detection_order_.begin(), table.detection_order_.end(),
              [&](int a, int b) {
                size_t na = table.groups_[a].ops.size();
                size_t nb = table.groups_[b].ops.size();
                if (na != nb)
                  return na > nb;
                return a > b;
              });
    return table;
  }

  const SpaceGroup& group(int number) const {
    if (number < 1 || number > 230)
      throw Error("space-group number " + std::to_string(number) +
                  " out of range");
    return groups_[number];
  }

  int symbol_to_number(const std::string& hm_symbol) const {
    auto it = symbol_to_number_.find(hm_symbol);
    if (it == symbol_to_number_.end())
      throw Error("unknown space-group symbol '" + hm_symbol + "'");
    return it->second;
  }

  const std::string& number_to_symbol(int number) const {
    return group(number).hm_symbol;
  }

  bool has_symbol(const std::string& hm_symbol) const {
    return symbol_to_number_.count(hm_symbol) > 0;
  }

  // group numbers ordered by descending op count, then descending number
  const std::vector<int>& detection_order() const { return detection_order_; }

 private:
  static WyckoffPosition parse_wyckoff_line(const std::string& l, int lineno) {
    WyckoffPosition wp;
    std::istringstream ls(l);
    std::string label, exprs;
    ls >> label >> exprs;
    if (!ls || label.size() < 2)
      throw Error("bad Wyckoff line at " + std::to_string(lineno) + ": " + l);
    wp.letter = label.back();
    if (!std::isalpha(static_cast<unsigned char>(wp.letter)))
      throw Error("bad Wyckoff letter in '" + label + "'");
    wp.multiplicity = std::stoi(label.substr(0, label.size() - 1));
    std::string expr;
    std::istringstream es(exprs);
    while (std::getline(es, expr, ';'))
      wp.site_exprs.push_back(parse_triplet(expr));
    if (wp.site_exprs.empty())
      throw Error("Wyckoff position with no expressions at line " +
                  std::to_string(lineno));
    wp.free_variable_count =
        detail::matrix_rank3(wp.site_exprs[0].rotation_double());
    return wp;
  }

  static void validate_group(const SpaceGroup& g) {
    auto fail = [&](const std::string& msg) {
      throw Error("group " + std::to_string(g.number) + ": " + msg);
    };
    bool has_identity = false;
    for (const auto& op : g.ops) {
      bool ident = op.is_identity_rotation();
      if (ident && op.trans[0].is_zero() && op.trans[1].is_zero() &&
          op.trans[2].is_zero())
        has_identity = true;
      for (int i = 0; i < 3; ++i)
        if (op.trans[i].num < 0 || !(op.trans[i] == op.trans[i].mod1()))
          fail("op translation not reduced to [0,1)");
    }
    if (!has_identity)
      fail("identity op missing");
    int general_mult = 0;
    std::vector<char> letters;
    for (const auto& wp : g.wyckoff_positions) {
      general_mult = std::max(general_mult, wp.multiplicity);
      letters.push_back(wp.letter);
    }
    std::sort(letters.begin(), letters.end());
    if (std::adjacent_find(letters.begin(), letters.end()) != letters.end())
      fail("duplicate Wyckoff letters");
    if (general_mult != static_cast<int>(g.ops.size()))
      fail("general-position multiplicity != op count");
    static const std::array<std::pair<int, const char*>, 7> kSystems = {{
        {2, "triclinic"},
        {15, "monoclinic"},
        {74, "orthorhombic"},
        {142, "tetragonal"},
        {167, "trigonal"},
        {194, "hexagonal"},
        {230, "cubic"},
    }};
    const char* want = nullptr;
    for (const auto& [hi, name] : kSystems)
      if (g.number <= hi) {
        want = name;
        break;
      }
    if (g.crystal_system != want)
      fail("crystal system '" + g.crystal_system + "', expected " + want);
  }

  std::vector<SpaceGroup> groups_;
  std::map<std::string, int> symbol_to_number_;
  std::vector<int> detection_order_;
};

// ---------------------------------------------------------------------------
// Orbit expansion.

inline std::vector<Vec3> expand_orbit(const SpaceGroup& group,
                                      const Vec3& generator,
                                      double eps = kEpsOrbit) {
  std::vector<Vec3> orbit;
  for (const auto& op : group.ops) {
    Vec3 p = reduce_mod1(op.apply(generator));
    bool dup = false;
    for (const auto& q : orbit)
      if (frac_dist_inf(p, q) <= eps) {
        dup = true;
        break;
      }
    if (!dup)
      orbit.push_back(p);
  }
  return orbit;
}

// ---------------------------------------------------------------------------
// Wyckoff assignment: find the position whose multiplicity matches the orbit
// size and whose symbolic expressions admit a generator matching the orbit.

struct WyckoffAssignment {
  char letter;
  int multiplicity;
  Vec3 generator;  // components in [0, 1)
};

namespace detail {

// Nearest point of the affine set {L v + b (mod 1) : v real} to p, searched
// over unit wraps. Returns Chebyshev distance and the projected point.
inline std::pair<double, Vec3> nearest_in_expr(const SymmetryOp& expr,
                                               const Vec3& p) {
  Mat3 L = expr.rotation_double();
  Vec3 b = expr.translation_double();
  // orthonormal basis of the column space
  std::vector<Vec3> basis;
  for (int j = 0; j < 3; ++j) {
    Vec3 col = {L[0][j], L[1][j], L[2][j]};
    for (const Vec3& e : basis)
      col = col - dot(col, e) * e;
    double n = norm(col);
    if (n > 1e-9)
      basis.push_back((1.0 / n) * col);
  }
  double best = 1e30;
  Vec3 best_point{};
  for (int kx = -1; kx <= 1; ++kx)
    for (int ky = -1; ky <= 1; ++ky)
      for (int kz = -1; kz <= 1; ++kz) {
        Vec3 r = {p[0] + kx - b[0], p[1] + ky - b[1], p[2] + kz - b[2]};
        Vec3 proj{};
        for (const Vec3& e : basis)
          proj = proj + dot(r, e) * e;
        Vec3 resid = r - proj;
        double d = std::max({std::fabs(resid[0]), std::fabs(resid[1]),
                             std::fabs(resid[2])});
        if (d < best) {
          best = d;
          best_point = reduce_mod1(b + proj);
        }
      }
  return {best, best_point};
}

inline bool lex_less(const Vec3& a, const Vec3& b, double eps = 1e-9) {
  for (int i = 0; i < 3; ++i) {
    if (std::fabs(a[i] - b[i]) > eps)
      return a[i] < b[i];
  }
  return false;
}

inline bool orbits_equal(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                         double tol) {
  if (a.size() != b.size())
    return false;
  for (const auto& p : a) {
    bool found = false;
    for (const auto& q : b)
      if (frac_dist_inf(p, q) <= tol) {
        found = true;
        break;
      }
    if (!found)
      return false;
  }
  return true;
}

}  // namespace detail

inline WyckoffAssignment assign_wyckoff(const SpaceGroup& group,
                                        const std::vector<Vec3>& orbit,
                                        double tol = kDefaultSymTol) {
  if (orbit.empty())
    throw Error("cannot assign a Wyckoff label to an empty orbit");
  for (const auto& wp : group.wyckoff_positions) {
    if (wp.multiplicity != static_cast<int>(orbit.size()))
      continue;
    // all orbit members reachable by some site expression
    bool have = false;
    Vec3 best{};
    for (const auto& member : orbit)
      for (const auto& expr : wp.site_exprs) {
        auto [d, point] = detail::nearest_in_expr(expr, member);
        if (d <= tol && (!have || detail::lex_less(point, best))) {
          have = true;
          best = point;
        }
      }
    if (!have)
      continue;
    std::vector<Vec3> regenerated = expand_orbit(group, best);
    if (detail::orbits_equal(regenerated, orbit, std::max(tol, kEpsOrbit)))
      return {wp.letter, wp.multiplicity, best};
  }
  throw Error("orbit of size " + std::to_string(orbit.size()) +
              " matches no Wyckoff position of group " +
              std::to_string(group.number));
}

// ---------------------------------------------------------------------------
// Space-group detection.

struct Detection {
  int number = 1;
  Vec3 origin_shift{0, 0, 0};  // crystal = standard structure + shift
};

namespace detail {

inline bool metric_compatible(const IMat3& r, const Mat3& g) {
  // transformed metric R^T G R must reproduce lengths and angles
  Mat3 rd;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      rd[i][j] = static_cast<double>(r[i][j]);
  Mat3 gp = mat_mul(transpose(rd), mat_mul(g, rd));
  for (int i = 0; i < 3; ++i) {
    double li = std::sqrt(g[i][i]), lj = std::sqrt(gp[i][i]);
    if (std::fabs(li - lj) > kMetricLengthRelTol * li)
      return false;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      double ca = g[i][j] / std::sqrt(g[i][i] * g[j][j]);
      double cb = gp[i][j] / std::sqrt(gp[i][i] * gp[j][j]);
      ca = std::max(-1.0, std::min(1.0, ca));
      cb = std::max(-1.0, std::min(1.0, cb));
      if (std::fabs(std::acos(ca) - std::acos(cb)) * kRadToDeg >
          kMetricAngleTolDeg)
        return false;
    }
  return true;
}

// One mod-1 solution branch of an integer linear system A x ≡ rhs (mod 1).
struct ModBranch {
  std::vector<double> x0;                     // size k
  std::vector<std::vector<std::int64_t>> free_cols;  // free directions
};

// Solve A x ≡ rhs (mod 1), A integer 3×k, x real. Consistency rows are
// accepted within row_tol (scaled by the unimodular row transform).
inline std::vector<ModBranch> solve_mod1(
    const std::vector<std::vector<std::int64_t>>& a, const Vec3& rhs,
    double row_tol) {
  size_t k = a.empty() ? 0 : a[0].size();
  std::vector<ModBranch> out;
  if (k == 0)
    return out;
  Smith s = smith_normal_form(a);
  std::array<double, 3> rhs_t{};
  std::array<double, 3> tol_t{};
  for (int i = 0; i < 3; ++i) {
    double v = 0, amp = 0;
    for (int j = 0; j < 3; ++j) {
      v += static_cast<double>(s.u[i][j]) * rhs[j];
      amp += std::fabs(static_cast<double>(s.u[i][j]));
    }
    rhs_t[i] = v;
    tol_t[i] = row_tol * (amp + 1.0) + 1e-12;
  }
  std::vector<std::int64_t> diag(k, 0);
  for (size_t i = 0; i < k && i < 3; ++i)
    diag[i] = s.d[i][i];
  // rows beyond the column count must be (near) integral
  for (size_t i = 0; i < 3; ++i) {
    bool constrained = i < k && diag[i] != 0;
    if (!constrained && dist_to_int(rhs_t[i]) > tol_t[i])
      return out;
  }
  // enumerate branch values w_i = (rhs_t[i] + j) / d_i
  std::vector<std::vector<double>> choices(k);
  std::vector<size_t> free_idx;
  for (size_t i = 0; i < k; ++i) {
    if (diag[i] == 0) {
      choices[i] = {0.0};
      free_idx.push_back(i);
    } else {
      for (std::int64_t j = 0; j < diag[i]; ++j)
        choices[i].push_back((rhs_t[i] + static_cast<double>(j)) /
                             static_cast<double>(diag[i]));
    }
  }
  std::vector<size_t> pick(k, 0);
  while (true) {
    ModBranch br;
    br.x0.assign(k, 0.0);
    for (size_t i = 0; i < k; ++i) {
      double w = choices[i][pick[i]];
      for (size_t r = 0; r < k; ++r)
        br.x0[r] += static_cast<double>(s.v[r][i]) * w;
    }
    for (size_t f : free_idx) {
      std::vector<std::int64_t> col(k);
      for (size_t r = 0; r < k; ++r)
        col[r] = s.v[r][f];
      br.free_cols.push_back(col);
    }
    out.push_back(std::move(br));
    size_t i = 0;
    for (; i < k; ++i) {
      if (++pick[i] < choices[i].size())
        break;
      pick[i] = 0;
    }
    if (i == k)
      break;
  }
  return out;
}

struct OriginFamily {
  Vec3 point{};
  std::vector<IVec3> dirs;  // integer free directions in shift space
};

inline bool verify_group_with_shift(const SpaceGroup& g, const Vec3& shift,
                                    const std::vector<Vec3>& pos,
                                    const std::vector<int>& elem,
                                    double sym_tol) {
  for (const auto& op : g.ops) {
    Mat3 r = op.rotation_double();
    Vec3 t = op.translation_double();
    // crystal-frame translation: t - (R - I) * shift
    Vec3 rs = mat_vec(r, shift);
    Vec3 tp = {t[0] - rs[0] + shift[0], t[1] - rs[1] + shift[1],
               t[2] - rs[2] + shift[2]};
    for (size_t i = 0; i < pos.size(); ++i) {
      Vec3 img = reduce_mod1(mat_vec(r, pos[i]) + tp);
      bool found = false;
      for (size_t j = 0; j < pos.size(); ++j)
        if (elem[j] == elem[i] && frac_dist_inf(img, pos[j]) <= sym_tol) {
          found = true;
          break;
        }
      if (!found)
        return false;
    }
  }
  return true;
}

}  // namespace detail

// Returns the highest-order group (max |ops|, ties: larger number) whose
// operations map the atom set onto itself after a global origin-shift search.
inline Detection detect_with_origin(const SpaceGroupTable& table,
                                    const Crystal& crystal,
                                    double sym_tol = kDefaultSymTol) {
  if (crystal.sites.empty())
    throw Error("cannot detect the space group of an empty crystal");
  Lattice lat = crystal.lattice();
  Mat3 metric = lat.metric();

  std::vector<Vec3> pos;
  std::vector<int> elem;
  std::map<std::string, int> elem_ids;
  std::map<int, int> elem_counts;
  for (const auto& site : crystal.sites) {
    auto [it, fresh] = elem_ids.emplace(site.element, (int)elem_ids.size());
    (void)fresh;
    pos.push_back(reduce_mod1(site.frac));
    elem.push_back(it->second);
    elem_counts[it->second]++;
  }
  // least-frequent element, ties by symbol (map order is lexicographic)
  int lf_elem = -1, lf_count = 1 << 30;
  for (const auto& [sym, id] : elem_ids)
    if (elem_counts[id] < lf_count) {
      lf_count = elem_counts[id];
      lf_elem = id;
    }
  std::vector<Vec3> lf_pos;
  for (size_t i = 0; i < pos.size(); ++i)
    if (elem[i] == lf_elem)
      lf_pos.push_back(pos[i]);
  const Vec3 x0 = lf_pos[0];

  for (int number : table.detection_order()) {
    const SpaceGroup& g = table.group(number);

    bool metric_ok = true;
    for (const auto& op : g.ops) {
      if (!op.rotation_is_integer() ||
          !detail::metric_compatible(op.rotation_int(), metric)) {
        metric_ok = false;
        break;
      }
    }
    if (!metric_ok)
      continue;

    // Pure translations constrain nothing through the origin shift; verify
    // them directly and keep one representative op per distinct rotation.
    bool translations_ok = true;
    std::vector<const SymmetryOp*> coset;
    std::vector<IMat3> coset_rot;
    for (const auto& op : g.ops) {
      if (op.is_identity_rotation()) {
        Vec3 t = op.translation_double();
        if (norm(t) < 1e-12)
          continue;
        for (size_t i = 0; i < pos.size() && translations_ok; ++i) {
          Vec3 img = reduce_mod1(pos[i] + t);
          bool found = false;
          for (size_t j = 0; j < pos.size(); ++j)
            if (elem[j] == elem[i] && frac_dist_inf(img, pos[j]) <= sym_tol) {
              found = true;
              break;
            }
          translations_ok = found;
        }
        if (!translations_ok)
          break;
        continue;
      }
      IMat3 r = op.rotation_int();
      bool seen = false;
      for (const auto& prev : coset_rot)
        if (prev == r) {
          seen = true;
          break;
        }
      if (!seen) {
        coset.push_back(&op);
        coset_rot.push_back(r);
      }
    }
    if (!translations_ok)
      continue;

    // most constraining ops first: higher rank of (R - I), then file order
    std::vector<size_t> order(coset.size());
    for (size_t i = 0; i < order.size(); ++i)
      order[i] = i;
    auto rank_of = [&](size_t idx) {
      Mat3 rd;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          rd[i][j] = static_cast<double>(coset_rot[idx][i][j]) -
                     (i == j ? 1.0 : 0.0);
      return detail::matrix_rank3(rd);
    };
    std::vector<int> ranks(coset.size());
    for (size_t i = 0; i < coset.size(); ++i)
      ranks[i] = rank_of(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return ranks[a] > ranks[b]; });

    std::vector<detail::OriginFamily> families;
    families.push_back(
        {Vec3{0, 0, 0},
         {IVec3{1, 0, 0}, IVec3{0, 1, 0}, IVec3{0, 0, 1}}});
    bool group_ok = true;
    for (size_t oi : order) {
      const SymmetryOp& op = *coset[oi];
      const IMat3& r = coset_rot[oi];
      Mat3 rd = op.rotation_double();
      Vec3 t = op.translation_double();
      // candidate shifts solve (R - I) s ≡ t + R x0 - y (mod 1) over
      // least-frequent-element targets y
      std::vector<Vec3> deltas;
      Vec3 rx0 = mat_vec(rd, x0);
      for (const auto& y : lf_pos) {
        Vec3 d = reduce_mod1({t[0] + rx0[0] - y[0], t[1] + rx0[1] - y[1],
                              t[2] + rx0[2] - y[2]});
        bool dup = false;
        for (const auto& e : deltas)
          if (frac_dist_inf(d, e) <= 1e-9) {
            dup = true;
            break;
          }
        if (!dup)
          deltas.push_back(d);
      }

      std::vector<detail::OriginFamily> next;
      for (const auto& fam : families) {
        size_t k = fam.dirs.size();
        // residual constraint on this family: (R-I)(p + F λ) ≡ δ
        Vec3 rip;  // (R - I) * point
        {
          Vec3 rp = mat_vec(rd, fam.point);
          rip = {rp[0] - fam.point[0], rp[1] - fam.point[1],
                 rp[2] - fam.point[2]};
        }
        if (k == 0) {
          for (const auto& d : deltas) {
            if (frac_dist_inf(rip, d) <= 4 * sym_tol + 1e-9) {
              next.push_back(fam);
              break;
            }
          }
          continue;
        }
        std::vector<std::vector<std::int64_t>> a(
            3, std::vector<std::int64_t>(k, 0));
        for (int i = 0; i < 3; ++i)
          for (size_t j = 0; j < k; ++j)
            for (int l = 0; l < 3; ++l)
              a[i][j] += (r[i][l] - (i == l ? 1 : 0)) * fam.dirs[j][l];
        for (const auto& d : deltas) {
          Vec3 rhs = {d[0] - rip[0], d[1] - rip[1], d[2] - rip[2]};
          for (const auto& br : detail::solve_mod1(a, rhs, sym_tol)) {
            detail::OriginFamily nf;
            nf.point = fam.point;
            for (size_t j = 0; j < k; ++j)
              for (int i = 0; i < 3; ++i)
                nf.point[i] += fam.dirs[j][i] * br.x0[j];
            nf.point = reduce_mod1(nf.point);
            for (const auto& col : br.free_cols) {
              IVec3 dir{0, 0, 0};
              for (size_t j = 0; j < k; ++j)
                for (int i = 0; i < 3; ++i)
                  dir[i] += fam.dirs[j][i] * col[j];
              nf.dirs.push_back(dir);
            }
            bool dup = false;
            for (const auto& existing : next)
              if (existing.dirs.size() == nf.dirs.size() &&
                  frac_dist_inf(existing.point, nf.point) <= 1e-7) {
                dup = true;
                break;
              }
            if (!dup)
              next.push_back(std::move(nf));
          }
        }
      }
      if (next.size() > static_cast<size_t>(kOriginCandidateCap)) {
        // candidate explosion: treat this group as unmatched
        group_ok = false;
        break;
      }
      families = std::move(next);
      if (families.empty()) {
        group_ok = false;
        break;
      }
    }
    if (!group_ok)
      continue;

    std::vector<Vec3> candidates;
    for (const auto& fam : families)
      candidates.push_back(reduce_mod1(fam.point));
    std::sort(candidates.begin(), candidates.end(),
              [](const Vec3& a, const Vec3& b) {
                for (int i = 0; i < 3; ++i) {
                  long qa = std::lround(a[i] * 1e6);
                  long qb = std::lround(b[i] * 1e6);
                  if (qa != qb)
                    return qa < qb;
                }
                return false;
              });
    for (const auto& s : candidates)
      if (detail::verify_group_with_shift(g, s, pos, elem, sym_tol))
        return {number, s};
  }
  return {1, {0, 0, 0}};  // unreachable: P1 always verifies
}

inline int detect_spacegroup(const SpaceGroupTable& table,
                             const Crystal& crystal,
                             double sym_tol = kDefaultSymTol) {
  return detect_with_origin(table, crystal, sym_tol).number;
}

}  // namespace wyck

#endif
