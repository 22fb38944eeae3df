// Lattice math: minimum-image distances, structural validity, Niggli and
// primitive-cell canonicalization, structure matching, dedupe, novelty.

#ifndef WYCK_GEOMETRY_HPP_
#define WYCK_GEOMETRY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "wyck/crystal.hpp"
#include "wyck/linalg.hpp"
#include "wyck/symcore.hpp"

namespace wyck {

constexpr double kMinAtomSeparation = 0.5;  // Å
constexpr double kNiggliEpsScale = 1e-5;    // × V^(1/3)
constexpr int kNiggliIterationCap = 100;
constexpr double kPrimitiveTol = 1e-2;  // fractional, matcher-internal

struct MatchTolerances {
  double ltol = 0.2;       // relative length tolerance
  double stol = 0.3;       // site tolerance × (V/n)^(1/3)
  double angle_tol = 5.0;  // degrees
};

// ---------------------------------------------------------------------------
// Niggli reduction (Krivy–Gruber). Tracks the unimodular change of basis P
// with rows_reduced = P · rows_input.

struct NiggliResult {
  Lattice lattice;
  IMat3 basis{};  // unimodular
};

namespace detail {

inline IMat3 imat_identity() {
  return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
}

inline IMat3 imat_mul(const IMat3& a, const IMat3& b) {
  IMat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      std::int64_t s = 0;
      for (int k = 0; k < 3; ++k)
        s += a[i][k] * b[k][j];
      r[i][j] = s;
    }
  return r;
}

inline Mat3 imat_to_mat(const IMat3& m) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      r[i][j] = static_cast<double>(m[i][j]);
  return r;
}

// inverse transpose of a unimodular integer matrix, exact
inline Mat3 imat_inv_transpose(const IMat3& m) {
  std::int64_t d = idet(m);
  if (d != 1 && d != -1)
    throw Error("matrix is not unimodular");
  IMat3 adj{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
      int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      adj[i][j] = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    }
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      r[i][j] = static_cast<double>(adj[j][i]) / static_cast<double>(d);
  return r;
}

}  // namespace detail

inline NiggliResult niggli_reduce(const Lattice& input) {
  Mat3 rows = input.rows;
  IMat3 p = detail::imat_identity();
  double eps = kNiggliEpsScale * std::cbrt(input.volume());

  auto apply = [&](const IMat3& m) {
    rows = mat_mul(detail::imat_to_mat(m), rows);
    p = detail::imat_mul(m, p);
  };

  double A, B, C, ksi, eta, zeta;
  auto refresh = [&]() {
    A = dot(rows[0], rows[0]);
    B = dot(rows[1], rows[1]);
    C = dot(rows[2], rows[2]);
    ksi = 2 * dot(rows[1], rows[2]);
    eta = 2 * dot(rows[0], rows[2]);
    zeta = 2 * dot(rows[0], rows[1]);
  };
  refresh();

  int iter = 0;
  while (true) {
    if (++iter > kNiggliIterationCap)
      throw Error("Niggli reduction did not converge");
    // step 1: order A ≤ B
    if (A > B + eps ||
        (std::fabs(A - B) <= eps && std::fabs(ksi) > std::fabs(eta) + eps)) {
      apply({{{0, -1, 0}, {-1, 0, 0}, {0, 0, -1}}});
      refresh();
    }
    // step 2: order B ≤ C
    if (B > C + eps ||
        (std::fabs(B - C) <= eps && std::fabs(eta) > std::fabs(zeta) + eps)) {
      apply({{{-1, 0, 0}, {0, 0, -1}, {0, -1, 0}}});
      refresh();
      continue;
    }
    // steps 3/4: fix the signs of (ksi, eta, zeta) via diag(i,j,k), ijk = 1
    {
      static const std::array<IVec3, 4> combos = {
          IVec3{1, 1, 1}, IVec3{1, -1, -1}, IVec3{-1, 1, -1}, IVec3{-1, -1, 1}};
      bool positive = ksi * eta * zeta > 0;
      for (const auto& c : combos) {
        double nk = c[1] * c[2] * ksi;
        double ne = c[0] * c[2] * eta;
        double nz = c[0] * c[1] * zeta;
        bool ok = positive ? (nk >= -eps && ne >= -eps && nz >= -eps)
                           : (nk <= eps && ne <= eps && nz <= eps);
        if (ok) {
          if (c[0] != 1 || c[1] != 1 || c[2] != 1) {
            apply({{{c[0], 0, 0}, {0, c[1], 0}, {0, 0, c[2]}}});
            refresh();
          }
          break;
        }
      }
    }
    // step 5
    if (std::fabs(ksi) > B + eps ||
        (std::fabs(ksi - B) <= eps && 2 * eta < zeta - eps) ||
        (std::fabs(ksi + B) <= eps && zeta < -eps)) {
      std::int64_t s = ksi > 0 ? 1 : -1;
      apply({{{1, 0, 0}, {0, 1, 0}, {0, -s, 1}}});
      refresh();
      continue;
    }
    // step 6
    if (std::fabs(eta) > A + eps ||
        (std::fabs(eta - A) <= eps && 2 * ksi < zeta - eps) ||
        (std::fabs(eta + A) <= eps && zeta < -eps)) {
      std::int64_t s = eta > 0 ? 1 : -1;
      apply({{{1, 0, 0}, {0, 1, 0}, {-s, 0, 1}}});
      refresh();
      continue;
    }
    // step 7
    if (std::fabs(zeta) > A + eps ||
        (std::fabs(zeta - A) <= eps && 2 * ksi < eta - eps) ||
        (std::fabs(zeta + A) <= eps && eta < -eps)) {
      std::int64_t s = zeta > 0 ? 1 : -1;
      apply({{{1, 0, 0}, {-s, 1, 0}, {0, 0, 1}}});
      refresh();
      continue;
    }
    // step 8
    double sum = ksi + eta + zeta + A + B;
    if (sum < -eps ||
        (std::fabs(sum) <= eps && 2 * (A + eta) + zeta > eps)) {
      apply({{{1, 0, 0}, {0, 1, 0}, {1, 1, 1}}});
      refresh();
      continue;
    }
    break;
  }
  if (idet(p) < 0) {  // keep the construction right-handed
    apply({{{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}}});
  }
  return {Lattice(rows), p};
}

// ---------------------------------------------------------------------------
// Minimum-image distances. Distances are evaluated in the Niggli-reduced
// basis, where the {-1,0,1} image range is sufficient unless the reduced cell
// is still skewed beyond [60°, 120°].

namespace detail {

struct ImageFrame {
  Lattice reduced;
  Mat3 to_reduced_frac;  // P^{-T}
  int range = 1;
};

inline ImageFrame image_frame(const Lattice& lat) {
  NiggliResult nr = niggli_reduce(lat);
  ImageFrame f;
  f.reduced = nr.lattice;
  f.to_reduced_frac = imat_inv_transpose(nr.basis);
  for (auto [i, j] : {std::pair{1, 2}, {0, 2}, {0, 1}}) {
    double ang = nr.lattice.angle_deg(i, j);
    if (ang < 60.0 || ang > 120.0)
      f.range = 2;
  }
  return f;
}

inline double min_image_in_frame(const ImageFrame& f, const Vec3& dfrac_raw) {
  Vec3 d = mat_vec(f.to_reduced_frac, dfrac_raw);
  for (int i = 0; i < 3; ++i)
    d[i] -= std::round(d[i]);
  double best = 1e300;
  int r = f.range;
  for (int kx = -r; kx <= r; ++kx)
    for (int ky = -r; ky <= r; ++ky)
      for (int kz = -r; kz <= r; ++kz) {
        Vec3 img = {d[0] + kx, d[1] + ky, d[2] + kz};
        best = std::min(best, norm(f.reduced.frac_to_cart(img)));
      }
  return best;
}

// shortest nonzero lattice translation
inline double shortest_lattice_vector(const ImageFrame& f) {
  double best = 1e300;
  int r = f.range;
  for (int kx = -r; kx <= r; ++kx)
    for (int ky = -r; ky <= r; ++ky)
      for (int kz = -r; kz <= r; ++kz) {
        if (kx == 0 && ky == 0 && kz == 0)
          continue;
        Vec3 img = {double(kx), double(ky), double(kz)};
        best = std::min(best, norm(f.reduced.frac_to_cart(img)));
      }
  return best;
}

}  // namespace detail

inline double min_image_distance(const Lattice& lattice, const Vec3& frac_p,
                                 const Vec3& frac_q) {
  return detail::min_image_in_frame(detail::image_frame(lattice),
                                    frac_p - frac_q);
}

inline bool structural_validity(const Crystal& crystal) {
  detail::ImageFrame frame = detail::image_frame(crystal.lattice());
  if (!crystal.sites.empty() &&
      detail::shortest_lattice_vector(frame) < kMinAtomSeparation)
    return false;
  for (size_t i = 0; i < crystal.sites.size(); ++i)
    for (size_t j = i + 1; j < crystal.sites.size(); ++j) {
      Vec3 d = crystal.sites[i].frac - crystal.sites[j].frac;
      if (detail::min_image_in_frame(frame, d) < kMinAtomSeparation)
        return false;
    }
  return true;
}

// ---------------------------------------------------------------------------
// Primitive cell.

inline Crystal primitive_cell(const Crystal& crystal,
                              double tol = kPrimitiveTol) {
  size_t n = crystal.sites.size();
  if (n < 2)
    return crystal;
  std::vector<Vec3> pos(n);
  std::vector<std::string> elem(n);
  for (size_t i = 0; i < n; ++i) {
    pos[i] = reduce_mod1(crystal.sites[i].frac);
    elem[i] = crystal.sites[i].element;
  }
  std::map<std::string, int> counts;
  for (const auto& e : elem)
    counts[e]++;
  std::string lf;
  int lf_count = 1 << 30;
  for (const auto& [e, c] : counts)
    if (c < lf_count) {
      lf = e;
      lf_count = c;
    }
  std::vector<size_t> lf_idx;
  for (size_t i = 0; i < n; ++i)
    if (elem[i] == lf)
      lf_idx.push_back(i);

  auto maps_all = [&](const Vec3& t) {
    for (size_t i = 0; i < n; ++i) {
      Vec3 img = reduce_mod1(pos[i] + t);
      bool found = false;
      for (size_t j = 0; j < n; ++j)
        if (elem[j] == elem[i] && frac_dist_inf(img, pos[j]) <= tol) {
          found = true;
          break;
        }
      if (!found)
        return false;
    }
    return true;
  };

  std::vector<Vec3> translations;
  for (size_t a : lf_idx) {
    Vec3 t = reduce_mod1(pos[a] - pos[lf_idx[0]]);
    if (frac_dist_inf(t, {0, 0, 0}) <= tol)
      continue;
    bool dup = false;
    for (const auto& u : translations)
      if (frac_dist_inf(t, u) <= tol) {
        dup = true;
        break;
      }
    if (!dup && maps_all(t))
      translations.push_back(t);
  }
  if (translations.empty())
    return crystal;
  size_t index = translations.size() + 1;  // supercell multiplicity
  if (n % index != 0)
    return crystal;

  std::vector<Vec3> gens = translations;
  gens.push_back({1, 0, 0});
  gens.push_back({0, 1, 0});
  gens.push_back({0, 0, 1});
  double target = 1.0 / static_cast<double>(index);
  // smallest valid triple by total length, deterministic tie-breaks
  bool have = false;
  std::array<Vec3, 3> best{};
  double best_len = 1e300;
  Lattice lat = crystal.lattice();
  for (size_t i = 0; i < gens.size(); ++i)
    for (size_t j = i + 1; j < gens.size(); ++j)
      for (size_t k = j + 1; k < gens.size(); ++k) {
        Mat3 m = {gens[i], gens[j], gens[k]};
        if (std::fabs(std::fabs(det(m)) - target) > 1e-6)
          continue;
        double len = norm(lat.frac_to_cart(gens[i])) +
                     norm(lat.frac_to_cart(gens[j])) +
                     norm(lat.frac_to_cart(gens[k]));
        if (len < best_len - 1e-9) {
          best_len = len;
          best = {gens[i], gens[j], gens[k]};
          have = true;
        }
      }
  if (!have)
    return crystal;

  Mat3 b = {best[0], best[1], best[2]};
  if (det(b) < 0)
    b[2] = {-b[2][0], -b[2][1], -b[2][2]};
  Mat3 new_rows = mat_mul(b, lat.rows);
  Mat3 to_new = transpose(inverse(b));  // B^{-T}
  double map_tol = 0;
  for (int i = 0; i < 3; ++i)
    map_tol = std::max(map_tol, std::fabs(to_new[i][0]) +
                                    std::fabs(to_new[i][1]) +
                                    std::fabs(to_new[i][2]));
  map_tol = tol * map_tol;

  Crystal out;
  Lattice nl(new_rows);
  out.a = nl.a();
  out.b = nl.b();
  out.c = nl.c();
  out.alpha = nl.alpha();
  out.beta = nl.beta();
  out.gamma = nl.gamma();
  for (size_t i = 0; i < n; ++i) {
    Vec3 f = reduce_mod1(mat_vec(to_new, pos[i]));
    bool dup = false;
    for (const auto& s : out.sites)
      if (s.element == elem[i] && frac_dist_inf(s.frac, f) <= map_tol) {
        dup = true;
        break;
      }
    if (!dup)
      out.sites.push_back({elem[i], f});
  }
  if (out.sites.size() * index != n)
    return crystal;
  return out;
}

// ---------------------------------------------------------------------------
// Structure matching.

namespace detail {

inline std::map<std::string, std::int64_t> composition_counts(
    const Crystal& c) {
  std::map<std::string, std::int64_t> m;
  for (const auto& s : c.sites)
    m[s.element]++;
  return m;
}

inline std::map<std::string, std::int64_t> reduced_composition(
    const std::map<std::string, std::int64_t>& counts) {
  std::int64_t g = 0;
  for (const auto& [e, c] : counts)
    g = std::gcd(g, c);
  std::map<std::string, std::int64_t> r;
  for (const auto& [e, c] : counts)
    r[e] = c / g;
  return r;
}

inline std::string composition_key(const Crystal& c) {
  std::string k;
  for (const auto& [e, n] : reduced_composition(composition_counts(c))) {
    k += e;
    k += std::to_string(n);
  }
  return k;
}

struct ReducedForm {
  Crystal cell;  // primitive, Niggli-reduced basis
  Lattice lattice;
  std::map<std::string, std::int64_t> reduced_comp;
  std::string lf_element;  // least frequent, for anchor search
};

inline ReducedForm reduce_for_matching(const Crystal& input) {
  ReducedForm f;
  Crystal prim = primitive_cell(input);
  NiggliResult nr = niggli_reduce(prim.lattice());
  Mat3 to_red = imat_inv_transpose(nr.basis);
  f.cell.a = nr.lattice.a();
  f.cell.b = nr.lattice.b();
  f.cell.c = nr.lattice.c();
  f.cell.alpha = nr.lattice.alpha();
  f.cell.beta = nr.lattice.beta();
  f.cell.gamma = nr.lattice.gamma();
  for (const auto& s : prim.sites)
    f.cell.sites.push_back({s.element, reduce_mod1(mat_vec(to_red, s.frac))});
  f.lattice = f.cell.lattice();
  f.reduced_comp = reduced_composition(composition_counts(f.cell));
  std::map<std::string, std::int64_t> counts = composition_counts(f.cell);
  std::int64_t lf_count = 1LL << 60;
  for (const auto& [e, c] : counts)
    if (c < lf_count) {
      f.lf_element = e;
      lf_count = c;
    }
  return f;
}

// all 3×3 integer matrices with entries in {-1,0,1} and |det| = 1
inline const std::vector<IMat3>& unimodular_candidates() {
  static const std::vector<IMat3> cache = [] {
    std::vector<IMat3> out;
    IMat3 m{};
    for (int bits = 0; bits < 19683; ++bits) {
      int v = bits;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          m[i][j] = v % 3 - 1;
          v /= 3;
        }
      std::int64_t d = idet(m);
      if (d == 1 || d == -1)
        out.push_back(m);
    }
    return out;
  }();
  return cache;
}

// bipartite perfect matching (Kuhn's augmenting paths)
inline bool perfect_matching(const std::vector<std::vector<int>>& adj,
                             int n_right) {
  int n_left = static_cast<int>(adj.size());
  std::vector<int> match_right(n_right, -1);
  std::vector<char> used;
  std::function<bool(int)> try_kuhn = [&](int u) -> bool {
    for (int v : adj[u]) {
      if (used[v])
        continue;
      used[v] = 1;
      if (match_right[v] < 0 || try_kuhn(match_right[v])) {
        match_right[v] = u;
        return true;
      }
    }
    return false;
  };
  for (int u = 0; u < n_left; ++u) {
    used.assign(n_right, 0);
    if (!try_kuhn(u))
      return false;
  }
  return true;
}

inline bool match_reduced(const ReducedForm& fa, const ReducedForm& fb,
                          const MatchTolerances& tol) {
  if (fa.reduced_comp != fb.reduced_comp)
    return false;
  size_t n = fa.cell.sites.size();
  if (n != fb.cell.sites.size())
    return false;
  double va = fa.lattice.volume() / n;
  double vb = fb.lattice.volume() / n;
  double lo = std::pow(1.0 - tol.ltol, 3.0), hi = std::pow(1.0 + tol.ltol, 3.0);
  if (va / vb < lo || va / vb > hi)
    return false;

  double site_cutoff = tol.stol * std::cbrt(fa.lattice.volume() / n);
  ImageFrame frame = image_frame(fa.lattice);

  std::array<double, 3> la = {fa.lattice.a(), fa.lattice.b(), fa.lattice.c()};
  std::array<double, 3> aa = {fa.lattice.alpha(), fa.lattice.beta(),
                              fa.lattice.gamma()};
  for (const IMat3& m : unimodular_candidates()) {
    Mat3 rows_b = mat_mul(imat_to_mat(m), fb.lattice.rows);
    Lattice lb(rows_b);
    bool ok = true;
    std::array<double, 3> lens = {lb.a(), lb.b(), lb.c()};
    std::array<double, 3> angs = {lb.alpha(), lb.beta(), lb.gamma()};
    for (int i = 0; i < 3 && ok; ++i) {
      if (std::fabs(lens[i] - la[i]) > tol.ltol * la[i])
        ok = false;
      else if (std::fabs(angs[i] - aa[i]) > tol.angle_tol)
        ok = false;
    }
    if (!ok)
      continue;

    Mat3 to_new = imat_inv_transpose(m);
    std::vector<Vec3> posb;
    for (const auto& s : fb.cell.sites)
      posb.push_back(reduce_mod1(mat_vec(to_new, s.frac)));

    // anchor translation candidates over the least-frequent element of a
    Vec3 anchor_a{};
    bool have_anchor = false;
    for (const auto& s : fa.cell.sites)
      if (s.element == fa.lf_element) {
        anchor_a = s.frac;
        have_anchor = true;
        break;
      }
    if (!have_anchor)
      continue;
    for (size_t bi = 0; bi < posb.size(); ++bi) {
      if (fb.cell.sites[bi].element != fa.lf_element)
        continue;
      Vec3 shift = anchor_a - posb[bi];
      std::vector<std::vector<int>> adj(n);
      bool feasible = true;
      for (size_t i = 0; i < n && feasible; ++i) {
        for (size_t j = 0; j < n; ++j) {
          if (fa.cell.sites[i].element != fb.cell.sites[j].element)
            continue;
          Vec3 d = fa.cell.sites[i].frac - (posb[j] + shift);
          if (min_image_in_frame(frame, d) <= site_cutoff)
            adj[i].push_back(static_cast<int>(j));
        }
        if (adj[i].empty())
          feasible = false;
      }
      if (feasible && perfect_matching(adj, static_cast<int>(n)))
        return true;
    }
  }
  return false;
}

}  // namespace detail

inline bool structures_match(const Crystal& a, const Crystal& b,
                             const MatchTolerances& tol = {}) {
  return detail::match_reduced(detail::reduce_for_matching(a),
                               detail::reduce_for_matching(b), tol);
}

// Partition under the transitive closure of pairwise matches; classes are
// listed by ascending first index, members ascending.
inline std::vector<std::vector<size_t>> dedupe(
    const std::vector<Crystal>& crystals, const MatchTolerances& tol = {}) {
  size_t n = crystals.size();
  std::vector<detail::ReducedForm> forms;
  forms.reserve(n);
  for (const auto& c : crystals)
    forms.push_back(detail::reduce_for_matching(c));
  std::vector<size_t> parent(n);
  for (size_t i = 0; i < n; ++i)
    parent[i] = i;
  std::function<size_t(size_t)> find = [&](size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      if (find(i) == find(j))
        continue;
      if (detail::match_reduced(forms[i], forms[j], tol)) {
        size_t ri = find(i), rj = find(j);
        parent[std::max(ri, rj)] = std::min(ri, rj);
      }
    }
  std::map<size_t, std::vector<size_t>> classes;
  for (size_t i = 0; i < n; ++i)
    classes[find(i)].push_back(i);
  std::vector<std::vector<size_t>> out;
  for (auto& [root, members] : classes)
    out.push_back(std::move(members));
  return out;
}

// Reference corpus indexed by reduced composition.
class NoveltyIndex {
 public:
  explicit NoveltyIndex(const std::vector<Crystal>& corpus) {
    forms_.reserve(corpus.size());
    for (size_t i = 0; i < corpus.size(); ++i) {
      forms_.push_back(detail::reduce_for_matching(corpus[i]));
      by_comp_[detail::composition_key(corpus[i])].push_back(i);
    }
  }

  // true iff no reference structure with the same reduced composition matches
  bool is_novel(const Crystal& crystal, const MatchTolerances& tol = {}) const {
    auto it = by_comp_.find(detail::composition_key(crystal));
    if (it == by_comp_.end())
      return true;
    detail::ReducedForm f = detail::reduce_for_matching(crystal);
    for (size_t idx : it->second)
      if (detail::match_reduced(f, forms_[idx], tol))
        return false;
    return true;
  }

  size_t size() const { return forms_.size(); }

 private:
  std::vector<detail::ReducedForm> forms_;
  std::map<std::string, std::vector<size_t>> by_comp_;
};

}  // namespace wyck

#endif
