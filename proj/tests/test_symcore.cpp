#include <algorithm>
#include <random>
#include <set>

#include "catch_amalgamated.hpp"
#include "helpers.hpp"
#include "wyck/symcore.hpp"

using namespace wyck;

TEST_CASE("table covers all 230 groups with consistent wyckoff data") {
  const auto& t = test_table();
  for (int n = 1; n <= 230; ++n) {
    const SpaceGroup& g = t.group(n);
    REQUIRE(g.number == n);
    REQUIRE_FALSE(g.hm_symbol.empty());
    REQUIRE_FALSE(g.ops.empty());
    REQUIRE_FALSE(g.wyckoff_positions.empty());
    // general position multiplicity equals the operator count
    int max_mult = 0;
    for (const auto& wp : g.wyckoff_positions)
      max_mult = std::max(max_mult, wp.multiplicity);
    REQUIRE(max_mult == static_cast<int>(g.ops.size()));
    REQUIRE(t.symbol_to_number(g.hm_symbol) == n);
  }
}

TEST_CASE("operator sets satisfy the group axioms") {
  const auto& t = test_table();
  for (int n : {1, 2, 14, 15, 62, 123, 143, 166, 194, 216, 225, 227, 230}) {
    const SpaceGroup& g = t.group(n);
    INFO("group " << n);
    auto find = [&](const SymmetryOp& op) {
      return std::any_of(g.ops.begin(), g.ops.end(),
                         [&](const SymmetryOp& o) { return o == op; });
    };
    REQUIRE(find(SymmetryOp::identity()));
    for (const auto& a : g.ops) {
      REQUIRE(find(a.inverse()));
      for (const auto& b : g.ops)
        REQUIRE(find(a.compose(b)));
    }
  }
}

TEST_CASE("triplet strings round-trip through parse and format") {
  const auto& t = test_table();
  for (int n = 1; n <= 230; ++n) {
    for (const auto& op : t.group(n).ops) {
      SymmetryOp re = parse_triplet(op.triplet());
      REQUIRE(re == op);
      REQUIRE(re.triplet() == op.triplet());
    }
  }
}

TEST_CASE("orbit size equals wyckoff multiplicity at generic parameters") {
  const auto& t = test_table();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.05, 0.45);
  for (int n : {2, 15, 62, 139, 166, 194, 216, 221, 227}) {
    const SpaceGroup& g = t.group(n);
    for (const auto& wp : g.wyckoff_positions) {
      Vec3 p = wp.site_exprs[0].apply({u(rng), u(rng), u(rng)});
      auto orbit = expand_orbit(g, reduce_mod1(p));
      INFO("group " << n << " position " << wp.multiplicity << wp.letter);
      REQUIRE(static_cast<int>(orbit.size()) == wp.multiplicity);
      WyckoffAssignment a = assign_wyckoff(g, orbit);
      REQUIRE(a.multiplicity == wp.multiplicity);
    }
  }
}

TEST_CASE("wyckoff letters are unique and ordered within each group") {
  const auto& t = test_table();
  for (int n = 1; n <= 230; ++n) {
    std::set<char> letters;
    for (const auto& wp : t.group(n).wyckoff_positions)
      REQUIRE(letters.insert(wp.letter).second);
  }
}

TEST_CASE("detection recovers high-symmetry elemental structures") {
  const auto& t = test_table();
  Crystal sc;  // simple cubic
  sc.a = sc.b = sc.c = 3.34;
  sc.sites = {{"Po", {0, 0, 0}}};
  REQUIRE(detect_spacegroup(t, sc) == 221);

  Crystal bcc;
  bcc.a = bcc.b = bcc.c = 2.87;
  bcc.sites = {{"Fe", {0, 0, 0}}, {"Fe", {0.5, 0.5, 0.5}}};
  REQUIRE(detect_spacegroup(t, bcc) == 229);

  Crystal fcc;
  fcc.a = fcc.b = fcc.c = 3.61;
  fcc.sites = {{"Cu", {0, 0, 0}},
               {"Cu", {0, 0.5, 0.5}},
               {"Cu", {0.5, 0, 0.5}},
               {"Cu", {0.5, 0.5, 0}}};
  REQUIRE(detect_spacegroup(t, fcc) == 225);

  Crystal nacl;
  nacl.a = nacl.b = nacl.c = 5.64;
  nacl.sites = {{"Na", {0, 0, 0}},    {"Na", {0, 0.5, 0.5}},
                {"Na", {0.5, 0, 0.5}}, {"Na", {0.5, 0.5, 0}},
                {"Cl", {0.5, 0.5, 0.5}}, {"Cl", {0.5, 0, 0}},
                {"Cl", {0, 0.5, 0}},  {"Cl", {0, 0, 0.5}}};
  REQUIRE(detect_spacegroup(t, nacl) == 225);
}

TEST_CASE("detection reports the origin shift it removed") {
  const auto& t = test_table();
  Crystal shifted;
  shifted.a = shifted.b = shifted.c = 3.34;
  shifted.sites = {{"Po", {0.21, 0.37, 0.84}}};
  Detection d = detect_with_origin(t, shifted);
  REQUIRE(d.number == 221);
  // standard position = site - shift must land on the 1a origin
  Vec3 std_pos = reduce_mod1(shifted.sites[0].frac - d.origin_shift);
  for (int i = 0; i < 3; ++i)
    REQUIRE(dist_to_int(std_pos[i]) < 1e-9);
}

TEST_CASE("triclinic skew keeps only the identity") {
  const auto& t = test_table();
  Crystal c;
  c.a = 4.1;
  c.b = 5.3;
  c.c = 6.7;
  c.alpha = 81;
  c.beta = 94;
  c.gamma = 103;
  c.sites = {{"C", {0.11, 0.23, 0.37}}, {"N", {0.55, 0.61, 0.79}}};
  REQUIRE(detect_spacegroup(t, c) == 1);
}

TEST_CASE("unknown symbols and group numbers are rejected") {
  const auto& t = test_table();
  REQUIRE_THROWS_AS(t.group(0), Error);
  REQUIRE_THROWS_AS(t.group(231), Error);
  REQUIRE_THROWS_AS(t.symbol_to_number("Xyzzy"), Error);
  REQUIRE_FALSE(t.has_symbol("Xyzzy"));
  REQUIRE(t.has_symbol("Pnma"));
}

TEST_CASE("malformed triplets are rejected") {
  REQUIRE_THROWS_AS(parse_triplet("x,y"), Error);
  REQUIRE_THROWS_AS(parse_triplet("x,y,z,w"), Error);
  REQUIRE_THROWS_AS(parse_triplet("q,y,z"), Error);
  REQUIRE_THROWS_AS(parse_triplet("x+,y,z"), Error);
  REQUIRE_THROWS_AS(parse_triplet("1/0,y,z"), Error);
}
