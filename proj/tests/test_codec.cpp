#include <random>

#include "catch_amalgamated.hpp"
#include "helpers.hpp"
#include "wyck/codec.hpp"
#include "wyck/geometry.hpp"
#include "wyck/rlip.hpp"

using namespace wyck;

TEST_CASE("fixed-point formatting rounds half away from zero") {
  using detail::format_fixed;
  CHECK(format_fixed(0.125, 2) == "0.13");
  CHECK(format_fixed(0.375, 2) == "0.38");
  CHECK(format_fixed(-0.125, 2) == "-0.13");
  CHECK(format_fixed(0.4375, 3) == "0.438");
  CHECK(format_fixed(6.905, 2) == "6.91");
  CHECK(format_fixed(90.0, 2) == "90.00");
  CHECK(format_fixed(-0.0001, 2) == "0.00");
  CHECK(format_fixed(0.9995, 3) == "1.000");
  CHECK(format_fixed(7.0, 3) == "7.000");
}

TEST_CASE("coordinate strings stay inside [0.000, 1.000)") {
  CHECK(detail::format_coord(0.99999) == "0.000");
  CHECK(detail::format_coord(0.9994) == "0.999");
  CHECK(detail::format_coord(0.0) == "0.000");
  CHECK(detail::format_coord(1e-9) == "0.000");
}

TEST_CASE("prompts render exactly") {
  CHECK(render_prompt(false).text ==
        "Below is a description of a bulk material. Generate a description of "
        "the lengths and angles of the lattice vectors and then the element "
        "type and coordinates for each atom within the lattice:");
  CHECK(render_prompt(true, 62).text ==
        "Below is a description of a bulk material. The spacegroup number is "
        "62. Generate a description of the lengths and angles of the lattice "
        "vectors and then the element type and coordinates for each atom "
        "within the lattice:");
  CHECK_THROWS_AS(render_prompt(true, 0), Error);
  CHECK_THROWS_AS(render_prompt(true, 231), Error);
}

TEST_CASE("reference blocks survive a full parse, rebuild, encode cycle") {
  const auto& t = test_table();
  for (const char* name : {"golden_1.txt", "golden_2.txt", "golden_3.txt"}) {
    std::string block = read_file(fixture(name));
    INFO(name);
    WyckoffRecord rec = parse_wyckoff(block, t);
    Crystal full = reconstruct(rec, t);
    REQUIRE(static_cast<int>(full.sites.size()) == rec.total_atoms);
    REQUIRE(encode_wyckoff(full, t) == block);
  }
}

TEST_CASE("plain-coordinate blocks parse back to the same atoms") {
  const auto& t = test_table();
  std::string block = read_file(fixture("golden_1.txt"));
  Crystal full = reconstruct(parse_wyckoff(block, t), t);
  std::string flat = encode_coords(full);
  Crystal again = parse_coords(flat);
  REQUIRE(again.sites.size() == full.sites.size());
  for (size_t i = 0; i < full.sites.size(); ++i) {
    CHECK(again.sites[i].element == full.sites[i].element);
    CHECK(frac_dist_inf(again.sites[i].frac, full.sites[i].frac) <= 5.05e-4);
  }
  // a coordinate block has no symmetry header
  CHECK(flat.find("Spacegroup") == std::string::npos);
  CHECK(flat.find("a\n") == std::string::npos);
}

TEST_CASE("encoding is deterministic") {
  const auto& t = test_table();
  std::string block = read_file(fixture("golden_2.txt"));
  Crystal full = reconstruct(parse_wyckoff(block, t), t);
  REQUIRE(encode_wyckoff(full, t) == encode_wyckoff(full, t));
  REQUIRE(encode_coords(full) == encode_coords(full));
}

TEST_CASE("error classification separates lexical from semantic") {
  const auto& t = test_table();
  auto kind_of = [&](const std::string& text) {
    try {
      parse_wyckoff(text, t);
    } catch (const ParseError& e) {
      return e.kind == ParseErrorKind::Lexical ? std::string("lex")
                                               : std::string("sem");
    }
    return std::string("ok");
  };
  std::string good = read_file(fixture("golden_1.txt"));
  REQUIRE(kind_of(good) == "ok");

  SECTION("garbage and malformed tokens are lexical") {
    CHECK(kind_of("") == "lex");
    CHECK(kind_of("not a block at all") == "lex");
    CHECK(kind_of("Qq3Al4\nSpacegroup: Pnma\n") == "lex");
    std::string bad = good;
    bad.replace(bad.find("Pnma"), 4, "Qqqq");  // unknown symbol
    CHECK(kind_of(bad) == "lex");
    bad = good;
    bad.replace(bad.find("0.005"), 5, "0.0x5");  // non-numeric coordinate
    CHECK(kind_of(bad) == "lex");
    bad = good;
    bad.replace(bad.find("abc:"), 4, "abc :");  // broken keyword spacing
    CHECK(kind_of(bad) == "lex");
  }

  SECTION("well-formed but inconsistent content is semantic") {
    std::string bad = good;
    bad.replace(bad.find("Ho4"), 3, "Ho8");  // formula does not match sites
    CHECK(kind_of(bad) == "sem");
    bad = good;
    bad.replace(bad.find("Sites (12)"), 10, "Sites (13)");
    CHECK(kind_of(bad) == "sem");
    bad = good;
    bad.replace(bad.find("4c"), 2, "4d");  // label absent from this group
    CHECK(kind_of(bad) == "sem");
    bad = good;
    bad.replace(bad.find("6.91"), 4, "-6.91");  // negative cell length
    CHECK(kind_of(bad) == "sem");
  }
}

TEST_CASE("parse errors carry the offending line number") {
  const auto& t = test_table();
  std::string good = read_file(fixture("golden_1.txt"));
  std::string bad = good;
  bad.replace(bad.find("Pnma"), 4, "Qqqq");
  try {
    parse_wyckoff(bad, t);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("random single-byte corruption never escapes the error taxonomy") {
  const auto& t = test_table();
  std::string good = read_file(fixture("golden_2.txt"));
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<size_t> pos(0, good.size() - 1);
  std::uniform_int_distribution<int> byte(1, 126);
  for (int trial = 0; trial < 4000; ++trial) {
    std::string mutated = good;
    mutated[pos(rng)] = static_cast<char>(byte(rng));
    try {
      WyckoffRecord rec = parse_wyckoff(mutated, t);
      reconstruct(rec, t);  // accepted text must also reconstruct
    } catch (const ParseError&) {
    } catch (const Error&) {
    }
  }
  SUCCEED("no crash or foreign exception across 4000 mutations");
}

TEST_CASE("random byte soup is rejected as lexical") {
  const auto& t = test_table();
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> len(1, 200);
  std::uniform_int_distribution<int> byte(32, 126);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string s;
    int n = len(rng);
    for (int i = 0; i < n; ++i) {
      int b = byte(rng);
      s += (trial % 7 == 0 && i % 17 == 16) ? '\n' : static_cast<char>(b);
    }
    try {
      parse_wyckoff(s, t);
    } catch (const ParseError&) {
      continue;
    }
    FAIL("accepted: " << s);
  }
  SUCCEED();
}

TEST_CASE("encode rejects unknown element symbols") {
  const auto& t = test_table();
  Crystal bad;
  bad.a = bad.b = bad.c = 4.0;
  bad.sites = {{"Xx", {0, 0, 0}}};
  REQUIRE_THROWS_AS(encode_wyckoff(bad, t), Error);
  REQUIRE_THROWS_AS(encode_coords(bad), Error);
}

TEST_CASE("formula line uses explicit counts in site order") {
  const auto& t = test_table();
  std::string block = read_file(fixture("golden_3.txt"));
  REQUIRE(block.rfind("Ti4Ni4Sn4\n", 0) == 0);
  WyckoffRecord rec = parse_wyckoff(block, t);
  REQUIRE(rec.formula.size() == 3);
  CHECK(rec.formula[0] == std::make_pair(std::string("Ti"), 4));
  CHECK(rec.formula[1] == std::make_pair(std::string("Ni"), 4));
  CHECK(rec.formula[2] == std::make_pair(std::string("Sn"), 4));
  CHECK(rec.total_atoms == 12);
}

TEST_CASE("implicit formula counts are rejected in this dialect") {
  const auto& t = test_table();
  std::string good = read_file(fixture("golden_3.txt"));
  std::string bad = good;
  bad.replace(0, 10, "TiNi4Sn4\n");  // Ti without a count
  REQUIRE_THROWS_AS(parse_wyckoff(bad, t), ParseError);
}

TEST_CASE("round-trip holds for randomized wyckoff structures") {
  const auto& t = test_table();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> coord(0.04, 0.46);
  std::uniform_real_distribution<double> cell(4.0, 9.0);
  const char* elements[] = {"Li", "Mg", "Al", "Si", "Ca", "Ti", "Fe", "Cu"};
  int built = 0;
  for (int n : {2, 15, 62, 123, 139, 166, 194, 216, 221, 225, 227}) {
    const SpaceGroup& g = t.group(n);
    for (int trial = 0; trial < 4; ++trial) {
      // assemble one or two orbits at generic-ish parameters
      Crystal c;
      double a = cell(rng);
      c.a = c.b = c.c = a;
      if (g.crystal_system == "orthorhombic") {
        c.b = a * 1.13;
        c.c = a * 1.31;
      } else if (g.crystal_system == "monoclinic") {
        c.b = a * 1.13;
        c.c = a * 1.31;
        c.beta = 104.0;
      } else if (g.crystal_system == "triclinic") {
        c.b = a * 1.13;
        c.c = a * 1.31;
        c.alpha = 84.0;
        c.beta = 104.0;
        c.gamma = 93.0;
      } else if (g.crystal_system == "tetragonal") {
        c.c = a * 1.27;
      } else if (g.crystal_system == "hexagonal" ||
                 g.crystal_system == "trigonal") {
        c.c = a * 1.27;
        c.gamma = 120.0;
      }
      std::vector<const WyckoffPosition*> small;
      for (const auto& wp : g.wyckoff_positions)
        if (wp.multiplicity <= 24)
          small.push_back(&wp);
      if (small.empty())
        continue;
      std::vector<Vec3> used;
      int n_orbits = 1 + static_cast<int>(rng() % 2);
      for (int k = 0; k < n_orbits; ++k) {
        const auto& wp = *small[rng() % small.size()];
        Vec3 p = reduce_mod1(
            wp.site_exprs[0].apply({coord(rng), coord(rng), coord(rng)}));
        auto orbit = expand_orbit(g, p);
        if (static_cast<int>(orbit.size()) != wp.multiplicity)
          continue;  // parameters hit a special value; skip this orbit
        bool clash = false;
        for (const auto& q : orbit)
          for (const auto& u : used)
            if (frac_dist_inf(q, u) < 0.05)
              clash = true;
        if (clash)
          continue;
        for (const auto& q : orbit) {
          c.sites.push_back({elements[(built + k) % 8], q});
          used.push_back(q);
        }
      }
      if (c.sites.empty() || c.sites.size() > 40)
        continue;
      std::string block;
      try {
        block = encode_wyckoff(c, t);
      } catch (const Error&) {
        continue;  // extra accidental symmetry can reorganize orbits; fine
      }
      WyckoffRecord rec = parse_wyckoff(block, t);
      Crystal back = reconstruct(rec, t);
      REQUIRE(back.sites.size() == c.sites.size());
      REQUIRE(encode_wyckoff(back, t) == block);
      ++built;
    }
  }
  REQUIRE(built >= 20);
}
