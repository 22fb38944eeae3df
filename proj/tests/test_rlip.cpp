#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "helpers.hpp"
#include "wyck/rlip.hpp"

using namespace wyck;

namespace {

Sample make_sample(size_t i, std::optional<StabilityLabel> label,
                   bool novel = false, bool unique_rep = true,
                   int detected = 0) {
  Sample s;
  s.index = i;
  s.prompt = "P";
  s.text = "T" + std::to_string(i);
  s.status = label ? SampleStatus::Ok : SampleStatus::LexicalError;
  s.label = label;
  s.novel = label ? std::optional<bool>(novel) : std::nullopt;
  s.unique_rep = unique_rep;
  if (detected)
    s.detected_sg = detected;
  if (label) {
    s.structural_valid = true;
    s.compositional_valid = true;
    s.e_hull = *label == StabilityLabel::Stable       ? -0.01
               : *label == StabilityLabel::Metastable ? 0.05
                                                      : 0.3;
  }
  return s;
}

std::vector<const Sample*> ptrs(const std::vector<Sample>& v) {
  std::vector<const Sample*> p;
  for (const auto& s : v)
    p.push_back(&s);
  return p;
}

}  // namespace

TEST_CASE("preference loss has the right fixed points") {
  LogProbPair even{-1.0, -1.0, -1.0, -1.0};
  CHECK(dpo_loss(even, 0.1) == Catch::Approx(std::log(2.0)).epsilon(1e-14));
  // margin 10 at beta 0.1: -ln sigmoid(1)
  LogProbPair ahead{-1.0, -1.0, -11.0, -1.0};
  CHECK(dpo_loss(ahead, 0.1) ==
        Catch::Approx(-std::log(1.0 / (1.0 + std::exp(-1.0)))).epsilon(1e-12));
  CHECK_THROWS_AS(dpo_loss(even, 0.0), Error);
  CHECK_THROWS_AS(dpo_loss(even, -0.5), Error);
  LogProbPair bad = even;
  bad.logp_policy_chosen = std::nan("");
  CHECK_THROWS_AS(dpo_loss(bad, 0.1), Error);
}

TEST_CASE("preference loss matches the closed form and never overflows") {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> lp(-2000.0, 0.0);
  std::uniform_real_distribution<double> beta(0.01, 5.0);
  for (int trial = 0; trial < 2000; ++trial) {
    LogProbPair p{lp(rng), lp(rng), lp(rng), lp(rng)};
    double b = beta(rng);
    double m = b * ((p.logp_policy_chosen - p.logp_ref_chosen) -
                    (p.logp_policy_rejected - p.logp_ref_rejected));
    long double ref = m >= 0 ? std::log1p(std::exp((long double)-m))
                             : -m + std::log1p(std::exp((long double)m));
    double loss = dpo_loss(p, b);
    REQUIRE(std::isfinite(loss));
    REQUIRE(loss >= 0.0);
    CHECK(loss == Catch::Approx((double)ref).margin(1e-12));
  }
}

TEST_CASE("preference loss decreases as the margin grows") {
  double prev = 1e300;
  for (double adv = -50; adv <= 50; adv += 0.5) {
    LogProbPair p{adv, 0.0, 0.0, 0.0};
    double loss = dpo_loss(p, 0.1);
    REQUIRE(loss < prev);
    prev = loss;
  }
}

TEST_CASE("sampling temperature ramps linearly") {
  CHECK(temperature_at(0, 1.0, 0.05) == Catch::Approx(1.0));
  CHECK(temperature_at(3, 1.0, 0.05) == Catch::Approx(1.15));
  CHECK(temperature_at(10, 0.8, 0.02) == Catch::Approx(1.0));
}

TEST_CASE("stability tiers produce three pairs per stable, two per metastable") {
  std::vector<Sample> v;
  for (size_t i = 0; i < 3; ++i)
    v.push_back(make_sample(v.size(), StabilityLabel::Stable));
  for (size_t i = 0; i < 5; ++i)
    v.push_back(make_sample(v.size(), StabilityLabel::Metastable));
  for (size_t i = 0; i < 20; ++i)
    v.push_back(make_sample(v.size(), StabilityLabel::Unstable));
  v.push_back(make_sample(v.size(), std::nullopt));  // unparsed: ignored

  PairBuild b = tiered_pairs(ptrs(v), 99);
  CHECK(b.pairs.size() == 3 * 3 + 5 * 2);
  CHECK(b.warnings.empty());
  size_t sm = 0, su = 0, mu = 0;
  for (const auto& p : b.pairs) {
    if (p.tier == "SM")
      ++sm;
    else if (p.tier == "SU")
      ++su;
    else if (p.tier == "MU")
      ++mu;
    CHECK(p.chosen != p.rejected);
  }
  CHECK(sm == 3);
  CHECK(su == 6);
  CHECK(mu == 10);

  // chosen always outranks rejected
  auto label_of = [&](const std::string& text) {
    for (const auto& s : v)
      if (s.text == text)
        return *s.label;
    FAIL("unknown text");
    return StabilityLabel::Unstable;
  };
  for (const auto& p : b.pairs) {
    StabilityLabel lc = label_of(p.chosen), lr = label_of(p.rejected);
    CHECK(static_cast<int>(lc) < static_cast<int>(lr));
  }
}

TEST_CASE("pair drawing is deterministic in the seed") {
  std::vector<Sample> v;
  for (size_t i = 0; i < 4; ++i)
    v.push_back(make_sample(v.size(), StabilityLabel::Stable));
  for (size_t i = 0; i < 6; ++i)
    v.push_back(make_sample(v.size(), StabilityLabel::Metastable));
  for (size_t i = 0; i < 30; ++i)
    v.push_back(make_sample(v.size(), StabilityLabel::Unstable));
  PairBuild a = tiered_pairs(ptrs(v), 7);
  PairBuild b = tiered_pairs(ptrs(v), 7);
  REQUIRE(a.pairs.size() == b.pairs.size());
  for (size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].chosen == b.pairs[i].chosen);
    CHECK(a.pairs[i].rejected == b.pairs[i].rejected);
    CHECK(a.pairs[i].tier == b.pairs[i].tier);
  }
  PairBuild other = tiered_pairs(ptrs(v), 8);
  bool any_diff = false;
  for (size_t i = 0; i < a.pairs.size(); ++i)
    if (a.pairs[i].rejected != other.pairs[i].rejected)
      any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("missing partner pools skip with a single warning") {
  std::vector<Sample> v;
  v.push_back(make_sample(0, StabilityLabel::Stable));
  v.push_back(make_sample(1, StabilityLabel::Unstable));
  v.push_back(make_sample(2, StabilityLabel::Unstable));
  PairBuild b = tiered_pairs(ptrs(v), 1);
  CHECK(b.pairs.size() == 2);  // SM impossible, SU drawn twice
  REQUIRE(b.warnings.size() == 1);

  // no unstable partners at all
  std::vector<Sample> v2;
  v2.push_back(make_sample(0, StabilityLabel::Stable));
  v2.push_back(make_sample(1, StabilityLabel::Metastable));
  PairBuild b2 = tiered_pairs(ptrs(v2), 1);
  CHECK(b2.pairs.size() == 1);  // only the SM pair
  CHECK(b2.warnings.size() == 1);
  CHECK(b2.pairs[0].tier == "SM");
}

TEST_CASE("small partner pools are reused through refill") {
  std::vector<Sample> v;
  for (size_t i = 0; i < 5; ++i)
    v.push_back(make_sample(v.size(), StabilityLabel::Stable));
  v.push_back(make_sample(v.size(), StabilityLabel::Metastable));
  v.push_back(make_sample(v.size(), StabilityLabel::Unstable));
  PairBuild b = tiered_pairs(ptrs(v), 3);
  // 5 SM + 10 SU + 2 MU, single partners reused
  CHECK(b.pairs.size() == 17);
  CHECK(b.warnings.empty());
  for (const auto& p : b.pairs)
    if (p.tier == "SM")
      CHECK(p.rejected == v[5].text);
}

TEST_CASE("non-tiered ablation pairs accepted against unstable only") {
  std::vector<Sample> v;
  for (size_t i = 0; i < 3; ++i)
    v.push_back(make_sample(v.size(), StabilityLabel::Stable));
  for (size_t i = 0; i < 5; ++i)
    v.push_back(make_sample(v.size(), StabilityLabel::Metastable));
  for (size_t i = 0; i < 20; ++i)
    v.push_back(make_sample(v.size(), StabilityLabel::Unstable));
  PairBuild b = tiered_pairs(ptrs(v), 99, true);
  CHECK(b.pairs.size() == (3 + 5) * 2);
  size_t sm = 0, su = 0, mu = 0;
  for (const auto& p : b.pairs) {
    if (p.tier == "SM")
      ++sm;
    else if (p.tier == "SU")
      ++su;
    else if (p.tier == "MU")
      ++mu;
  }
  CHECK(sm == 0);
  CHECK(su == 6);
  CHECK(mu == 10);
}

TEST_CASE("novelty pairs put stable-novel over stable-known") {
  std::vector<Sample> v;
  v.push_back(make_sample(0, StabilityLabel::Stable, true));
  v.push_back(make_sample(1, StabilityLabel::Stable, true));
  v.push_back(make_sample(2, StabilityLabel::Stable, false));
  v.push_back(make_sample(3, StabilityLabel::Metastable, true));
  v.push_back(make_sample(4, StabilityLabel::Unstable, true));
  PairBuild b = novelty_pairs(ptrs(v), 5);
  REQUIRE(b.pairs.size() == 2);
  for (const auto& p : b.pairs) {
    CHECK(p.tier == "NOV");
    CHECK(p.rejected == v[2].text);
  }
  CHECK(b.warnings.empty());

  // no stable-known partner: skip with one warning
  std::vector<Sample> v2;
  v2.push_back(make_sample(0, StabilityLabel::Stable, true));
  v2.push_back(make_sample(1, StabilityLabel::Stable, true));
  PairBuild b2 = novelty_pairs(ptrs(v2), 5);
  CHECK(b2.pairs.empty());
  CHECK(b2.warnings.size() == 1);
}

TEST_CASE("conditioned pairs reward the requested group and stability") {
  std::vector<Sample> v;
  // 4 acceptable and matching, 3 acceptable non-matching, 10 unstable
  for (size_t i = 0; i < 4; ++i)
    v.push_back(make_sample(v.size(), StabilityLabel::Stable, false, true, 62));
  for (size_t i = 0; i < 3; ++i)
    v.push_back(
        make_sample(v.size(), StabilityLabel::Metastable, false, true, 14));
  for (size_t i = 0; i < 10; ++i)
    v.push_back(
        make_sample(v.size(), StabilityLabel::Unstable, false, true, 62));
  PairBuild b = spacegroup_pairs(ptrs(v), 62, 4);
  size_t match = 0, stab = 0;
  for (const auto& p : b.pairs) {
    if (p.tier == "SG_MATCH")
      ++match;
    else if (p.tier == "SG_STAB")
      ++stab;
  }
  CHECK(match == 4);
  CHECK(stab == 2 * (4 + 3));
  CHECK(b.pairs.size() == 18);
  // SG_MATCH rejected partners never match the target group
  for (const auto& p : b.pairs)
    if (p.tier == "SG_MATCH")
      for (size_t i = 0; i < 4; ++i)
        CHECK(p.rejected != v[i].text);
}

TEST_CASE("generation quality report counts and rates") {
  std::vector<Sample> v;
  v.push_back(make_sample(0, StabilityLabel::Stable, true, true));
  v.push_back(make_sample(1, StabilityLabel::Stable, false, true));
  v.push_back(make_sample(2, StabilityLabel::Stable, true, false));
  v.push_back(make_sample(3, StabilityLabel::Metastable, true, true));
  v.push_back(make_sample(4, StabilityLabel::Unstable, false, true));
  v.push_back(make_sample(5, std::nullopt));
  auto p = ptrs(v);
  SunReport r = sun_report(p);
  CHECK(r.n_total == 6);
  CHECK(r.n_ok == 5);
  CHECK(r.n_lexical == 1);
  CHECK(r.n_stable == 3);
  CHECK(r.n_metastable == 1);
  CHECK(r.n_unstable == 1);
  CHECK(r.n_sun == 1);  // only sample 0 is stable, unique, novel
  CHECK(r.sun_rate == Catch::Approx(100.0 / 6.0));
  CHECK(r.stability_rate == Catch::Approx(300.0 / 6.0));
  CHECK(r.frac_stable_novel == Catch::Approx(2.0 / 3.0));
  CHECK(r.frac_stable_unique == Catch::Approx(2.0 / 3.0));
  CHECK(r.warnings.empty());

  std::vector<Sample> none = {make_sample(0, std::nullopt)};
  SunReport empty = sun_report(ptrs(none));
  CHECK(empty.n_ok == 0);
  CHECK(empty.sun_rate == 0.0);
  REQUIRE(empty.warnings.size() == 1);
}

TEST_CASE("conditioned quality report uses the wider energy window") {
  std::vector<Sample> v;
  Sample a = make_sample(0, StabilityLabel::Unstable, true, true, 62);
  a.e_hull = 0.09;  // above the stability window but inside the wider one
  v.push_back(a);
  v.push_back(make_sample(1, StabilityLabel::Stable, true, true, 62));
  v.push_back(make_sample(2, StabilityLabel::Stable, true, true, 14));
  Sample d = make_sample(3, StabilityLabel::Unstable, true, true, 62);
  d.e_hull = 0.2;
  v.push_back(d);
  SsunReport r = ssun_report(ptrs(v), 62);
  CHECK(r.n_total == 4);
  CHECK(r.n_eligible == 3);
  CHECK(r.n_sg_match == 3);
  CHECK(r.n_ssun == 2);
  CHECK(r.ssun_rate == Catch::Approx(50.0));
}

TEST_CASE("report serialization is stable and ordered") {
  std::vector<Sample> v = {make_sample(0, StabilityLabel::Stable, true, true)};
  auto p = ptrs(v);
  ordered_json j = sun_report_json(sun_report(p));
  std::string s = j.dump();
  CHECK(s.find("\"n_total\"") < s.find("\"n_ok\""));
  CHECK(s.find("\"n_ok\"") < s.find("\"sun_rate\""));
  ordered_json j2 = sun_report_json(sun_report(p));
  CHECK(j.dump() == j2.dump());
}
