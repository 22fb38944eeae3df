// Composition parsing, convex-hull energies (LP over entries), stability
// classification, charge-neutrality screening, and agreement statistics.

#ifndef WYCK_THERMO_HPP_
#define WYCK_THERMO_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "wyck/elements.hpp"
#include "wyck/symcore.hpp"

namespace wyck {

using Composition = std::map<std::string, std::int64_t>;

inline Composition parse_formula(const std::string& text) {
  Composition comp;
  size_t i = 0;
  while (i < text.size()) {
    if (!std::isupper(static_cast<unsigned char>(text[i])))
      throw Error("malformed formula: " + text);
    std::string el(1, text[i++]);
    if (i < text.size() && std::islower(static_cast<unsigned char>(text[i])))
      el += text[i++];
    if (element_number(el) == 0)
      throw Error("unknown element symbol: " + el);
    size_t start = i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
      ++i;
    std::int64_t count = 1;  // absent count means 1
    if (i > start)
      count = std::stoll(text.substr(start, i - start));
    if (count == 0)
      throw Error("zero count in formula: " + text);
    comp[el] += count;
  }
  if (comp.empty())
    throw Error("empty formula");
  return comp;
}

inline std::int64_t total_atoms(const Composition& comp) {
  std::int64_t n = 0;
  for (const auto& [el, c] : comp)
    n += c;
  return n;
}

inline Composition reduced_composition(const Composition& comp) {
  std::int64_t g = 0;
  for (const auto& [el, c] : comp)
    g = std::gcd(g, c);
  Composition r;
  for (const auto& [el, c] : comp)
    r[el] = c / g;
  return r;
}

struct HullEntry {
  Composition composition;
  double energy = 0;  // formation energy per atom, eV/atom

  HullEntry() = default;
  HullEntry(Composition c, double e) : composition(std::move(c)), energy(e) {
    if (!std::isfinite(e))
      throw Error("hull entry energy must be finite");
  }
};

// ---------------------------------------------------------------------------
// Dense two-phase simplex with Bland's rule: minimize c·x, Ax = b, x ≥ 0.

namespace detail {

constexpr double kLpEps = 1e-11;

inline bool simplex_min(std::vector<std::vector<double>> a,
                        std::vector<double> b, const std::vector<double>& cost,
                        double& value) {
  size_t d = a.size();
  size_t m = d == 0 ? 0 : a[0].size();
  for (size_t i = 0; i < d; ++i)
    if (b[i] < 0) {
      b[i] = -b[i];
      for (auto& v : a[i])
        v = -v;
    }
  // tableau columns: m original + d artificial; basis starts artificial
  size_t total = m + d;
  std::vector<std::vector<double>> t(d, std::vector<double>(total + 1, 0));
  std::vector<size_t> basis(d);
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < m; ++j)
      t[i][j] = a[i][j];
    t[i][m + i] = 1;
    t[i][total] = b[i];
    basis[i] = m + i;
  }

  auto pivot = [&](size_t row, size_t col) {
    double p = t[row][col];
    for (auto& v : t[row])
      v /= p;
    for (size_t i = 0; i < d; ++i) {
      if (i == row)
        continue;
      double f = t[i][col];
      if (f == 0)
        continue;
      for (size_t j = 0; j <= total; ++j)
        t[i][j] -= f * t[row][j];
    }
    basis[row] = col;
  };

  auto optimize = [&](const std::vector<double>& c, size_t allowed) -> double {
    while (true) {
      // Bland: entering column = smallest index with negative reduced cost
      size_t enter = total;
      for (size_t j = 0; j < allowed; ++j) {
        double rc = c[j];
        for (size_t i = 0; i < d; ++i)
          rc -= c[basis[i]] * t[i][j];
        if (rc < -kLpEps) {
          enter = j;
          break;
        }
      }
      if (enter == total)
        break;
      size_t leave = d;
      double best_ratio = 0;
      for (size_t i = 0; i < d; ++i) {
        if (t[i][enter] <= kLpEps)
          continue;
        double ratio = t[i][total] / t[i][enter];
        if (leave == d || ratio < best_ratio - kLpEps ||
            (std::fabs(ratio - best_ratio) <= kLpEps &&
             basis[i] < basis[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
      if (leave == d)
        return -1e300;  // unbounded; cannot happen on the standard simplex
      pivot(leave, enter);
    }
    double v = 0;
    for (size_t i = 0; i < d; ++i)
      v += c[basis[i]] * t[i][total];
    return v;
  };

  std::vector<double> phase1(total + 1, 0);
  for (size_t j = m; j < total; ++j)
    phase1[j] = 1;
  if (optimize(phase1, total) > 1e-9)
    return false;  // infeasible
  std::vector<double> phase2(total + 1, 0);
  for (size_t j = 0; j < m; ++j)
    phase2[j] = cost[j];
  value = optimize(phase2, m);  // artificials barred from re-entering
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hull.

class Hull {
 public:
  // Elemental endpoints are auto-added at 0.0 eV/atom for every element of
  // the set lacking an elemental entry.
  Hull(std::vector<HullEntry> entries, const std::set<std::string>& elements)
      : elements_(elements.begin(), elements.end()) {
    for (const auto& e : entries)
      for (const auto& [el, c] : e.composition)
        if (!elements.count(el))
          throw Error("hull entry element " + el +
                      " is outside the declared element set");
    std::set<std::string> have_endpoint;
    for (const auto& e : entries)
      if (e.composition.size() == 1)
        have_endpoint.insert(e.composition.begin()->first);
    for (const auto& el : elements_)
      if (!have_endpoint.count(el))
        entries.emplace_back(Composition{{el, 1}}, 0.0);
    entries_ = std::move(entries);
    for (const auto& e : entries_)
      frac_.push_back(fractions(e.composition));
  }

  double hull_energy(const Composition& query) const {
    std::vector<double> b = fractions(query);
    size_t d = elements_.size(), m = entries_.size();
    std::vector<std::vector<double>> a(d, std::vector<double>(m));
    std::vector<double> cost(m);
    for (size_t j = 0; j < m; ++j) {
      cost[j] = entries_[j].energy;
      for (size_t i = 0; i < d; ++i)
        a[i][j] = frac_[j][i];
    }
    double value = 0;
    if (!detail::simplex_min(a, b, cost, value))
      throw Error("hull query is infeasible");
    return value;
  }

  const std::vector<HullEntry>& entries() const { return entries_; }
  const std::vector<std::string>& elements() const { return elements_; }

 private:
  std::vector<double> fractions(const Composition& comp) const {
    std::vector<double> f(elements_.size(), 0.0);
    double n = static_cast<double>(total_atoms(comp));
    for (const auto& [el, c] : comp) {
      auto it = std::lower_bound(elements_.begin(), elements_.end(), el);
      if (it == elements_.end() || *it != el)
        throw Error("composition element " + el +
                    " is outside the hull element set");
      f[static_cast<size_t>(it - elements_.begin())] =
          static_cast<double>(c) / n;
    }
    return f;
  }

  std::vector<std::string> elements_;  // sorted
  std::vector<HullEntry> entries_;
  std::vector<std::vector<double>> frac_;
};

inline Hull build_hull(std::vector<HullEntry> entries,
                       const std::set<std::string>& elements) {
  return Hull(std::move(entries), elements);
}

inline double energy_above_hull(const HullEntry& entry, const Hull& hull) {
  return entry.energy - hull.hull_energy(entry.composition);
}

// ---------------------------------------------------------------------------
// Stability labels.

enum class StabilityLabel { Stable, Metastable, Unstable };

inline StabilityLabel classify_stability(double e_hull, double t_stable = 0.0,
                                         double t_meta = 0.08) {
  if (!std::isfinite(e_hull))
    throw Error("e_hull must be finite");
  if (e_hull <= t_stable)
    return StabilityLabel::Stable;
  if (e_hull <= t_meta)
    return StabilityLabel::Metastable;
  return StabilityLabel::Unstable;
}

inline const char* label_name(StabilityLabel label) {
  switch (label) {
    case StabilityLabel::Stable:
      return "stable";
    case StabilityLabel::Metastable:
      return "metastable";
    default:
      return "unstable";
  }
}

// ---------------------------------------------------------------------------
// Charge neutrality.

using OxidationTable = std::map<std::string, std::vector<int>>;

// true iff one oxidation state per element can balance the total charge
inline bool compositional_validity(const Composition& comp,
                                   const OxidationTable& table,
                                   bool strict = true) {
  if (comp.empty())
    throw Error("empty composition");
  if (comp.size() == 1)
    return true;  // elemental, state 0
  std::int64_t reach = 0;
  for (const auto& [el, c] : comp) {
    auto it = table.find(el);
    if (it == table.end() || it->second.empty())
      return !strict;
    int mx = 0;
    for (int s : it->second)
      mx = std::max(mx, std::abs(s));
    reach += c * mx;
  }
  // reachable-sum DP over elements, offset by `reach`
  std::vector<char> can(static_cast<size_t>(2 * reach + 1), 0);
  can[static_cast<size_t>(reach)] = 1;
  for (const auto& [el, c] : comp) {
    const auto& states = table.at(el);
    std::vector<char> next(can.size(), 0);
    for (size_t i = 0; i < can.size(); ++i) {
      if (!can[i])
        continue;
      for (int s : states) {
        std::int64_t j = static_cast<std::int64_t>(i) + c * s;
        if (j >= 0 && j < static_cast<std::int64_t>(next.size()))
          next[static_cast<size_t>(j)] = 1;
      }
    }
    can.swap(next);
  }
  return can[static_cast<size_t>(reach)] != 0;
}

// ---------------------------------------------------------------------------
// Agreement statistics. Positive class: e_hull ≤ cutoff.

struct AgreementStats {
  double precision = 0, recall = 0, f1 = 0, accuracy = 0;
  // set when the corresponding denominator was zero (value reported as 0)
  bool precision_flagged = false, recall_flagged = false, f1_flagged = false,
       accuracy_flagged = false;
};

inline AgreementStats agreement_stats(const std::vector<double>& pred_ehull,
                                      const std::vector<double>& ref_ehull,
                                      double cutoff) {
  if (pred_ehull.size() != ref_ehull.size())
    throw Error("agreement_stats inputs differ in length");
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (size_t i = 0; i < pred_ehull.size(); ++i) {
    bool p = pred_ehull[i] <= cutoff;
    bool r = ref_ehull[i] <= cutoff;
    if (p && r)
      ++tp;
    else if (p && !r)
      ++fp;
    else if (!p && r)
      ++fn;
    else
      ++tn;
  }
  AgreementStats s;
  if (tp + fp > 0)
    s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  else
    s.precision_flagged = true;
  if (tp + fn > 0)
    s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  else
    s.recall_flagged = true;
  if (s.precision + s.recall > 0)
    s.f1 = 2 * s.precision * s.recall / (s.precision + s.recall);
  else
    s.f1_flagged = true;
  std::int64_t n = tp + fp + fn + tn;
  if (n > 0)
    s.accuracy = static_cast<double>(tp + tn) / static_cast<double>(n);
  else
    s.accuracy_flagged = true;
  return s;
}

// ---------------------------------------------------------------------------
// Data files.

// `El: s1 s2 ...` lines; '#' comments and blank lines ignored
inline OxidationTable parse_oxidation_table(const std::string& content) {
  OxidationTable table;
  size_t pos = 0;
  int line_no = 0;
  while (pos < content.size()) {
    size_t end = content.find('\n', pos);
    if (end == std::string::npos)
      end = content.size();
    std::string line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty() || line[0] == '#')
      continue;
    size_t colon = line.find(':');
    if (colon == std::string::npos)
      throw Error("oxidation table line " + std::to_string(line_no) +
                  ": missing ':'");
    std::string el = line.substr(0, colon);
    if (element_number(el) == 0)
      throw Error("oxidation table line " + std::to_string(line_no) +
                  ": unknown element " + el);
    std::vector<int> states;
    size_t i = colon + 1;
    while (i < line.size()) {
      while (i < line.size() && line[i] == ' ')
        ++i;
      size_t start = i;
      while (i < line.size() && line[i] != ' ')
        ++i;
      if (i > start) {
        std::string tok = line.substr(start, i - start);
        size_t digits = tok[0] == '-' ? 1 : 0;
        if (digits == tok.size() || tok.size() > 4 ||
            tok.find_first_not_of("0123456789", digits) != std::string::npos)
          throw Error("oxidation table line " + std::to_string(line_no) +
                      ": bad state '" + tok + "'");
        states.push_back(std::stoi(tok));
      }
    }
    table[el] = states;
  }
  return table;
}

}  // namespace wyck

#endif
