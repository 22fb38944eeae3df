// Text codec for the Wyckoff representation, the plain-coordinate baseline
// representation, and generation prompts.

#ifndef WYCK_CODEC_HPP_
#define WYCK_CODEC_HPP_

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "wyck/crystal.hpp"
#include "wyck/elements.hpp"
#include "wyck/symcore.hpp"

namespace wyck {

// block coordinates are printed with three decimals; orbit reconstruction
// must treat points within this distance as the same image
constexpr double kCoordQuantTol = 2e-3;

enum class ParseErrorKind { Lexical, Semantic };

struct ParseError : Error {
  ParseError(ParseErrorKind k, int line_no, const std::string& what)
      : Error("line " + std::to_string(line_no) + ": " + what),
        kind(k),
        line(line_no) {}
  ParseErrorKind kind;
  int line;
};

struct RecordSite {
  std::string element;
  Vec3 frac{};  // [0,1)
  int multiplicity = 0;
  char letter = 0;
};

struct WyckoffRecord {
  std::vector<std::pair<std::string, int>> formula;  // first-appearance order
  int spacegroup = 0;
  double a = 0, b = 0, c = 0;
  double alpha = 0, beta = 0, gamma = 0;
  int total_atoms = 0;
  std::vector<RecordSite> sites;
};

struct Prompt {
  bool conditioned = false;
  int spacegroup = 0;
  std::string text;
};

// ---------------------------------------------------------------------------
// Fixed-point formatting, round-half-away-from-zero on the decimal expansion.

namespace detail {

inline std::string format_fixed(double value, int decimals) {
  bool neg = std::signbit(value);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15f", std::fabs(value));
  std::string s = buf;
  size_t dot = s.find('.');
  std::string digits = s.substr(0, dot) + s.substr(dot + 1);
  size_t int_len = dot;
  size_t keep = int_len + static_cast<size_t>(decimals);
  bool round_up = keep < digits.size() && digits[keep] >= '5';
  digits.resize(keep, '0');
  if (round_up) {
    int i = static_cast<int>(digits.size()) - 1;
    for (; i >= 0; --i) {
      if (digits[i] == '9') {
        digits[i] = '0';
      } else {
        digits[i]++;
        break;
      }
    }
    if (i < 0) {
      digits.insert(digits.begin(), '1');
      ++int_len;
    }
  }
  bool all_zero = digits.find_first_not_of('0') == std::string::npos;
  std::string out;
  if (neg && !all_zero)
    out += '-';
  out += digits.substr(0, int_len);
  if (decimals > 0) {
    out += '.';
    out += digits.substr(int_len);
  }
  return out;
}

// coordinate field: canonical [0,1), three decimals, never "1.000"
inline std::string format_coord(double value) {
  std::string s = format_fixed(value, 3);
  if (s == "1.000" || s == "-0.000")
    return "0.000";
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Prompts.

inline Prompt render_prompt(bool conditioned, int spacegroup = 0) {
  static const std::string head = "Below is a description of a bulk material. ";
  static const std::string tail =
      "Generate a description of the lengths and angles of the lattice "
      "vectors and then the element type and coordinates for each atom within "
      "the lattice:";
  Prompt p;
  p.conditioned = conditioned;
  if (conditioned) {
    if (spacegroup < 1 || spacegroup > 230)
      throw Error("invalid space group number " + std::to_string(spacegroup));
    p.spacegroup = spacegroup;
    p.text = head + "The spacegroup number is " + std::to_string(spacegroup) +
             ". " + tail;
  } else {
    p.text = head + tail;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Encoder.

namespace detail {

struct EncodedSite {
  std::string element;
  Vec3 frac{};
  int multiplicity = 0;
  char letter = 0;
  std::array<std::string, 3> coord_str;
};

inline bool site_order_less(const EncodedSite& a, const EncodedSite& b) {
  double ea = electronegativity_key(element_number(a.element));
  double eb = electronegativity_key(element_number(b.element));
  if (ea != eb)
    return ea < eb;
  if (a.element != b.element)
    return a.element < b.element;
  if (a.multiplicity != b.multiplicity)
    return a.multiplicity > b.multiplicity;
  auto ra = letter_rank(a.letter), rb = letter_rank(b.letter);
  if (ra != rb)
    return ra < rb;
  return a.coord_str < b.coord_str;
}

inline std::string render_block(
    const std::vector<std::pair<std::string, int>>& formula,
    const std::string* hm_symbol, double a, double b, double c, double alpha,
    double beta, double gamma, int total_atoms,
    const std::vector<EncodedSite>& sites) {
  std::string out;
  for (const auto& [el, n] : formula) {
    out += el;
    out += std::to_string(n);
  }
  out += '\n';
  if (hm_symbol) {
    out += "Spacegroup: ";
    out += *hm_symbol;
    out += '\n';
  }
  out += "abc: " + format_fixed(a, 2) + ' ' + format_fixed(b, 2) + ' ' +
         format_fixed(c, 2) + '\n';
  out += "angles: " + format_fixed(alpha, 2) + ' ' + format_fixed(beta, 2) +
         ' ' + format_fixed(gamma, 2) + '\n';
  out += "Sites (" + std::to_string(total_atoms) + ")\n";
  for (const auto& s : sites) {
    out += s.element;
    out += ' ';
    out += s.coord_str[0];
    out += ' ';
    out += s.coord_str[1];
    out += ' ';
    out += s.coord_str[2];
    if (hm_symbol) {
      out += ' ';
      out += std::to_string(s.multiplicity);
      out += s.letter;
    }
    out += '\n';
  }
  return out;
}

inline std::vector<std::pair<std::string, int>> formula_of(
    const std::vector<EncodedSite>& sites, bool use_multiplicity) {
  std::vector<std::pair<std::string, int>> formula;
  for (const auto& s : sites) {
    int add = use_multiplicity ? s.multiplicity : 1;
    bool found = false;
    for (auto& [el, n] : formula)
      if (el == s.element) {
        n += add;
        found = true;
        break;
      }
    if (!found)
      formula.emplace_back(s.element, add);
  }
  return formula;
}

}  // namespace detail

// Encodes a crystal as a Wyckoff text block. The printed representative of
// each orbit is its first atom in input order, expressed in the standard
// setting of the detected group.
inline std::string encode_wyckoff(const Crystal& crystal,
                                  const SpaceGroupTable& table,
                                  double sym_tol = kDefaultSymTol) {
  if (crystal.sites.empty())
    throw Error("cannot encode an empty crystal");
  for (const auto& s : crystal.sites)
    if (element_number(s.element) == 0)
      throw Error("unknown element symbol: " + s.element);
  Detection det = detect_with_origin(table, crystal, sym_tol);
  const SpaceGroup& group = table.group(det.number);

  size_t n = crystal.sites.size();
  std::vector<Vec3> std_pos(n);
  for (size_t i = 0; i < n; ++i)
    std_pos[i] = reduce_mod1(crystal.sites[i].frac - det.origin_shift);

  std::vector<char> assigned(n, 0);
  std::vector<detail::EncodedSite> sites;
  for (size_t i = 0; i < n; ++i) {
    if (assigned[i])
      continue;
    // positions may sit near-special (from rounded input); merge images at
    // half the symmetry tolerance so the orbit keeps its true multiplicity
    std::vector<Vec3> orbit =
        expand_orbit(group, std_pos[i], std::max(kEpsOrbit, 0.5 * sym_tol));
    size_t matched = 0;
    for (size_t j = i; j < n; ++j) {
      if (assigned[j] || crystal.sites[j].element != crystal.sites[i].element)
        continue;
      for (const auto& p : orbit)
        if (frac_dist_inf(std_pos[j], p) <= sym_tol) {
          assigned[j] = 1;
          ++matched;
          break;
        }
    }
    if (matched != orbit.size())
      throw Error("atoms are not closed under the detected space group");
    WyckoffAssignment wy = assign_wyckoff(group, orbit, sym_tol);
    detail::EncodedSite es;
    es.element = crystal.sites[i].element;
    es.frac = std_pos[i];
    es.multiplicity = wy.multiplicity;
    es.letter = wy.letter;
    for (int k = 0; k < 3; ++k)
      es.coord_str[k] = detail::format_coord(std_pos[i][k]);
    sites.push_back(std::move(es));
  }
  std::stable_sort(sites.begin(), sites.end(), detail::site_order_less);
  auto formula = detail::formula_of(sites, true);
  return detail::render_block(formula, &group.hm_symbol, crystal.a, crystal.b,
                              crystal.c, crystal.alpha, crystal.beta,
                              crystal.gamma, static_cast<int>(n), sites);
}

// Plain-coordinate baseline block: every atom listed, no group, no labels.
inline std::string encode_coords(const Crystal& crystal) {
  if (crystal.sites.empty())
    throw Error("cannot encode an empty crystal");
  for (const auto& s : crystal.sites)
    if (element_number(s.element) == 0)
      throw Error("unknown element symbol: " + s.element);
  std::vector<detail::EncodedSite> sites;
  for (const auto& s : crystal.sites) {
    detail::EncodedSite es;
    es.element = s.element;
    es.frac = reduce_mod1(s.frac);
    for (int k = 0; k < 3; ++k)
      es.coord_str[k] = detail::format_coord(es.frac[k]);
    sites.push_back(std::move(es));
  }
  auto formula = detail::formula_of(sites, false);
  return detail::render_block(formula, nullptr, crystal.a, crystal.b, crystal.c,
                              crystal.alpha, crystal.beta, crystal.gamma,
                              static_cast<int>(sites.size()), sites);
}

// ---------------------------------------------------------------------------
// Parser.

namespace detail {

inline std::vector<std::string> split_block_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty())
    lines.push_back(cur);
  return lines;
}

// strict decimal token: [-]digits[.digits]
inline bool parse_decimal(const std::string& tok, double& out) {
  if (tok.empty())
    return false;
  size_t i = 0;
  if (tok[i] == '-')
    ++i;
  size_t int_digits = 0;
  while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) {
    ++i;
    ++int_digits;
  }
  if (int_digits == 0)
    return false;
  if (i < tok.size()) {
    if (tok[i] != '.')
      return false;
    ++i;
    size_t frac_digits = 0;
    while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) {
      ++i;
      ++frac_digits;
    }
    if (frac_digits == 0 || i != tok.size())
      return false;
  }
  out = std::stod(tok);
  return true;
}

// single-space separated fields, no leading/trailing blanks
inline std::vector<std::string> split_fields(const std::string& line,
                                             int line_no) {
  if (!line.empty() && (line.front() == ' ' || line.back() == ' '))
    throw ParseError(ParseErrorKind::Lexical, line_no,
                     "stray whitespace around line");
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ' ') {
      if (cur.empty())
        throw ParseError(ParseErrorKind::Lexical, line_no,
                         "multiple spaces between fields");
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty())
    fields.push_back(cur);
  return fields;
}

inline std::vector<std::pair<std::string, int>> parse_formula_line(
    const std::string& line, int line_no) {
  std::vector<std::pair<std::string, int>> formula;
  size_t i = 0;
  while (i < line.size()) {
    if (!std::isupper(static_cast<unsigned char>(line[i])))
      throw ParseError(ParseErrorKind::Lexical, line_no,
                       "malformed formula token");
    std::string el(1, line[i++]);
    if (i < line.size() && std::islower(static_cast<unsigned char>(line[i])))
      el += line[i++];
    size_t digit_start = i;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i])))
      ++i;
    if (i == digit_start)
      throw ParseError(ParseErrorKind::Lexical, line_no,
                       "formula count missing for " + el);
    int count = std::stoi(line.substr(digit_start, i - digit_start));
    if (count == 0)
      throw ParseError(ParseErrorKind::Semantic, line_no,
                       "zero count in formula");
    if (element_number(el) == 0)
      throw ParseError(ParseErrorKind::Lexical, line_no,
                       "unknown element symbol: " + el);
    for (const auto& [e, c] : formula)
      if (e == el)
        throw ParseError(ParseErrorKind::Semantic, line_no,
                         "repeated element in formula: " + el);
    formula.emplace_back(el, count);
  }
  if (formula.empty())
    throw ParseError(ParseErrorKind::Lexical, line_no, "empty formula line");
  return formula;
}

inline Vec3 parse_triplet_line(const std::vector<std::string>& fields,
                               size_t offset, int line_no) {
  Vec3 v{};
  for (int k = 0; k < 3; ++k) {
    if (!parse_decimal(fields[offset + k], v[k]))
      throw ParseError(ParseErrorKind::Lexical, line_no,
                       "malformed number: " + fields[offset + k]);
  }
  return v;
}

struct ParsedHeader {
  std::vector<std::pair<std::string, int>> formula;
  double a = 0, b = 0, c = 0, alpha = 0, beta = 0, gamma = 0;
  int total_atoms = 0;
};

// lines: formula / [Spacegroup] / abc / angles / Sites (N); returns the index
// of the first site line
inline size_t parse_header(const std::vector<std::string>& lines,
                           bool expect_group, std::string* hm_symbol,
                           ParsedHeader& hdr) {
  size_t need = expect_group ? 5 : 4;
  if (lines.size() < need)
    throw ParseError(ParseErrorKind::Lexical,
                     static_cast<int>(lines.size()) + 1,
                     "unexpected end of block");
  size_t ln = 0;
  hdr.formula = parse_formula_line(lines[ln], 1);
  ++ln;
  if (expect_group) {
    const std::string prefix = "Spacegroup: ";
    if (lines[ln].rfind(prefix, 0) != 0)
      throw ParseError(ParseErrorKind::Lexical, static_cast<int>(ln) + 1,
                       "expected 'Spacegroup: <symbol>'");
    *hm_symbol = lines[ln].substr(prefix.size());
    if (hm_symbol->empty() || hm_symbol->find(' ') != std::string::npos)
      throw ParseError(ParseErrorKind::Lexical, static_cast<int>(ln) + 1,
                       "malformed space group symbol");
    ++ln;
  }
  {
    auto fields = split_fields(lines[ln], static_cast<int>(ln) + 1);
    if (fields.size() != 4 || fields[0] != "abc:")
      throw ParseError(ParseErrorKind::Lexical, static_cast<int>(ln) + 1,
                       "expected 'abc: <a> <b> <c>'");
    Vec3 v = parse_triplet_line(fields, 1, static_cast<int>(ln) + 1);
    hdr.a = v[0];
    hdr.b = v[1];
    hdr.c = v[2];
    if (hdr.a <= 0 || hdr.b <= 0 || hdr.c <= 0)
      throw ParseError(ParseErrorKind::Semantic, static_cast<int>(ln) + 1,
                       "lattice lengths must be positive");
    ++ln;
  }
  {
    auto fields = split_fields(lines[ln], static_cast<int>(ln) + 1);
    if (fields.size() != 4 || fields[0] != "angles:")
      throw ParseError(ParseErrorKind::Lexical, static_cast<int>(ln) + 1,
                       "expected 'angles: <alpha> <beta> <gamma>'");
    Vec3 v = parse_triplet_line(fields, 1, static_cast<int>(ln) + 1);
    hdr.alpha = v[0];
    hdr.beta = v[1];
    hdr.gamma = v[2];
    for (double ang : {hdr.alpha, hdr.beta, hdr.gamma})
      if (!(ang > 0 && ang < 180))
        throw ParseError(ParseErrorKind::Semantic, static_cast<int>(ln) + 1,
                         "angles must lie in (0, 180)");
    ++ln;
  }
  {
    const std::string& l = lines[ln];
    if (l.rfind("Sites (", 0) != 0 || l.back() != ')')
      throw ParseError(ParseErrorKind::Lexical, static_cast<int>(ln) + 1,
                       "expected 'Sites (<count>)'");
    std::string num = l.substr(7, l.size() - 8);
    if (num.empty() ||
        num.find_first_not_of("0123456789") != std::string::npos)
      throw ParseError(ParseErrorKind::Lexical, static_cast<int>(ln) + 1,
                       "malformed site count");
    hdr.total_atoms = std::stoi(num);
    ++ln;
  }
  return ln;
}

inline void check_formula_consistency(
    const std::vector<std::pair<std::string, int>>& formula,
    const std::vector<std::pair<std::string, int>>& actual, int declared_total,
    int actual_total) {
  if (declared_total != actual_total)
    throw ParseError(ParseErrorKind::Semantic, 1,
                     "Sites count does not match the listed sites");
  for (const auto& [el, n] : actual) {
    bool ok = false;
    for (const auto& [fe, fn] : formula)
      if (fe == el && fn == n)
        ok = true;
    if (!ok)
      throw ParseError(ParseErrorKind::Semantic, 1,
                       "formula does not match site multiplicities for " + el);
  }
  if (formula.size() != actual.size())
    throw ParseError(ParseErrorKind::Semantic, 1,
                     "formula does not match the site element set");
}

inline void check_coord_range(const Vec3& v, int line_no) {
  for (double x : v)
    if (x < 0.0 || x >= 1.0)
      throw ParseError(ParseErrorKind::Semantic, line_no,
                       "coordinate outside [0, 1)");
}

}  // namespace detail

inline WyckoffRecord parse_wyckoff(const std::string& text,
                                   const SpaceGroupTable& table) {
  auto lines = detail::split_block_lines(text);
  if (lines.empty())
    throw ParseError(ParseErrorKind::Lexical, 1, "empty block");
  for (size_t i = 0; i < lines.size(); ++i)
    if (lines[i].empty())
      throw ParseError(ParseErrorKind::Lexical, static_cast<int>(i) + 1,
                       "unexpected blank line");
  WyckoffRecord rec;
  std::string hm;
  detail::ParsedHeader hdr;
  size_t first_site = detail::parse_header(lines, true, &hm, hdr);
  if (!table.has_symbol(hm))
    throw ParseError(ParseErrorKind::Lexical, 2,
                     "unknown space group symbol: " + hm);
  rec.spacegroup = table.symbol_to_number(hm);
  rec.formula = hdr.formula;
  rec.a = hdr.a;
  rec.b = hdr.b;
  rec.c = hdr.c;
  rec.alpha = hdr.alpha;
  rec.beta = hdr.beta;
  rec.gamma = hdr.gamma;
  rec.total_atoms = hdr.total_atoms;
  const SpaceGroup& group = table.group(rec.spacegroup);

  if (first_site == lines.size())
    throw ParseError(ParseErrorKind::Lexical,
                     static_cast<int>(lines.size()) + 1, "no site lines");
  for (size_t i = first_site; i < lines.size(); ++i) {
    int line_no = static_cast<int>(i) + 1;
    auto fields = detail::split_fields(lines[i], line_no);
    if (fields.size() != 5)
      throw ParseError(ParseErrorKind::Lexical, line_no,
                       "expected '<El> <x> <y> <z> <mult><letter>'");
    RecordSite site;
    site.element = fields[0];
    if (element_number(site.element) == 0)
      throw ParseError(ParseErrorKind::Lexical, line_no,
                       "unknown element symbol: " + site.element);
    site.frac = detail::parse_triplet_line(fields, 1, line_no);
    detail::check_coord_range(site.frac, line_no);
    const std::string& label = fields[4];
    size_t d = 0;
    while (d < label.size() &&
           std::isdigit(static_cast<unsigned char>(label[d])))
      ++d;
    if (d == 0 || d + 1 != label.size() ||
        !std::isalpha(static_cast<unsigned char>(label[d])))
      throw ParseError(ParseErrorKind::Lexical, line_no,
                       "malformed Wyckoff label: " + label);
    site.multiplicity = std::stoi(label.substr(0, d));
    site.letter = label[d];
    if (!group.find_position(site.multiplicity, site.letter))
      throw ParseError(ParseErrorKind::Semantic, line_no,
                       "label " + label + " does not exist in " + hm);
    rec.sites.push_back(std::move(site));
  }

  int mult_sum = 0;
  for (const auto& s : rec.sites)
    mult_sum += s.multiplicity;
  std::vector<detail::EncodedSite> tmp;
  for (const auto& s : rec.sites) {
    detail::EncodedSite es;
    es.element = s.element;
    es.multiplicity = s.multiplicity;
    tmp.push_back(es);
  }
  detail::check_formula_consistency(rec.formula, detail::formula_of(tmp, true),
                                    rec.total_atoms, mult_sum);
  return rec;
}

inline Crystal parse_coords(const std::string& text) {
  auto lines = detail::split_block_lines(text);
  if (lines.empty())
    throw ParseError(ParseErrorKind::Lexical, 1, "empty block");
  for (size_t i = 0; i < lines.size(); ++i)
    if (lines[i].empty())
      throw ParseError(ParseErrorKind::Lexical, static_cast<int>(i) + 1,
                       "unexpected blank line");
  detail::ParsedHeader hdr;
  size_t first_site = detail::parse_header(lines, false, nullptr, hdr);
  Crystal c;
  c.a = hdr.a;
  c.b = hdr.b;
  c.c = hdr.c;
  c.alpha = hdr.alpha;
  c.beta = hdr.beta;
  c.gamma = hdr.gamma;
  if (first_site == lines.size())
    throw ParseError(ParseErrorKind::Lexical,
                     static_cast<int>(lines.size()) + 1, "no site lines");
  for (size_t i = first_site; i < lines.size(); ++i) {
    int line_no = static_cast<int>(i) + 1;
    auto fields = detail::split_fields(lines[i], line_no);
    if (fields.size() != 4)
      throw ParseError(ParseErrorKind::Lexical, line_no,
                       "expected '<El> <x> <y> <z>'");
    Site site;
    site.element = fields[0];
    if (element_number(site.element) == 0)
      throw ParseError(ParseErrorKind::Lexical, line_no,
                       "unknown element symbol: " + site.element);
    site.frac = detail::parse_triplet_line(fields, 1, line_no);
    detail::check_coord_range(site.frac, line_no);
    c.sites.push_back(std::move(site));
  }
  std::vector<detail::EncodedSite> tmp;
  for (const auto& s : c.sites) {
    detail::EncodedSite es;
    es.element = s.element;
    tmp.push_back(es);
  }
  detail::check_formula_consistency(hdr.formula, detail::formula_of(tmp, false),
                                    hdr.total_atoms,
                                    static_cast<int>(c.sites.size()));
  c.lattice();  // validates the metric
  return c;
}

// Expands every site orbit and concatenates them in record order. The stored
// representative leads its orbit, so encode(reconstruct(r)) is stable.
inline Crystal reconstruct(const WyckoffRecord& record,
                           const SpaceGroupTable& table) {
  const SpaceGroup& group = table.group(record.spacegroup);
  Crystal c;
  c.a = record.a;
  c.b = record.b;
  c.c = record.c;
  c.alpha = record.alpha;
  c.beta = record.beta;
  c.gamma = record.gamma;
  c.lattice();
  for (const auto& site : record.sites) {
    // stored coordinates carry up to 5e-4 of rounding per component, and a
    // symmetry image of a rounded point can drift by twice that; merge orbit
    // images within the quantization width so special positions such as 1/3
    // keep their multiplicity
    std::vector<Vec3> orbit = expand_orbit(group, site.frac, kCoordQuantTol);
    if (static_cast<int>(orbit.size()) != site.multiplicity)
      throw Error("orbit of " + site.element + " at " +
                  std::to_string(site.frac[0]) + "," +
                  std::to_string(site.frac[1]) + "," +
                  std::to_string(site.frac[2]) + " has size " +
                  std::to_string(orbit.size()) + ", label declares " +
                  std::to_string(site.multiplicity));
    for (const auto& p : orbit)
      c.sites.push_back({site.element, p});
  }
  return c;
}

}  // namespace wyck

#endif
