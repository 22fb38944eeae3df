// Preference-pair construction, DPO reference loss, sampling-temperature
// schedule, S.U.N. metrics, and round orchestration over external
// sampler/scorer commands speaking batched JSONL.

#ifndef WYCK_RLIP_HPP_
#define WYCK_RLIP_HPP_

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <thread>
#include <vector>

#include "json.hpp"
#include "wyck/codec.hpp"
#include "wyck/geometry.hpp"
#include "wyck/sha256.hpp"
#include "wyck/thermo.hpp"

namespace wyck {

using ordered_json = nlohmann::ordered_json;

constexpr double kSsunEhullMax = 0.1;  // eV/atom
constexpr double kDefaultDpoBeta = 0.1;

// ---------------------------------------------------------------------------
// DPO loss and temperature schedule.

struct LogProbPair {
  double logp_policy_chosen = 0;
  double logp_ref_chosen = 0;
  double logp_policy_rejected = 0;
  double logp_ref_rejected = 0;
};

inline double dpo_margin(const LogProbPair& p, double beta) {
  if (beta <= 0)
    throw Error("beta must be positive");
  for (double v : {p.logp_policy_chosen, p.logp_ref_chosen,
                   p.logp_policy_rejected, p.logp_ref_rejected})
    if (!std::isfinite(v))
      throw Error("log-probabilities must be finite");
  return beta * ((p.logp_policy_chosen - p.logp_ref_chosen) -
                 (p.logp_policy_rejected - p.logp_ref_rejected));
}

// −log σ(margin), evaluated as a stable softplus
inline double dpo_loss(const LogProbPair& p, double beta) {
  double m = dpo_margin(p, beta);
  if (m >= 0)
    return std::log1p(std::exp(-m));
  return -m + std::log1p(std::exp(m));
}

inline double temperature_at(int iteration, double base = 1.0,
                             double step = 0.05) {
  if (iteration < 0)
    throw Error("iteration must be non-negative");
  return base + iteration * step;
}

// ---------------------------------------------------------------------------
// Samples.

enum class SampleStatus { Ok, LexicalError, SemanticError };

struct Sample {
  size_t index = 0;  // position in the round's prompt list
  std::string prompt;
  int target_sg = 0;  // 0 = unconditional
  double temperature = 0;
  std::string text;
  int attempts = 0;
  SampleStatus status = SampleStatus::LexicalError;
  std::string error;

  std::optional<WyckoffRecord> record;
  std::optional<Crystal> crystal;
  bool structural_valid = false;
  bool compositional_valid = false;
  std::optional<int> detected_sg;
  std::optional<double> energy;  // scorer output, eV/atom
  std::optional<double> e_hull;
  std::optional<StabilityLabel> label;
  std::optional<size_t> unique_class;
  bool unique_rep = false;
  std::optional<bool> novel;
};

struct PreferencePair {
  std::string prompt;
  std::string chosen;
  std::string rejected;
  std::string tier;  // SM | SU | MU | NOV | SG_MATCH | SG_STAB
};

struct PairBuild {
  std::vector<PreferencePair> pairs;
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Pair builders. All draws are uniform without replacement with pool refill,
// so results are deterministic given the seed and sample order.

namespace detail {

class DrawPool {
 public:
  explicit DrawPool(std::vector<size_t> items) : items_(std::move(items)) {}
  bool empty() const { return items_.empty(); }
  size_t draw(std::mt19937_64& rng) {
    if (bag_.empty())
      bag_ = items_;
    std::uniform_int_distribution<size_t> pick(0, bag_.size() - 1);
    size_t k = pick(rng);
    size_t v = bag_[k];
    bag_[k] = bag_.back();
    bag_.pop_back();
    return v;
  }

 private:
  std::vector<size_t> items_;
  std::vector<size_t> bag_;
};

inline void warn_once(std::vector<std::string>& warnings, bool& flag,
                      const std::string& msg) {
  if (!flag) {
    warnings.push_back(msg);
    flag = true;
  }
}

}  // namespace detail

inline PairBuild tiered_pairs(const std::vector<const Sample*>& samples,
                              std::uint64_t seed, bool non_tiered = false) {
  std::vector<size_t> meta, unstable;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i]->label)
      continue;
    if (*samples[i]->label == StabilityLabel::Metastable)
      meta.push_back(i);
    else if (*samples[i]->label == StabilityLabel::Unstable)
      unstable.push_back(i);
  }
  std::mt19937_64 rng(seed);
  detail::DrawPool meta_pool(meta), unst_pool(unstable);
  PairBuild out;
  bool warned_sm = false, warned_unst = false;
  for (size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = *samples[i];
    if (!s.label)
      continue;
    bool stable = *s.label == StabilityLabel::Stable;
    bool metastable = *s.label == StabilityLabel::Metastable;
    if (non_tiered) {
      // ablation: accepted (stable or metastable) vs unstable, two partners
      if (!stable && !metastable)
        continue;
      if (unst_pool.empty()) {
        detail::warn_once(out.warnings, warned_unst,
                          "stability pairs skipped: no unstable samples");
        continue;
      }
      const char* tier = stable ? "SU" : "MU";
      for (int k = 0; k < 2; ++k)
        out.pairs.push_back({s.prompt, s.text,
                             samples[unst_pool.draw(rng)]->text, tier});
      continue;
    }
    if (stable) {
      if (meta_pool.empty())
        detail::warn_once(out.warnings, warned_sm,
                          "SM tier skipped: no metastable samples");
      else
        out.pairs.push_back(
            {s.prompt, s.text, samples[meta_pool.draw(rng)]->text, "SM"});
      if (unst_pool.empty())
        detail::warn_once(out.warnings, warned_unst,
                          "SU/MU tiers skipped: no unstable samples");
      else
        for (int k = 0; k < 2; ++k)
          out.pairs.push_back(
              {s.prompt, s.text, samples[unst_pool.draw(rng)]->text, "SU"});
    } else if (metastable) {
      if (unst_pool.empty())
        detail::warn_once(out.warnings, warned_unst,
                          "SU/MU tiers skipped: no unstable samples");
      else
        for (int k = 0; k < 2; ++k)
          out.pairs.push_back(
              {s.prompt, s.text, samples[unst_pool.draw(rng)]->text, "MU"});
    }
  }
  return out;
}

inline PairBuild novelty_pairs(const std::vector<const Sample*>& samples,
                               std::uint64_t seed) {
  std::vector<size_t> not_novel;
  for (size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = *samples[i];
    if (s.label && *s.label == StabilityLabel::Stable && s.novel && !*s.novel)
      not_novel.push_back(i);
  }
  std::mt19937_64 rng(seed);
  detail::DrawPool pool(not_novel);
  PairBuild out;
  bool warned = false;
  for (size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = *samples[i];
    if (!(s.label && *s.label == StabilityLabel::Stable && s.novel && *s.novel))
      continue;
    if (pool.empty()) {
      detail::warn_once(out.warnings, warned,
                        "NOV tier skipped: no stable non-novel samples");
      continue;
    }
    out.pairs.push_back({s.prompt, s.text, samples[pool.draw(rng)]->text,
                         "NOV"});
  }
  return out;
}

inline PairBuild spacegroup_pairs(const std::vector<const Sample*>& samples,
                                  int target_sg, std::uint64_t seed) {
  auto acceptable = [](const Sample& s) {
    return s.label && *s.label != StabilityLabel::Unstable;  // e_hull ≤ 0.08
  };
  auto matching = [&](const Sample& s) {
    return s.detected_sg && *s.detected_sg == target_sg;
  };
  std::vector<size_t> nonmatching, unstable;
  for (size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = *samples[i];
    if (acceptable(s) && !matching(s))
      nonmatching.push_back(i);
    if (s.label && *s.label == StabilityLabel::Unstable)
      unstable.push_back(i);
  }
  std::mt19937_64 rng(seed);
  detail::DrawPool nm_pool(nonmatching), unst_pool(unstable);
  PairBuild out;
  bool warned_nm = false, warned_unst = false;
  for (size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = *samples[i];
    if (!acceptable(s))
      continue;
    if (matching(s)) {
      if (nm_pool.empty())
        detail::warn_once(
            out.warnings, warned_nm,
            "SG_MATCH tier skipped: no acceptable non-matching samples");
      else
        out.pairs.push_back(
            {s.prompt, s.text, samples[nm_pool.draw(rng)]->text, "SG_MATCH"});
    }
    if (unst_pool.empty())
      detail::warn_once(out.warnings, warned_unst,
                        "SG_STAB tier skipped: no unstable samples");
    else
      for (int k = 0; k < 2; ++k)
        out.pairs.push_back(
            {s.prompt, s.text, samples[unst_pool.draw(rng)]->text, "SG_STAB"});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports.

struct SunReport {
  size_t n_total = 0, n_ok = 0, n_lexical = 0, n_semantic = 0;
  size_t n_structural_valid = 0, n_compositional_valid = 0;
  size_t n_stable = 0, n_metastable = 0, n_unstable = 0;
  size_t n_unique = 0, n_novel = 0, n_sun = 0;
  double structural_validity_pct = 0, compositional_validity_pct = 0;
  double stability_rate = 0, sun_rate = 0;
  double frac_stable_novel = 0, frac_stable_unique = 0;
  std::vector<std::string> warnings;
};

inline SunReport sun_report(const std::vector<const Sample*>& samples) {
  SunReport r;
  r.n_total = samples.size();
  size_t stable_novel = 0, stable_unique = 0;
  for (const Sample* sp : samples) {
    const Sample& s = *sp;
    switch (s.status) {
      case SampleStatus::Ok:
        ++r.n_ok;
        break;
      case SampleStatus::LexicalError:
        ++r.n_lexical;
        break;
      case SampleStatus::SemanticError:
        ++r.n_semantic;
        break;
    }
    if (s.structural_valid)
      ++r.n_structural_valid;
    if (s.compositional_valid)
      ++r.n_compositional_valid;
    bool stable = s.label && *s.label == StabilityLabel::Stable;
    if (s.label) {
      switch (*s.label) {
        case StabilityLabel::Stable:
          ++r.n_stable;
          break;
        case StabilityLabel::Metastable:
          ++r.n_metastable;
          break;
        case StabilityLabel::Unstable:
          ++r.n_unstable;
          break;
      }
    }
    if (s.unique_rep)
      ++r.n_unique;
    if (s.novel && *s.novel)
      ++r.n_novel;
    if (stable && s.novel && *s.novel)
      ++stable_novel;
    if (stable && s.unique_rep)
      ++stable_unique;
    if (stable && s.unique_rep && s.novel && *s.novel)
      ++r.n_sun;
  }
  if (r.n_ok == 0) {
    r.warnings.push_back("no parsed samples; all rates reported as 0");
    return r;
  }
  double n = static_cast<double>(r.n_total);
  r.structural_validity_pct = 100.0 * r.n_structural_valid / n;
  r.compositional_validity_pct = 100.0 * r.n_compositional_valid / n;
  r.stability_rate = 100.0 * r.n_stable / n;
  r.sun_rate = 100.0 * r.n_sun / n;
  if (r.n_stable > 0) {
    r.frac_stable_novel = static_cast<double>(stable_novel) / r.n_stable;
    r.frac_stable_unique = static_cast<double>(stable_unique) / r.n_stable;
  }
  return r;
}

struct SsunReport {
  int target_sg = 0;
  size_t n_total = 0, n_eligible = 0, n_sg_match = 0, n_ssun = 0;
  double ssun_rate = 0;
  std::vector<std::string> warnings;
};

inline SsunReport ssun_report(const std::vector<const Sample*>& samples,
                              int target_sg) {
  SsunReport r;
  r.target_sg = target_sg;
  r.n_total = samples.size();
  size_t n_ok = 0;
  for (const Sample* sp : samples) {
    const Sample& s = *sp;
    if (s.status == SampleStatus::Ok)
      ++n_ok;
    bool eligible = s.e_hull && *s.e_hull <= kSsunEhullMax;
    bool match = s.detected_sg && *s.detected_sg == target_sg;
    if (eligible)
      ++r.n_eligible;
    if (match)
      ++r.n_sg_match;
    if (eligible && match && s.unique_rep && s.novel && *s.novel)
      ++r.n_ssun;
  }
  if (n_ok == 0) {
    r.warnings.push_back("no parsed samples; all rates reported as 0");
    return r;
  }
  r.ssun_rate = 100.0 * r.n_ssun / static_cast<double>(r.n_total);
  return r;
}

inline ordered_json sun_report_json(const SunReport& r) {
  ordered_json j;
  j["n_total"] = r.n_total;
  j["n_ok"] = r.n_ok;
  j["n_lexical_error"] = r.n_lexical;
  j["n_semantic_error"] = r.n_semantic;
  j["n_structural_valid"] = r.n_structural_valid;
  j["n_compositional_valid"] = r.n_compositional_valid;
  j["n_stable"] = r.n_stable;
  j["n_metastable"] = r.n_metastable;
  j["n_unstable"] = r.n_unstable;
  j["n_unique"] = r.n_unique;
  j["n_novel"] = r.n_novel;
  j["n_sun"] = r.n_sun;
  j["structural_validity_pct"] = r.structural_validity_pct;
  j["compositional_validity_pct"] = r.compositional_validity_pct;
  j["stability_rate"] = r.stability_rate;
  j["sun_rate"] = r.sun_rate;
  j["frac_stable_novel"] = r.frac_stable_novel;
  j["frac_stable_unique"] = r.frac_stable_unique;
  j["warnings"] = r.warnings;
  return j;
}

inline ordered_json ssun_report_json(const SsunReport& r) {
  ordered_json j;
  j["target_sg"] = r.target_sg;
  j["n_total"] = r.n_total;
  j["n_ehull_eligible"] = r.n_eligible;
  j["n_sg_match"] = r.n_sg_match;
  j["n_ssun"] = r.n_ssun;
  j["ssun_rate"] = r.ssun_rate;
  j["warnings"] = r.warnings;
  return j;
}

// ---------------------------------------------------------------------------
// Sample post-processing pipeline.

struct PipelineContext {
  const SpaceGroupTable* table = nullptr;
  const Hull* hull = nullptr;              // optional
  const OxidationTable* oxidation = nullptr;
  const NoveltyIndex* novelty = nullptr;   // optional
  MatchTolerances match_tol{};
  double sym_tol = kDefaultSymTol;
  bool strict_oxidation = true;
  int jobs = 1;
};

namespace detail {

// static results per index make the output independent of scheduling
template <class F>
inline void parallel_for(size_t n, int jobs, F&& body) {
  int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (workers == 1) {
    for (size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w)
    threads.emplace_back([&] {
      while (true) {
        size_t i = next.fetch_add(1);
        if (i >= n)
          break;
        body(i);
      }
    });
  for (auto& t : threads)
    t.join();
}

}  // namespace detail

// parse + reconstruct; failures set the status for the resample loop
inline void parse_sample(Sample& s, const SpaceGroupTable& table) {
  s.record.reset();
  s.crystal.reset();
  try {
    WyckoffRecord rec = parse_wyckoff(s.text, table);
    Crystal c = reconstruct(rec, table);
    s.record = std::move(rec);
    s.crystal = std::move(c);
    s.status = SampleStatus::Ok;
    s.error.clear();
  } catch (const ParseError& e) {
    s.status = e.kind == ParseErrorKind::Lexical ? SampleStatus::LexicalError
                                                 : SampleStatus::SemanticError;
    s.error = e.what();
  } catch (const Error& e) {  // reconstruction inconsistency
    s.status = SampleStatus::SemanticError;
    s.error = e.what();
  }
}

// validity, detection, novelty, hull classification, uniqueness
inline void finalize_samples(std::vector<Sample>& samples,
                             const PipelineContext& ctx) {
  detail::parallel_for(samples.size(), ctx.jobs, [&](size_t i) {
    Sample& s = samples[i];
    if (s.status != SampleStatus::Ok)
      return;
    try {
      s.structural_valid = structural_validity(*s.crystal);
      Composition comp;
      for (const auto& [el, n] : s.record->formula)
        comp[el] += n;
      s.compositional_valid =
          compositional_validity(comp, *ctx.oxidation, ctx.strict_oxidation);
      s.detected_sg = detect_spacegroup(*ctx.table, *s.crystal, ctx.sym_tol);
      if (ctx.novelty)
        s.novel = ctx.novelty->is_novel(*s.crystal, ctx.match_tol);
      if (ctx.hull && s.energy) {
        s.e_hull = *s.energy - ctx.hull->hull_energy(comp);
        s.label = classify_stability(*s.e_hull);
      }
    } catch (const Error& e) {
      s.error = e.what();
    }
  });
  // uniqueness: dedupe over all reconstructed crystals, ascending index
  std::vector<size_t> with_crystal;
  std::vector<Crystal> crystals;
  for (size_t i = 0; i < samples.size(); ++i)
    if (samples[i].status == SampleStatus::Ok && samples[i].crystal) {
      with_crystal.push_back(i);
      crystals.push_back(*samples[i].crystal);
    }
  auto classes = dedupe(crystals, ctx.match_tol);
  for (size_t c = 0; c < classes.size(); ++c)
    for (size_t k = 0; k < classes[c].size(); ++k) {
      Sample& s = samples[with_crystal[classes[c][k]]];
      s.unique_class = c;
      s.unique_rep = (k == 0);
    }
}

// ---------------------------------------------------------------------------
// File loaders (JSONL).

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw Error("cannot read file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw Error("cannot write file: " + path);
  f << content;
  if (!f)
    throw Error("short write: " + path);
}

inline std::vector<ordered_json> read_jsonl(const std::string& path) {
  std::string content = read_file(path);
  std::vector<ordered_json> out;
  std::istringstream in(content);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    try {
      out.push_back(ordered_json::parse(line));
    } catch (const std::exception& e) {
      throw Error(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline Hull load_reference_hull(const std::string& path) {
  std::vector<HullEntry> entries;
  std::set<std::string> elements;
  for (const auto& j : read_jsonl(path)) {
    if (!j.contains("formula") || !j.contains("energy_per_atom"))
      throw Error(path + ": hull lines need formula and energy_per_atom");
    Composition comp = parse_formula(j["formula"].get<std::string>());
    for (const auto& [el, c] : comp)
      elements.insert(el);
    entries.emplace_back(std::move(comp), j["energy_per_atom"].get<double>());
  }
  if (entries.empty())
    throw Error(path + ": empty hull file");
  return build_hull(std::move(entries), elements);
}

inline std::vector<Crystal> load_corpus(const std::string& path,
                                        const SpaceGroupTable& table) {
  std::vector<Crystal> out;
  size_t n = 0;
  for (const auto& j : read_jsonl(path)) {
    ++n;
    if (!j.contains("wyckoff_text"))
      throw Error(path + ": corpus lines need wyckoff_text");
    try {
      out.push_back(
          reconstruct(parse_wyckoff(j["wyckoff_text"].get<std::string>(), table),
                      table));
    } catch (const Error& e) {
      throw Error(path + " record " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Round configuration.

struct RoundConfig {
  std::string spacegroup_db;
  std::string oxidation_table;
  std::string hull_file;
  std::string novelty_corpus;  // optional
  std::string sampler_cmd;
  std::string scorer_cmd;
  std::string out_dir = "round_out";

  std::uint64_t seed = 0;
  int iteration = 0;
  double temp_base = 1.0;
  double temp_step = 0.05;
  int rmax = 5;
  bool non_tiered = false;
  int jobs = 1;

  size_t n_unconditional = 10000;
  size_t n_per_spacegroup = 1000;
  std::vector<int> conditioned_groups = {1, 15, 38, 119, 143, 194, 216};

  double sym_tol = kDefaultSymTol;
  MatchTolerances match_tol{};
  bool strict_oxidation = true;
};

// the semantic portion embedded in manifests; no paths, no worker counts
inline ordered_json config_snapshot(const RoundConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["iteration"] = cfg.iteration;
  j["temp_base"] = cfg.temp_base;
  j["temp_step"] = cfg.temp_step;
  j["rmax"] = cfg.rmax;
  j["non_tiered"] = cfg.non_tiered;
  j["n_unconditional"] = cfg.n_unconditional;
  j["n_per_spacegroup"] = cfg.n_per_spacegroup;
  j["conditioned_groups"] = cfg.conditioned_groups;
  j["sym_tol"] = cfg.sym_tol;
  j["ltol"] = cfg.match_tol.ltol;
  j["stol"] = cfg.match_tol.stol;
  j["angle_tol"] = cfg.match_tol.angle_tol;
  j["strict_oxidation"] = cfg.strict_oxidation;
  return j;
}

// ---------------------------------------------------------------------------
// Subprocess plumbing.

namespace detail {

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

// `cmd < request > response` through /bin/sh; returns the exit status
inline int run_plugin(const std::string& cmd, const std::string& request,
                      const std::string& response) {
  std::string full =
      cmd + " < " + shell_quote(request) + " > " + shell_quote(response);
  int rc = std::system(full.c_str());
  if (rc == -1)
    return -1;
  if (WIFEXITED(rc))
    return WEXITSTATUS(rc);
  return -2;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Round orchestration.

namespace detail {

struct TierCounter {
  std::map<std::string, size_t> counts;
  void add(const std::vector<PreferencePair>& pairs) {
    for (const auto& p : pairs)
      counts[p.tier]++;
  }
};

inline ordered_json sample_counts_json(const std::vector<Sample>& samples) {
  size_t ok = 0, lex = 0, sem = 0, stable = 0, meta = 0, unst = 0, uniq = 0,
         novel = 0, struct_ok = 0, comp_ok = 0;
  for (const auto& s : samples) {
    if (s.status == SampleStatus::Ok)
      ++ok;
    else if (s.status == SampleStatus::LexicalError)
      ++lex;
    else
      ++sem;
    if (s.label) {
      if (*s.label == StabilityLabel::Stable)
        ++stable;
      else if (*s.label == StabilityLabel::Metastable)
        ++meta;
      else
        ++unst;
    }
    if (s.unique_rep)
      ++uniq;
    if (s.novel && *s.novel)
      ++novel;
    if (s.structural_valid)
      ++struct_ok;
    if (s.compositional_valid)
      ++comp_ok;
  }
  ordered_json j;
  j["prompts"] = samples.size();
  j["ok"] = ok;
  j["lexical_error"] = lex;
  j["semantic_error"] = sem;
  j["resample_exhausted"] = lex + sem;
  j["structural_valid"] = struct_ok;
  j["compositional_valid"] = comp_ok;
  j["stable"] = stable;
  j["metastable"] = meta;
  j["unstable"] = unst;
  j["unique"] = uniq;
  j["novel"] = novel;
  return j;
}

}  // namespace detail

struct RoundResult {
  bool ok = false;
  ordered_json manifest;
};

// Runs one sampling round: prompt construction, sampler invocation with
// parse-failure resampling, scoring, labeling, pair construction, and the
// three output files (pairs.jsonl, metrics.json, manifest.json).
inline RoundResult run_round(const RoundConfig& cfg) {
  namespace fs = std::filesystem;
  SpaceGroupTable table = SpaceGroupTable::load(cfg.spacegroup_db);
  OxidationTable oxidation =
      parse_oxidation_table(read_file(cfg.oxidation_table));
  Hull hull = load_reference_hull(cfg.hull_file);
  std::optional<NoveltyIndex> novelty;
  if (!cfg.novelty_corpus.empty())
    novelty.emplace(load_corpus(cfg.novelty_corpus, table));

  fs::create_directories(cfg.out_dir);
  fs::create_directories(fs::path(cfg.out_dir) / "work");
  auto work_path = [&](const std::string& name) {
    return (fs::path(cfg.out_dir) / "work" / name).string();
  };
  auto out_path = [&](const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
  };

  double temp = temperature_at(cfg.iteration, cfg.temp_base, cfg.temp_step);
  std::vector<Sample> samples;
  for (size_t i = 0; i < cfg.n_unconditional; ++i) {
    Sample s;
    s.index = samples.size();
    s.prompt = render_prompt(false).text;
    s.temperature = temp;
    samples.push_back(std::move(s));
  }
  for (int g : cfg.conditioned_groups)
    for (size_t i = 0; i < cfg.n_per_spacegroup; ++i) {
      Sample s;
      s.index = samples.size();
      s.prompt = render_prompt(true, g).text;
      s.target_sg = g;
      s.temperature = temp;
      samples.push_back(std::move(s));
    }

  RoundResult result;
  auto abort_round = [&](const std::string& why) {
    ordered_json m;
    m["status"] = "aborted";
    m["error"] = why;
    m["iteration"] = cfg.iteration;
    m["temperature"] = temp;
    m["seed"] = cfg.seed;
    m["counts"] = detail::sample_counts_json(samples);
    m["config"] = config_snapshot(cfg);
    write_file(out_path("manifest.json"), m.dump(2) + "\n");
    result.ok = false;
    result.manifest = std::move(m);
    return result;
  };

  // sampler loop: initial request plus up to rmax re-requests per prompt
  std::vector<size_t> pending(samples.size());
  for (size_t i = 0; i < pending.size(); ++i)
    pending[i] = i;
  for (int attempt = 0; attempt <= cfg.rmax && !pending.empty(); ++attempt) {
    std::string req;
    for (size_t idx : pending) {
      ordered_json j;
      std::string id = std::to_string(idx);
      if (attempt > 0)
        id += "." + std::to_string(attempt);
      j["id"] = id;
      j["prompt"] = samples[idx].prompt;
      j["temperature"] = samples[idx].temperature;
      req += j.dump() + "\n";
    }
    std::string req_file = work_path("sampler_req_" +
                                     std::to_string(attempt) + ".jsonl");
    std::string resp_file = work_path("sampler_resp_" +
                                      std::to_string(attempt) + ".jsonl");
    write_file(req_file, req);
    int rc = detail::run_plugin(cfg.sampler_cmd, req_file, resp_file);
    if (rc != 0)
      return abort_round("sampler exited with status " + std::to_string(rc));
    std::map<std::string, std::string> responses;
    try {
      for (const auto& j : read_jsonl(resp_file)) {
        if (!j.contains("id") || !j.contains("text"))
          return abort_round("malformed sampler output: missing id/text");
        responses[j["id"].get<std::string>()] = j["text"].get<std::string>();
      }
    } catch (const Error& e) {
      return abort_round(std::string("malformed sampler output: ") + e.what());
    }
    for (size_t idx : pending) {
      std::string id = std::to_string(idx);
      if (attempt > 0)
        id += "." + std::to_string(attempt);
      auto it = responses.find(id);
      samples[idx].text = it == responses.end() ? std::string() : it->second;
      samples[idx].attempts = attempt + 1;
    }
    detail::parallel_for(pending.size(), cfg.jobs, [&](size_t k) {
      parse_sample(samples[pending[k]], table);
    });
    std::vector<size_t> still_failing;
    for (size_t idx : pending)
      if (samples[idx].status != SampleStatus::Ok)
        still_failing.push_back(idx);
    pending.swap(still_failing);
  }
  if (2 * pending.size() > samples.size())
    return abort_round("resampling exhausted for more than half the prompts");

  // scorer over parsed samples
  {
    std::string req;
    std::vector<size_t> scored;
    for (const auto& s : samples)
      if (s.status == SampleStatus::Ok) {
        ordered_json j;
        j["id"] = std::to_string(s.index);
        j["wyckoff_text"] = s.text;
        req += j.dump() + "\n";
        scored.push_back(s.index);
      }
    if (!scored.empty()) {
      std::string req_file = work_path("scorer_req.jsonl");
      std::string resp_file = work_path("scorer_resp.jsonl");
      write_file(req_file, req);
      int rc = detail::run_plugin(cfg.scorer_cmd, req_file, resp_file);
      if (rc != 0)
        return abort_round("scorer exited with status " + std::to_string(rc));
      std::map<std::string, double> energies;
      try {
        for (const auto& j : read_jsonl(resp_file)) {
          if (!j.contains("id") || !j.contains("energy_per_atom") ||
              !j["energy_per_atom"].is_number())
            return abort_round(
                "malformed scorer output: missing id/energy_per_atom");
          energies[j["id"].get<std::string>()] =
              j["energy_per_atom"].get<double>();
        }
      } catch (const Error& e) {
        return abort_round(std::string("malformed scorer output: ") + e.what());
      }
      for (size_t idx : scored) {
        auto it = energies.find(std::to_string(idx));
        if (it == energies.end())
          return abort_round("scorer output missing id " + std::to_string(idx));
        samples[idx].energy = it->second;
      }
    }
  }

  PipelineContext ctx;
  ctx.table = &table;
  ctx.hull = &hull;
  ctx.oxidation = &oxidation;
  ctx.novelty = novelty ? &*novelty : nullptr;
  ctx.match_tol = cfg.match_tol;
  ctx.sym_tol = cfg.sym_tol;
  ctx.strict_oxidation = cfg.strict_oxidation;
  ctx.jobs = cfg.jobs;
  finalize_samples(samples, ctx);

  // pair construction over sorted subsets
  std::vector<const Sample*> uncond;
  std::map<int, std::vector<const Sample*>> by_group;
  for (const auto& s : samples) {
    if (s.target_sg == 0)
      uncond.push_back(&s);
    else
      by_group[s.target_sg].push_back(&s);
  }
  std::vector<PreferencePair> all_pairs;
  std::vector<std::string> warnings;
  auto take = [&](PairBuild&& b) {
    for (auto& p : b.pairs)
      all_pairs.push_back(std::move(p));
    for (auto& w : b.warnings)
      warnings.push_back(std::move(w));
  };
  take(tiered_pairs(uncond, cfg.seed, cfg.non_tiered));
  take(novelty_pairs(uncond, cfg.seed + 1));
  for (size_t k = 0; k < cfg.conditioned_groups.size(); ++k) {
    int g = cfg.conditioned_groups[k];
    take(spacegroup_pairs(by_group[g], g, cfg.seed + 2 + k));
  }

  std::string pairs_content;
  detail::TierCounter tiers;
  tiers.add(all_pairs);
  for (const auto& p : all_pairs) {
    ordered_json j;
    j["prompt"] = p.prompt;
    j["chosen"] = p.chosen;
    j["rejected"] = p.rejected;
    j["tier"] = p.tier;
    pairs_content += j.dump() + "\n";
  }
  write_file(out_path("pairs.jsonl"), pairs_content);

  ordered_json metrics;
  metrics["sun"] = sun_report_json(sun_report(uncond));
  ordered_json ssun = ordered_json::object();
  for (int g : cfg.conditioned_groups)
    ssun[std::to_string(g)] = ssun_report_json(ssun_report(by_group[g], g));
  metrics["ssun"] = ssun;
  std::string metrics_content = metrics.dump(2) + "\n";
  write_file(out_path("metrics.json"), metrics_content);

  ordered_json manifest;
  manifest["status"] = "ok";
  manifest["iteration"] = cfg.iteration;
  manifest["temperature"] = temp;
  manifest["seed"] = cfg.seed;
  manifest["reference_policy"] = "previous_iteration";
  manifest["counts"] = detail::sample_counts_json(samples);
  ordered_json tier_json = ordered_json::object();
  for (const auto& [tier, n] : tiers.counts)
    tier_json[tier] = n;
  manifest["pairs_by_tier"] = tier_json;
  manifest["pairs_total"] = all_pairs.size();
  manifest["warnings"] = warnings;
  manifest["config"] = config_snapshot(cfg);
  ordered_json digests;
  digests["hull"] = sha256_hex(read_file(cfg.hull_file));
  digests["novelty_corpus"] = cfg.novelty_corpus.empty()
                                  ? std::string()
                                  : sha256_hex(read_file(cfg.novelty_corpus));
  digests["pairs"] = sha256_hex(pairs_content);
  digests["metrics"] = sha256_hex(metrics_content);
  manifest["digests"] = digests;
  write_file(out_path("manifest.json"), manifest.dump(2) + "\n");

  result.ok = true;
  result.manifest = std::move(manifest);
  return result;
}

}  // namespace wyck

#endif
