// Command-line entry point: codec, symmetry, matching, hull, and round
// pipeline operations over files.
//
// Exit codes: 0 success, 1 partial per-record failures, 2 usage error,
// 3 plugin or I/O failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wyck/codec.hpp"
#include "wyck/geometry.hpp"
#include "wyck/rlip.hpp"
#include "wyck/symcore.hpp"
#include "wyck/thermo.hpp"

namespace {

using wyck::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

ordered_json crystal_json(const wyck::Crystal& c) {
  ordered_json j;
  j["a"] = c.a;
  j["b"] = c.b;
  j["c"] = c.c;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["gamma"] = c.gamma;
  ordered_json sites = ordered_json::array();
  for (const auto& s : c.sites) {
    ordered_json sj;
    sj["element"] = s.element;
    sj["frac"] = {s.frac[0], s.frac[1], s.frac[2]};
    sites.push_back(sj);
  }
  j["sites"] = sites;
  return j;
}

// accepts a bare crystal object or a decode record wrapping one
wyck::Crystal crystal_from_json(const ordered_json& outer) {
  const ordered_json& j = outer.contains("crystal") ? outer["crystal"] : outer;
  wyck::Crystal c;
  c.a = j.at("a").get<double>();
  c.b = j.at("b").get<double>();
  c.c = j.at("c").get<double>();
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.gamma = j.at("gamma").get<double>();
  for (const auto& sj : j.at("sites")) {
    wyck::Site s;
    s.element = sj.at("element").get<std::string>();
    auto f = sj.at("frac");
    s.frac = {f.at(0).get<double>(), f.at(1).get<double>(),
              f.at(2).get<double>()};
    s.frac = wyck::reduce_mod1(s.frac);
    c.sites.push_back(std::move(s));
  }
  c.lattice();  // validates the metric
  return c;
}

// crystal record, or {"wyckoff_text": ...} to be reconstructed
wyck::Crystal crystal_from_any(const ordered_json& j,
                               const wyck::SpaceGroupTable& table) {
  if (j.contains("wyckoff_text"))
    return wyck::reconstruct(
        wyck::parse_wyckoff(j["wyckoff_text"].get<std::string>(), table),
        table);
  return crystal_from_json(j);
}

// blocks are runs of non-empty lines separated by blank lines
std::vector<std::string> split_blocks(const std::string& content) {
  std::vector<std::string> blocks;
  std::string cur;
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      if (!cur.empty()) {
        blocks.push_back(cur);
        cur.clear();
      }
    } else {
      cur += line;
      cur += '\n';
    }
  }
  if (!cur.empty())
    blocks.push_back(cur);
  return blocks;
}

struct OutputSink {
  std::optional<std::ofstream> file;
  std::ostream& stream() { return file ? *file : std::cout; }
  void open(const std::string& path) {
    if (path.empty())
      return;
    file.emplace(path, std::ios::binary);
    if (!*file)
      throw wyck::Error("cannot write file: " + path);
  }
};

struct CommonArgs {
  std::string db = "data/spacegroups.txt";
  std::string oxidation = "data/oxidation_states.txt";
  double sym_tol = wyck::kDefaultSymTol;
  wyck::MatchTolerances match_tol{};
};

void add_db_option(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--db", args.db, "space-group database file");
}

void add_match_options(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--ltol", args.match_tol.ltol, "relative length tolerance");
  cmd->add_option("--stol", args.match_tol.stol, "site tolerance factor");
  cmd->add_option("--angle-tol", args.match_tol.angle_tol,
                  "angle tolerance, degrees");
}

int cmd_encode(const CommonArgs& args, const std::string& in_path,
               const std::string& out_path, bool coords) {
  wyck::SpaceGroupTable table = wyck::SpaceGroupTable::load(args.db);
  OutputSink out;
  out.open(out_path);
  int errors = 0;
  size_t n = 0;
  auto records = wyck::read_jsonl(in_path);
  for (const auto& j : records) {
    ++n;
    try {
      wyck::Crystal c = crystal_from_json(j);
      std::string block = coords ? wyck::encode_coords(c)
                                 : wyck::encode_wyckoff(c, table, args.sym_tol);
      if (n > 1)
        out.stream() << "\n";
      out.stream() << block;
    } catch (const std::exception& e) {
      std::cerr << "record " << n << ": " << e.what() << "\n";
      ++errors;
    }
  }
  std::cerr << records.size() << " records, " << errors << " errors\n";
  return errors == 0 ? kExitOk : kExitPartial;
}

int cmd_decode(const CommonArgs& args, const std::string& in_path,
               const std::string& out_path, bool coords) {
  wyck::SpaceGroupTable table = wyck::SpaceGroupTable::load(args.db);
  OutputSink out;
  out.open(out_path);
  int errors = 0;
  auto blocks = split_blocks(wyck::read_file(in_path));
  for (size_t i = 0; i < blocks.size(); ++i) {
    try {
      ordered_json j;
      j["index"] = i;
      if (coords) {
        j["crystal"] = crystal_json(wyck::parse_coords(blocks[i]));
      } else {
        wyck::WyckoffRecord rec = wyck::parse_wyckoff(blocks[i], table);
        j["spacegroup"] = rec.spacegroup;
        j["total_atoms"] = rec.total_atoms;
        j["crystal"] = crystal_json(wyck::reconstruct(rec, table));
      }
      out.stream() << j.dump() << "\n";
    } catch (const std::exception& e) {
      std::cerr << "record " << i + 1 << ": " << e.what() << "\n";
      ++errors;
    }
  }
  std::cerr << blocks.size() << " records, " << errors << " errors\n";
  return errors == 0 ? kExitOk : kExitPartial;
}

int cmd_validate(const CommonArgs& args, const std::string& in_path,
                 const std::string& out_path, bool strict) {
  wyck::SpaceGroupTable table = wyck::SpaceGroupTable::load(args.db);
  wyck::OxidationTable ox =
      wyck::parse_oxidation_table(wyck::read_file(args.oxidation));
  OutputSink out;
  out.open(out_path);
  int errors = 0;
  auto blocks = split_blocks(wyck::read_file(in_path));
  for (size_t i = 0; i < blocks.size(); ++i) {
    ordered_json j;
    j["index"] = i;
    try {
      wyck::WyckoffRecord rec = wyck::parse_wyckoff(blocks[i], table);
      wyck::Crystal c = wyck::reconstruct(rec, table);
      wyck::Composition comp;
      for (const auto& [el, cnt] : rec.formula)
        comp[el] += cnt;
      j["parse"] = "ok";
      j["structural_valid"] = wyck::structural_validity(c);
      j["compositional_valid"] = wyck::compositional_validity(comp, ox, strict);
    } catch (const wyck::ParseError& e) {
      j["parse"] = e.kind == wyck::ParseErrorKind::Lexical ? "lexical_error"
                                                           : "semantic_error";
      j["error"] = e.what();
      ++errors;
    } catch (const wyck::Error& e) {
      j["parse"] = "semantic_error";
      j["error"] = e.what();
      ++errors;
    }
    out.stream() << j.dump() << "\n";
  }
  std::cerr << blocks.size() << " records, " << errors << " parse errors\n";
  return errors == 0 ? kExitOk : kExitPartial;
}

int cmd_detect(const CommonArgs& args, const std::string& in_path,
               const std::string& out_path) {
  wyck::SpaceGroupTable table = wyck::SpaceGroupTable::load(args.db);
  OutputSink out;
  out.open(out_path);
  int errors = 0;
  auto records = wyck::read_jsonl(in_path);
  for (size_t i = 0; i < records.size(); ++i) {
    try {
      wyck::Crystal c = crystal_from_any(records[i], table);
      wyck::Detection det = wyck::detect_with_origin(table, c, args.sym_tol);
      ordered_json j;
      j["index"] = i;
      j["spacegroup"] = det.number;
      j["hm_symbol"] = table.group(det.number).hm_symbol;
      j["origin_shift"] = {det.origin_shift[0], det.origin_shift[1],
                           det.origin_shift[2]};
      out.stream() << j.dump() << "\n";
    } catch (const std::exception& e) {
      std::cerr << "record " << i + 1 << ": " << e.what() << "\n";
      ++errors;
    }
  }
  std::cerr << records.size() << " records, " << errors << " errors\n";
  return errors == 0 ? kExitOk : kExitPartial;
}

int cmd_match(const CommonArgs& args, const std::string& mode,
              const std::string& a_path, const std::string& b_path,
              const std::string& in_path, const std::string& corpus_path,
              const std::string& out_path) {
  wyck::SpaceGroupTable table = wyck::SpaceGroupTable::load(args.db);
  OutputSink out;
  out.open(out_path);
  auto load_all = [&](const std::string& path) {
    std::vector<wyck::Crystal> crystals;
    for (const auto& j : wyck::read_jsonl(path))
      crystals.push_back(crystal_from_any(j, table));
    return crystals;
  };
  if (mode == "pair") {
    auto a = load_all(a_path), b = load_all(b_path);
    if (a.empty() || b.empty())
      throw wyck::Error("pair mode needs one record in each input");
    ordered_json j;
    j["match"] = wyck::structures_match(a.front(), b.front(), args.match_tol);
    out.stream() << j.dump() << "\n";
    return kExitOk;
  }
  if (mode == "dedupe") {
    auto crystals = load_all(in_path);
    auto classes = wyck::dedupe(crystals, args.match_tol);
    ordered_json j;
    j["classes"] = classes;
    out.stream() << j.dump() << "\n";
    std::cerr << crystals.size() << " structures, " << classes.size()
              << " classes\n";
    return kExitOk;
  }
  if (mode == "novelty") {
    wyck::NoveltyIndex index(wyck::load_corpus(corpus_path, table));
    auto crystals = load_all(in_path);
    for (size_t i = 0; i < crystals.size(); ++i) {
      ordered_json j;
      j["index"] = i;
      j["novel"] = index.is_novel(crystals[i], args.match_tol);
      out.stream() << j.dump() << "\n";
    }
    return kExitOk;
  }
  throw CLI::ValidationError("--mode must be pair, dedupe, or novelty");
}

int cmd_hull(const std::string& ref_path, const std::string& formula,
             const std::optional<double>& energy, const std::string& query_path,
             const std::string& out_path) {
  wyck::Hull hull = wyck::load_reference_hull(ref_path);
  OutputSink out;
  out.open(out_path);
  auto emit = [&](const std::string& f, std::optional<double> e) {
    wyck::Composition comp = wyck::parse_formula(f);
    ordered_json j;
    j["formula"] = f;
    j["hull_energy"] = hull.hull_energy(comp);
    if (e) {
      double eh = wyck::energy_above_hull(wyck::HullEntry(comp, *e), hull);
      j["e_hull"] = eh;
      j["label"] = wyck::label_name(wyck::classify_stability(eh));
    }
    out.stream() << j.dump() << "\n";
  };
  int errors = 0;
  size_t n = 0;
  if (!formula.empty()) {
    ++n;
    emit(formula, energy);
  } else {
    for (const auto& j : wyck::read_jsonl(query_path)) {
      ++n;
      try {
        std::optional<double> e;
        if (j.contains("energy_per_atom"))
          e = j["energy_per_atom"].get<double>();
        emit(j.at("formula").get<std::string>(), e);
      } catch (const std::exception& e) {
        std::cerr << "query " << n << ": " << e.what() << "\n";
        ++errors;
      }
    }
  }
  return errors == 0 ? kExitOk : kExitPartial;
}

// shared by cmd_pairs and cmd_metrics: load raw samples and post-process
std::vector<wyck::Sample> load_and_process(
    const std::string& samples_path, const CommonArgs& args,
    const std::string& hull_path, const std::string& corpus_path, bool strict,
    int jobs, const wyck::SpaceGroupTable& table) {
  wyck::OxidationTable ox =
      wyck::parse_oxidation_table(wyck::read_file(args.oxidation));
  std::optional<wyck::Hull> hull;
  if (!hull_path.empty())
    hull.emplace(wyck::load_reference_hull(hull_path));
  std::optional<wyck::NoveltyIndex> novelty;
  if (!corpus_path.empty())
    novelty.emplace(wyck::load_corpus(corpus_path, table));

  std::vector<wyck::Sample> samples;
  for (const auto& j : wyck::read_jsonl(samples_path)) {
    wyck::Sample s;
    s.index = samples.size();
    s.prompt = j.value("prompt", std::string());
    s.text = j.value("text", std::string());
    s.target_sg = j.value("target_sg", 0);
    if (j.contains("energy_per_atom"))
      s.energy = j["energy_per_atom"].get<double>();
    samples.push_back(std::move(s));
  }
  wyck::detail::parallel_for(samples.size(), jobs, [&](size_t i) {
    wyck::parse_sample(samples[i], table);
  });
  wyck::PipelineContext ctx;
  ctx.table = &table;
  ctx.hull = hull ? &*hull : nullptr;
  ctx.oxidation = &ox;
  ctx.novelty = novelty ? &*novelty : nullptr;
  ctx.match_tol = args.match_tol;
  ctx.sym_tol = args.sym_tol;
  ctx.strict_oxidation = strict;
  ctx.jobs = jobs;
  wyck::finalize_samples(samples, ctx);
  return samples;
}

int cmd_pairs(const CommonArgs& args, const std::string& samples_path,
              const std::string& hull_path, const std::string& corpus_path,
              std::uint64_t seed, bool non_tiered, bool strict, int jobs,
              const std::string& out_path) {
  wyck::SpaceGroupTable table = wyck::SpaceGroupTable::load(args.db);
  auto samples = load_and_process(samples_path, args, hull_path, corpus_path,
                                  strict, jobs, table);
  std::vector<const wyck::Sample*> uncond;
  std::map<int, std::vector<const wyck::Sample*>> by_group;
  for (const auto& s : samples) {
    if (s.target_sg == 0)
      uncond.push_back(&s);
    else
      by_group[s.target_sg].push_back(&s);
  }
  OutputSink out;
  out.open(out_path);
  std::vector<std::string> warnings;
  auto emit = [&](wyck::PairBuild&& b) {
    for (const auto& p : b.pairs) {
      ordered_json j;
      j["prompt"] = p.prompt;
      j["chosen"] = p.chosen;
      j["rejected"] = p.rejected;
      j["tier"] = p.tier;
      out.stream() << j.dump() << "\n";
    }
    for (auto& w : b.warnings)
      warnings.push_back(std::move(w));
  };
  emit(wyck::tiered_pairs(uncond, seed, non_tiered));
  emit(wyck::novelty_pairs(uncond, seed + 1));
  size_t k = 0;
  for (auto& [g, group_samples] : by_group) {
    emit(wyck::spacegroup_pairs(group_samples, g, seed + 2 + k));
    ++k;
  }
  for (const auto& w : warnings)
    std::cerr << "warning: " << w << "\n";
  return kExitOk;
}

int cmd_metrics(const CommonArgs& args, const std::string& mode,
                const std::string& samples_path, const std::string& hull_path,
                const std::string& corpus_path, int target_sg, bool strict,
                int jobs, const std::string& out_path) {
  wyck::SpaceGroupTable table = wyck::SpaceGroupTable::load(args.db);
  auto samples = load_and_process(samples_path, args, hull_path, corpus_path,
                                  strict, jobs, table);
  std::vector<const wyck::Sample*> ptrs;
  for (const auto& s : samples)
    ptrs.push_back(&s);
  OutputSink out;
  out.open(out_path);
  if (mode == "sun") {
    out.stream() << wyck::sun_report_json(wyck::sun_report(ptrs)).dump(2)
                 << "\n";
    return kExitOk;
  }
  if (mode == "ssun") {
    if (target_sg < 1 || target_sg > 230)
      throw CLI::ValidationError("--target-sg is required for --mode ssun");
    out.stream()
        << wyck::ssun_report_json(wyck::ssun_report(ptrs, target_sg)).dump(2)
        << "\n";
    return kExitOk;
  }
  throw CLI::ValidationError("--mode must be sun or ssun");
}

// config file (JSON object) merged under explicit flags; flags win
void apply_config_file(wyck::RoundConfig& cfg, const std::string& path) {
  ordered_json j = ordered_json::parse(wyck::read_file(path));
  if (j.contains("spacegroup_db"))
    cfg.spacegroup_db = j["spacegroup_db"].get<std::string>();
  if (j.contains("oxidation_table"))
    cfg.oxidation_table = j["oxidation_table"].get<std::string>();
  if (j.contains("hull"))
    cfg.hull_file = j["hull"].get<std::string>();
  if (j.contains("novelty_corpus"))
    cfg.novelty_corpus = j["novelty_corpus"].get<std::string>();
  if (j.contains("sampler"))
    cfg.sampler_cmd = j["sampler"].get<std::string>();
  if (j.contains("scorer"))
    cfg.scorer_cmd = j["scorer"].get<std::string>();
  if (j.contains("out"))
    cfg.out_dir = j["out"].get<std::string>();
  if (j.contains("seed"))
    cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("iteration"))
    cfg.iteration = j["iteration"].get<int>();
  if (j.contains("temp_base"))
    cfg.temp_base = j["temp_base"].get<double>();
  if (j.contains("temp_step"))
    cfg.temp_step = j["temp_step"].get<double>();
  if (j.contains("rmax"))
    cfg.rmax = j["rmax"].get<int>();
  if (j.contains("non_tiered"))
    cfg.non_tiered = j["non_tiered"].get<bool>();
  if (j.contains("jobs"))
    cfg.jobs = j["jobs"].get<int>();
  if (j.contains("n_unconditional"))
    cfg.n_unconditional = j["n_unconditional"].get<size_t>();
  if (j.contains("n_per_spacegroup"))
    cfg.n_per_spacegroup = j["n_per_spacegroup"].get<size_t>();
  if (j.contains("conditioned_groups"))
    cfg.conditioned_groups = j["conditioned_groups"].get<std::vector<int>>();
  if (j.contains("sym_tol"))
    cfg.sym_tol = j["sym_tol"].get<double>();
  if (j.contains("ltol"))
    cfg.match_tol.ltol = j["ltol"].get<double>();
  if (j.contains("stol"))
    cfg.match_tol.stol = j["stol"].get<double>();
  if (j.contains("angle_tol"))
    cfg.match_tol.angle_tol = j["angle_tol"].get<double>();
  if (j.contains("strict_oxidation"))
    cfg.strict_oxidation = j["strict_oxidation"].get<bool>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wyckoff text codec, symmetry, and preference-pair pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "wyck 0.1.0");

  CommonArgs common;
  std::string in_path, out_path;

  auto* enc = app.add_subcommand("encode", "crystal JSONL to text blocks");
  add_db_option(enc, common);
  enc->add_option("--sym-tol", common.sym_tol, "symmetry tolerance");
  enc->add_option("--in", in_path, "input crystal JSONL")->required();
  enc->add_option("--out", out_path, "output file (default stdout)");
  bool enc_coords = false;
  enc->add_flag("--coords", enc_coords, "plain-coordinate representation");

  auto* dec = app.add_subcommand("decode", "text blocks to crystal JSONL");
  add_db_option(dec, common);
  dec->add_option("--in", in_path, "input block file")->required();
  dec->add_option("--out", out_path, "output file (default stdout)");
  bool dec_coords = false;
  dec->add_flag("--coords", dec_coords, "plain-coordinate representation");

  auto* val = app.add_subcommand("validate",
                                 "structural and charge-neutrality checks");
  add_db_option(val, common);
  val->add_option("--oxidation", common.oxidation, "oxidation-state table");
  val->add_option("--in", in_path, "input block file")->required();
  val->add_option("--out", out_path, "output file (default stdout)");
  bool permissive = false;
  val->add_flag("--permissive", permissive,
                "treat elements missing from the oxidation table as valid");

  auto* det = app.add_subcommand("detect", "space-group detection");
  add_db_option(det, common);
  det->add_option("--sym-tol", common.sym_tol, "symmetry tolerance");
  det->add_option("--in", in_path, "input crystal JSONL")->required();
  det->add_option("--out", out_path, "output file (default stdout)");

  auto* mat = app.add_subcommand("match", "structure matching / dedupe");
  add_db_option(mat, common);
  add_match_options(mat, common);
  std::string match_mode = "pair", a_path, b_path, corpus_path;
  mat->add_option("--mode", match_mode, "pair | dedupe | novelty");
  mat->add_option("--a", a_path, "first structure file (pair mode)");
  mat->add_option("--b", b_path, "second structure file (pair mode)");
  mat->add_option("--in", in_path, "structures (dedupe/novelty modes)");
  mat->add_option("--corpus", corpus_path, "reference corpus (novelty mode)");
  mat->add_option("--out", out_path, "output file (default stdout)");

  auto* hul = app.add_subcommand("hull", "convex-hull energies");
  std::string hull_ref, hull_formula, query_path;
  std::optional<double> hull_energy_opt;
  double hull_energy_val = 0;
  hul->add_option("--ref", hull_ref, "reference hull JSONL")->required();
  hul->add_option("--formula", hull_formula, "single query formula");
  auto* he = hul->add_option("--energy", hull_energy_val,
                             "energy per atom of the single query");
  hul->add_option("--queries", query_path, "query JSONL file");
  hul->add_option("--out", out_path, "output file (default stdout)");

  auto* prs = app.add_subcommand("pairs", "preference pairs from samples");
  add_db_option(prs, common);
  add_match_options(prs, common);
  prs->add_option("--sym-tol", common.sym_tol, "symmetry tolerance");
  prs->add_option("--oxidation", common.oxidation, "oxidation-state table");
  std::string samples_path, hull_path, novelty_path;
  std::uint64_t seed = 0;
  bool non_tiered = false, pairs_permissive = false;
  int jobs = 1;
  prs->add_option("--samples", samples_path, "samples JSONL")->required();
  prs->add_option("--hull", hull_path, "reference hull JSONL")->required();
  prs->add_option("--novelty-corpus", novelty_path, "novelty corpus JSONL");
  prs->add_option("--seed", seed, "random seed");
  prs->add_flag("--non-tiered", non_tiered, "non-tiered stability ablation");
  prs->add_flag("--permissive", pairs_permissive,
                "permissive oxidation handling");
  prs->add_option("--jobs", jobs, "worker threads");
  prs->add_option("--out", out_path, "output file (default stdout)");

  auto* met = app.add_subcommand("metrics", "S.U.N. / S.S.U.N. reports");
  add_db_option(met, common);
  add_match_options(met, common);
  met->add_option("--sym-tol", common.sym_tol, "symmetry tolerance");
  met->add_option("--oxidation", common.oxidation, "oxidation-state table");
  std::string metrics_mode = "sun";
  int target_sg = 0;
  bool metrics_permissive = false;
  met->add_option("--mode", metrics_mode, "sun | ssun");
  met->add_option("--samples", samples_path, "samples JSONL")->required();
  met->add_option("--hull", hull_path, "reference hull JSONL");
  met->add_option("--novelty-corpus", novelty_path, "novelty corpus JSONL");
  met->add_option("--target-sg", target_sg, "target space group (ssun)");
  met->add_flag("--permissive", metrics_permissive,
                "permissive oxidation handling");
  met->add_option("--jobs", jobs, "worker threads");
  met->add_option("--out", out_path, "output file (default stdout)");

  auto* rnd = app.add_subcommand("round", "full sampling round");
  std::string config_path;
  rnd->add_option("--config", config_path, "JSON config file");
  wyck::RoundConfig flag_cfg;
  auto* o_db = rnd->add_option("--db", flag_cfg.spacegroup_db,
                               "space-group database file");
  auto* o_ox = rnd->add_option("--oxidation", flag_cfg.oxidation_table,
                               "oxidation-state table");
  auto* o_hull = rnd->add_option("--hull", flag_cfg.hull_file,
                                 "reference hull JSONL");
  auto* o_corpus = rnd->add_option("--novelty-corpus", flag_cfg.novelty_corpus,
                                   "novelty corpus JSONL");
  auto* o_sampler = rnd->add_option("--sampler", flag_cfg.sampler_cmd,
                                    "sampler command (JSONL stdin/stdout)");
  auto* o_scorer = rnd->add_option("--scorer", flag_cfg.scorer_cmd,
                                   "scorer command (JSONL stdin/stdout)");
  auto* o_out = rnd->add_option("--out", flag_cfg.out_dir, "output directory");
  auto* o_seed = rnd->add_option("--seed", flag_cfg.seed, "random seed");
  auto* o_iter = rnd->add_option("--iteration", flag_cfg.iteration,
                                 "iteration number for the schedule");
  auto* o_tb = rnd->add_option("--temp-base", flag_cfg.temp_base,
                               "sampling temperature at iteration 0");
  auto* o_ts = rnd->add_option("--temp-step", flag_cfg.temp_step,
                               "temperature increment per iteration");
  auto* o_rmax = rnd->add_option("--rmax", flag_cfg.rmax,
                                 "resampling attempts per failed prompt");
  auto* o_nt = rnd->add_flag("--non-tiered", flag_cfg.non_tiered,
                             "non-tiered stability ablation");
  auto* o_jobs = rnd->add_option("--jobs", flag_cfg.jobs, "worker threads");
  auto* o_nu = rnd->add_option("--n-unconditional", flag_cfg.n_unconditional,
                               "unconditional prompts per round");
  auto* o_np = rnd->add_option("--n-per-spacegroup", flag_cfg.n_per_spacegroup,
                               "conditioned prompts per target group");
  auto* o_groups =
      rnd->add_option("--groups", flag_cfg.conditioned_groups,
                      "conditioned space-group numbers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (enc->parsed())
      return cmd_encode(common, in_path, out_path, enc_coords);
    if (dec->parsed())
      return cmd_decode(common, in_path, out_path, dec_coords);
    if (val->parsed())
      return cmd_validate(common, in_path, out_path, !permissive);
    if (det->parsed())
      return cmd_detect(common, in_path, out_path);
    if (mat->parsed())
      return cmd_match(common, match_mode, a_path, b_path, in_path, corpus_path,
                       out_path);
    if (hul->parsed()) {
      if (he->count() > 0)
        hull_energy_opt = hull_energy_val;
      if (hull_formula.empty() == query_path.empty())
        throw CLI::ValidationError(
            "hull needs exactly one of --formula or --queries");
      return cmd_hull(hull_ref, hull_formula, hull_energy_opt, query_path,
                      out_path);
    }
    if (prs->parsed())
      return cmd_pairs(common, samples_path, hull_path, novelty_path, seed,
                       non_tiered, !pairs_permissive, jobs, out_path);
    if (met->parsed())
      return cmd_metrics(common, metrics_mode, samples_path, hull_path,
                         novelty_path, target_sg, !metrics_permissive, jobs,
                         out_path);
    if (rnd->parsed()) {
      wyck::RoundConfig cfg;
      if (!config_path.empty())
        apply_config_file(cfg, config_path);
      if (o_db->count())
        cfg.spacegroup_db = flag_cfg.spacegroup_db;
      if (o_ox->count())
        cfg.oxidation_table = flag_cfg.oxidation_table;
      if (o_hull->count())
        cfg.hull_file = flag_cfg.hull_file;
      if (o_corpus->count())
        cfg.novelty_corpus = flag_cfg.novelty_corpus;
      if (o_sampler->count())
        cfg.sampler_cmd = flag_cfg.sampler_cmd;
      if (o_scorer->count())
        cfg.scorer_cmd = flag_cfg.scorer_cmd;
      if (o_out->count())
        cfg.out_dir = flag_cfg.out_dir;
      if (o_seed->count())
        cfg.seed = flag_cfg.seed;
      if (o_iter->count())
        cfg.iteration = flag_cfg.iteration;
      if (o_tb->count())
        cfg.temp_base = flag_cfg.temp_base;
      if (o_ts->count())
        cfg.temp_step = flag_cfg.temp_step;
      if (o_rmax->count())
        cfg.rmax = flag_cfg.rmax;
      if (o_nt->count())
        cfg.non_tiered = flag_cfg.non_tiered;
      if (o_jobs->count())
        cfg.jobs = flag_cfg.jobs;
      if (o_nu->count())
        cfg.n_unconditional = flag_cfg.n_unconditional;
      if (o_np->count())
        cfg.n_per_spacegroup = flag_cfg.n_per_spacegroup;
      if (o_groups->count())
        cfg.conditioned_groups = flag_cfg.conditioned_groups;
      if (cfg.spacegroup_db.empty())
        cfg.spacegroup_db = "data/spacegroups.txt";
      if (cfg.oxidation_table.empty())
        cfg.oxidation_table = "data/oxidation_states.txt";
      if (cfg.sampler_cmd.empty() || cfg.scorer_cmd.empty() ||
          cfg.hull_file.empty())
        throw CLI::ValidationError(
            "round needs --sampler, --scorer, and --hull (or a config file)");
      wyck::RoundResult res = wyck::run_round(cfg);
      std::cerr << (res.ok ? "round complete: " : "round aborted: ")
                << cfg.out_dir << "/manifest.json\n";
      return res.ok ? kExitOk : kExitIo;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const wyck::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
