// jobtext command-line entry point.
//
// Exit status: 0 clean, 2 partial (some records failed; see errors.json in
// the stage directory), 1 fatal.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "jobtext/jobtext.hpp"
#include "run_config.hpp"
#include "stages.hpp"

namespace {

using namespace jobtext;
using namespace jobtext::cli;

struct GlobalOptions {
  std::string config;
  std::string out;
  std::string corpus;
  std::size_t workers = 0;
  std::optional<std::uint64_t> seed;
  bool strict = false;
};

RunConfig resolve_config(const GlobalOptions& g) {
  RunConfig cfg = g.config.empty() ? parse_config(nlohmann::json::object(), fs::current_path()) : load_config(g.config);
  if (!g.corpus.empty()) {
    if (!fs::exists(g.corpus)) throw InputError("corpus not found: " + g.corpus);
    cfg.corpus = g.corpus;
  }
  if (const char* env = std::getenv("JOBTEXT_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
  if (!g.out.empty()) cfg.output_dir = g.out;
  if (g.workers > 0) cfg.workers = g.workers;
  if (g.seed) cfg.seed = *g.seed;
  if (g.strict) cfg.strict = true;
  return cfg;
}

std::vector<std::string> split_csv_arg(const std::string& s) {
  std::vector<std::string> out;
  for (auto& r : csv::parse(s)) out.insert(out.end(), r.fields.begin(), r.fields.end());
  for (auto& x : out) x = std::string(trim(x));
  std::erase_if(out, [](const std::string& x) { return x.empty(); });
  return out;
}

struct SimulateOptions {
  std::string bins;
  std::string accuracy_column = "majority";
  double n_flagged = 0;
  double n_unflagged = 0;
  double stage1_fnr = 0;
  double threshold = 0.87;
};

int run_simulate(const RunConfig& cfg, const SimulateOptions& o) {
  StageWriter w(cfg.output_dir, "simulate", "simulate");
  w.input(o.bins);
  auto bins = BinTable::load(o.bins, o.accuracy_column);
  auto report = simulation_report(bins, o.n_flagged, o.n_unflagged, o.stage1_fnr, o.threshold);
  w.write("report.json", report.dump(2) + "\n");
  w.parameters() = {{"bins", o.bins},
                    {"accuracy_column", o.accuracy_column},
                    {"n_flagged", o.n_flagged},
                    {"n_unflagged", o.n_unflagged},
                    {"stage1_fnr", o.stage1_fnr},
                    {"threshold", o.threshold}};
  std::cout << report["estimate"].dump(2) << "\n";
  return w.finish(cfg);
}

struct KappaOptions {
  std::string ratings;
  std::string raters;
  std::string reference;
};

int run_kappa(const RunConfig& cfg, const KappaOptions& o) {
  StageWriter w(cfg.output_dir, "kappa", "kappa");
  w.input(o.ratings);
  auto t = csv::Table::load(o.ratings);
  const auto names = split_csv_arg(o.raters);
  if (names.size() < 2 && o.reference.empty()) throw ArgumentError("--raters needs at least two columns");
  std::vector<std::vector<std::string>> cols(names.size());
  std::vector<std::size_t> idx;
  for (auto& n : names) idx.push_back(t.require(n));
  for (auto& row : t.rows())
    for (std::size_t k = 0; k < idx.size(); ++k) cols[k].emplace_back(trim(csv::Table::cell(row, idx[k])));

  nlohmann::ordered_json report;
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (std::size_t a = 0; a < names.size(); ++a)
    for (std::size_t b = a + 1; b < names.size(); ++b) {
      std::vector<std::string> cats;
      auto table = contingency(cols[a], cols[b], &cats);
      pairs.push_back({{"raters", {names[a], names[b]}},
                       {"categories", cats},
                       {"table", table},
                       {"agreement", agreement(table)},
                       {"kappa", kappa(table)}});
    }
  report["pairs"] = pairs;
  if (!o.reference.empty()) {
    const auto ref_col = t.require(o.reference);
    std::vector<std::string> ref;
    std::vector<std::vector<std::string>> decisions;
    for (std::size_t r = 0; r < t.rows().size(); ++r) {
      ref.emplace_back(trim(csv::Table::cell(t.rows()[r], ref_col)));
      std::vector<std::string> d;
      for (auto& c : cols) d.push_back(c[r]);
      decisions.push_back(std::move(d));
    }
    auto acc = rater_accuracy(decisions, ref);
    report["reference"] = o.reference;
    report["strict"] = acc.strict;
    report["lenient"] = acc.lenient;
  }
  w.write("report.json", report.dump(2) + "\n");
  w.parameters() = {{"raters", names}, {"reference", o.reference}};
  std::cout << report.dump(2) << "\n";
  return w.finish(cfg);
}

struct SampleOptions {
  std::string results;
  std::string edges;
  std::size_t per_bin = 1000;
};

int run_sample(const RunConfig& cfg, const SampleOptions& o) {
  StageWriter w(cfg.output_dir, "sample", "sample");
  w.input(o.results);
  std::vector<double> edges;
  if (o.edges.empty()) {
    for (int i = 80; i <= 99; ++i) edges.push_back(i / 100.0);
  } else {
    for (auto& e : split_csv_arg(o.edges)) edges.push_back(std::stod(e));
  }
  std::vector<nlohmann::json> rows;
  std::vector<ScoredItem> items;
  for (auto& line : split_lines(read_file(o.results))) {
    if (trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line);
    items.push_back({j.at("ad_id").get<std::string>() + "#" + std::to_string(j.at("sentence_idx").get<std::size_t>()),
                     j.at("score").get<double>()});
    rows.push_back(std::move(j));
  }
  auto picked = stratified_sample(items, edges, o.per_bin, cfg.seed);
  std::string out;
  for (auto& p : picked) {
    nlohmann::ordered_json j;
    for (auto& [k, v] : rows[p.index].items()) j[k] = v;
    j["bin_lower"] = edges[p.bin];
    out += j.dump() + "\n";
  }
  w.write("sample.jsonl", out);
  w.parameters() = {{"edges", edges}, {"per_bin", o.per_bin}, {"seed", cfg.seed}, {"sampled", picked.size()}};
  return w.finish(cfg);
}

struct AugmentOptions {
  std::string sets, seed_vectors, candidates;
  double threshold = 0.9;
};

int run_augment(const RunConfig& cfg, const AugmentOptions& o) {
  StageWriter w(cfg.output_dir, "augment", "augment");
  for (auto& p : {o.sets, o.seed_vectors, o.candidates}) w.input(p);
  auto sets = load_labeled_sets(o.sets);
  auto seed = load_vectors(o.seed_vectors);
  auto cand = load_vectors(o.candidates);
  auto grown = augment(sets, seed, cand, o.threshold);
  // merged matrix so the grown sets resolve against a single file
  EmbeddingMatrix merged(seed.dim());
  for (std::size_t i = 0; i < seed.size(); ++i) merged.push_row(seed.id(i), seed.row(i));
  std::size_t added = 0;
  for (std::size_t i = 0; i < cand.size(); ++i)
    if (!merged.find(cand.id(i))) {
      merged.push_row(cand.id(i), cand.row(i));
      ++added;
    }
  w.write("label_sets.json", serialize_labeled_sets(grown));
  w.write("label_vectors.jvec", jvec::serialize(merged));
  std::size_t before = 0, after = 0;
  for (auto& s : sets) before += s.member_ids.size();
  for (auto& s : grown) after += s.member_ids.size();
  w.parameters() = {{"threshold", o.threshold}, {"members_before", before}, {"members_after", after}};
  return w.finish(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jobtext: job-ad text mining"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config, "JSON run configuration");
  app.add_option("--out", g.out, "output directory (overrides config and JOBTEXT_OUTPUT_DIR)");
  app.add_option("--corpus", g.corpus, "corpus file (JSONL or CSV)");
  app.add_option("--workers", g.workers, "data-parallel width")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "random seed");
  app.add_flag("--strict", g.strict, "treat malformed records as fatal");

  auto* ingest = app.add_subcommand("ingest", "validate and normalize the corpus");
  auto* seg = app.add_subcommand("segment", "split ad bodies into sentences");
  auto* extract = app.add_subcommand("extract", "run one extraction stage");
  std::string what;
  extract->add_option("what", what, "skills|tasks|titles|firms|wages|tags|dict")
      ->required()
      ->check(CLI::IsMember({"skills", "tasks", "titles", "firms", "wages", "tags", "dict"}));
  auto* agg = app.add_subcommand("aggregate", "monthly-active-jobs aggregation over stage outputs");
  std::string group_by;
  std::size_t top = 0;
  agg->add_option("--group-by", group_by, "e.g. month,soc2");
  agg->add_option("--top-k", top, "codes kept per group in top_k.csv");

  SimulateOptions so;
  auto* sim = app.add_subcommand("simulate", "confusion simulation over a score-bin table");
  sim->add_option("--bins", so.bins, "bin table CSV")->required()->check(CLI::ExistingFile);
  sim->add_option("--accuracy-column", so.accuracy_column, "accuracy column name");
  sim->add_option("--n-flagged", so.n_flagged, "sentences passing stage 1")->required();
  sim->add_option("--n-unflagged", so.n_unflagged, "sentences rejected by stage 1");
  sim->add_option("--stage1-fnr", so.stage1_fnr, "stage-1 false negative rate");
  sim->add_option("--threshold", so.threshold, "retention threshold (a bin edge)");

  KappaOptions ko;
  auto* kap = app.add_subcommand("kappa", "inter-rater statistics");
  kap->add_option("--ratings", ko.ratings, "ratings CSV, one row per item")->required()->check(CLI::ExistingFile);
  kap->add_option("--raters", ko.raters, "comma-separated rater columns")->required();
  kap->add_option("--reference", ko.reference, "column compared against every rater (strict/lenient)");

  SampleOptions sa;
  auto* smp = app.add_subcommand("sample", "stratified audit sample of match results");
  smp->add_option("--results", sa.results, "matches JSONL")->required()->check(CLI::ExistingFile);
  smp->add_option("--edges", sa.edges, "comma-separated lower bin edges (default 0.80..0.99)");
  smp->add_option("--per-bin", sa.per_bin, "items drawn per bin")->check(CLI::PositiveNumber);

  AugmentOptions ao;
  auto* aug = app.add_subcommand("augment", "grow labeled sets from candidate statements");
  aug->add_option("--sets", ao.sets, "label sets JSON")->required()->check(CLI::ExistingFile);
  aug->add_option("--seed-vectors", ao.seed_vectors, "member vectors (JVEC)")->required()->check(CLI::ExistingFile);
  aug->add_option("--candidates", ao.candidates, "candidate vectors (JVEC)")->required()->check(CLI::ExistingFile);
  aug->add_option("--threshold", ao.threshold, "similarity needed to join a set");

  auto* all = app.add_subcommand("all", "every configured stage, then aggregation");

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = resolve_config(g);
    if (!group_by.empty()) cfg.aggregate.group_by = group_by;
    if (top > 0) cfg.aggregate.top_k = top;
    if (*ingest) return run_ingest(cfg);
    if (*seg) return run_segment(cfg);
    if (*extract) {
      if (what == "skills") return run_match(cfg, PipelineTask::skill);
      if (what == "tasks") return run_match(cfg, PipelineTask::task);
      if (what == "titles") return run_titles(cfg);
      if (what == "firms") return run_firms(cfg);
      if (what == "wages") return run_wages(cfg);
      if (what == "tags") return run_tags(cfg);
      return run_dict(cfg);
    }
    if (*agg) return run_aggregate(cfg);
    if (*sim) return run_simulate(cfg, so);
    if (*kap) return run_kappa(cfg, ko);
    if (*smp) return run_sample(cfg, sa);
    if (*aug) return run_augment(cfg, ao);
    if (*all) return run_all(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFatal;
  }
  return kFatal;
}
