#pragma once

// Stage runners behind the jobtext subcommands. Each stage writes its outputs
// into <output_dir>/<stage>/ together with a manifest.json, plus errors.json
// when some records failed.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobtext/jobtext.hpp"
#include "run_config.hpp"

namespace jobtext::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode { kClean = 0, kFatal = 1, kPartial = 2 };

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class StageWriter {
 public:
  StageWriter(const fs::path& output_dir, std::string stage, std::string dir_name)
      : dir_(output_dir / dir_name), stage_(std::move(stage)) {
    fs::create_directories(dir_);
  }

  void input(const fs::path& p) {
    if (p.empty() || !seen_inputs_.insert(p.string()).second) return;
    const auto bytes = read_file(p);
    inputs_.push_back({{"path", p.string()}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + (dir_ / name).string());
    out << content;
    outputs_.push_back(name);
  }

  void error(nlohmann::ordered_json e) { errors_.push_back(std::move(e)); }
  [[nodiscard]] bool partial() const { return !errors_.empty(); }

  nlohmann::ordered_json& parameters() { return parameters_; }

  int finish(const RunConfig& cfg) {
    if (!errors_.empty()) {
      nlohmann::ordered_json rep{{"stage", stage_}, {"error_count", errors_.size()}, {"errors", errors_}};
      write("errors.json", rep.dump(2) + "\n");
    }
    nlohmann::ordered_json m;
    m["tool"] = "jobtext";
    m["version"] = kToolVersion;
    m["stage"] = stage_;
    m["created_at"] = utc_now();
    m["status"] = errors_.empty() ? "clean" : "partial";
    m["config_file"] = cfg.source ? nlohmann::ordered_json(cfg.source->string()) : nlohmann::ordered_json(nullptr);
    m["config"] = cfg.raw;
    m["seed"] = cfg.seed;
    m["workers"] = cfg.workers;
    m["strict"] = cfg.strict;
    m["parameters"] = parameters_;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    std::ofstream out(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
    out << m.dump(2) << "\n";
    return errors_.empty() ? kClean : kPartial;
  }

  [[nodiscard]] const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::string stage_;
  nlohmann::ordered_json inputs_ = nlohmann::ordered_json::array();
  std::set<std::string> seen_inputs_;
  std::vector<std::string> outputs_;
  nlohmann::ordered_json errors_ = nlohmann::ordered_json::array();
  nlohmann::ordered_json parameters_ = nlohmann::ordered_json::object();
};

template <typename Rows, typename Fn>
std::string jsonl(const Rows& rows, Fn&& fn) {
  std::string out;
  for (auto& r : rows) out += fn(r).dump() + "\n";
  return out;
}

inline IngestResult load_corpus(const RunConfig& cfg) {
  if (cfg.corpus.empty()) throw ArgumentError("no corpus configured (set \"corpus\" in the config or pass --corpus)");
  IngestOptions opt;
  opt.strict = cfg.strict;
  return ingest_file(cfg.corpus, opt);
}

// ---------------------------------------------------------------------------

inline int run_ingest(const RunConfig& cfg) {
  StageWriter w(cfg.output_dir, "ingest", "ingest");
  w.input(cfg.corpus);
  auto res = load_corpus(cfg);
  w.write("ads.jsonl", emit_jsonl(res.records));
  for (auto& r : res.rejected)
    w.error({{"kind", "rejected_row"}, {"line", r.line}, {"ad_id", r.id}, {"reason", r.reason}});
  w.parameters() = {{"accepted", res.records.size()}, {"rejected", res.rejected.size()}};
  return w.finish(cfg);
}

inline int run_segment(const RunConfig& cfg) {
  StageWriter w(cfg.output_dir, "segment", "segment");
  w.input(cfg.corpus);
  auto ads = load_corpus(cfg).records;
  auto per_ad = parallel_map(ads.size(), cfg.workers, [&](std::size_t i) {
    std::string out;
    for (auto& s : segment(ads[i].body, ads[i].id))
      out += nlohmann::ordered_json{{"ad_id", s.ad_id}, {"sentence_idx", s.index}, {"text", s.text}}.dump() + "\n";
    return out;
  });
  std::string all;
  for (auto& s : per_ad) all += s;
  w.write("sentences.jsonl", all);
  return w.finish(cfg);
}

inline int run_match(const RunConfig& cfg, PipelineTask task) {
  const bool skill = task == PipelineTask::skill;
  const auto& sec = skill ? cfg.skills : cfg.tasks;
  const std::string name = skill ? "skills" : "tasks";
  if (!sec) throw ArgumentError("config has no \"" + name + "\" section");
  StageWriter w(cfg.output_dir, "extract " + name, name);
  for (auto& p : {cfg.corpus, sec->cues, sec->external_labels, sec->label_sets, sec->label_vectors, sec->sentence_vectors})
    w.input(p);

  auto ads = load_corpus(cfg).records;
  std::unique_ptr<SentenceFilter> filter;
  if (sec->filter == "cue")
    filter = std::make_unique<CuePhraseFilter>(CuePhraseFilter::load(name + "_cues", sec->cues));
  else if (sec->filter == "external")
    filter = std::make_unique<ExternalLabelFilter>(ExternalLabelFilter::load(sec->external_labels));
  else
    filter = std::make_unique<AcceptAllFilter>();

  LabelIndex labels(load_vectors(sec->label_vectors), load_labeled_sets(sec->label_sets), sec->label_mode);
  auto sentence_vectors = load_vectors(sec->sentence_vectors);
  PipelineConfig pc{task, sec->threshold, sec->keep_below_threshold};
  auto out = run_pipeline(ads, *filter, pc, labels, sentence_vectors, cfg.workers);

  w.write("matches.jsonl", jsonl(out.results, [&](const MatchResult& m) {
    auto j = to_json(m);
    if (pc.keep_below_threshold) j["retained"] = m.retained;
    return j;
  }));
  w.write("stats.json", to_json(out.stats).dump(2) + "\n");
  for (auto& d : out.diagnostics)
    w.error({{"kind", "sentence"}, {"ad_id", d.ad_id}, {"sentence_idx", d.sentence_index}, {"message", d.message}});
  w.parameters() = {{"threshold", pc.threshold},
                    {"filter", filter->name()},
                    {"filter_version", filter->version()},
                    {"labels", labels.label_count()},
                    {"label_mode", sec->label_mode == LabelMode::member_max ? "member_max" : "title_vector"}};
  return w.finish(cfg);
}

inline int run_titles(const RunConfig& cfg) {
  if (!cfg.titles) throw ArgumentError("config has no \"titles\" section");
  const auto& sec = *cfg.titles;
  StageWriter w(cfg.output_dir, "extract titles", "titles");
  w.input(cfg.corpus);
  for (auto& p : {sec.reference, sec.title_vectors, sec.hierarchy_base, sec.hierarchy_stepper}) w.input(p);
  if (sec.query_vectors) w.input(*sec.query_vectors);
  if (sec.features) w.input(*sec.features);

  auto ads = load_corpus(cfg).records;
  TitleIndex index(load_reference_titles(sec.reference), load_vectors(sec.title_vectors));
  auto maps = HierarchyMaps::load(sec.hierarchy_base, sec.hierarchy_stepper);
  std::optional<EmbeddingMatrix> queries;
  if (sec.query_vectors) queries = load_vectors(*sec.query_vectors);
  Matcher features;
  if (sec.features) features = Matcher::compile(load_dictionary(*sec.features, DictionarySchema::generic).entries);

  struct Row {
    std::optional<nlohmann::ordered_json> result;
    std::string error;
  };
  auto rows = parallel_map(ads.size(), cfg.workers, [&](std::size_t i) {
    const auto& ad = ads[i];
    Row row;
    std::optional<std::span<const float>> q;
    if (queries)
      if (auto r = queries->find(ad.id)) q = queries->row(*r);
    try {
      auto coded = code_title(ad.title, index, q);
      coded.result.hierarchy = hierarchy(ad.title, maps);
      coded.result.features = title_features(ad.title, features);
      auto j = to_json(ad.id, coded.result);
      nlohmann::ordered_json cands = nlohmann::ordered_json::array();
      for (auto& c : coded.candidates)
        cands.push_back({{"onet_code", c.code.onet_code},
                         {"score", c.score ? nlohmann::ordered_json(*c.score) : nlohmann::ordered_json(nullptr)}});
      j["candidates"] = cands;
      row.result = std::move(j);
    } catch (const Error& e) {
      row.error = e.what();
    }
    return row;
  });
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].result)
      out += rows[i].result->dump() + "\n";
    else
      w.error({{"kind", "title"}, {"ad_id", ads[i].id}, {"message", rows[i].error}});
  }
  w.write("titles.jsonl", out);
  return w.finish(cfg);
}

inline int run_firms(const RunConfig& cfg) {
  if (!cfg.firms) throw ArgumentError("config has no \"firms\" section");
  const auto& sec = *cfg.firms;
  StageWriter w(cfg.output_dir, "extract firms", "firms");
  w.input(cfg.corpus);
  w.input(sec.establishments);
  if (sec.spans) w.input(*sec.spans);
  auto ads = load_corpus(cfg).records;
  auto index = EstablishmentIndex::load(sec.establishments);
  std::map<std::string, std::string> spans;
  if (sec.spans) spans = load_firm_spans(*sec.spans);
  auto rows = parallel_map(ads.size(), cfg.workers,
                           [&](std::size_t i) { return to_json(match_firm(ads[i], spans, index, sec.threshold), index); });
  w.write("firms.jsonl", jsonl(rows, [](const nlohmann::ordered_json& j) { return j; }));
  w.parameters() = {{"threshold", sec.threshold}, {"establishments", index.size()}};
  return w.finish(cfg);
}

inline int run_wages(const RunConfig& cfg) {
  WagesSection sec = cfg.wages.value_or(WagesSection{});
  StageWriter w(cfg.output_dir, "extract wages", "wages");
  w.input(cfg.corpus);
  if (sec.overrides) w.input(*sec.overrides);
  auto ads = load_corpus(cfg).records;
  std::map<std::string, std::vector<WageOverride>> overrides;
  if (sec.overrides) overrides = load_wage_overrides(*sec.overrides);
  auto rows = parallel_map(ads.size(), cfg.workers, [&](std::size_t i) {
    auto it = overrides.find(ads[i].id);
    return extract_wage(ads[i], sec.wage, it == overrides.end() ? nullptr : &it->second);
  });
  std::string out, diags;
  for (auto& r : rows) {
    out += to_json(r).dump() + "\n";
    for (auto& d : r.diagnostics) diags += nlohmann::ordered_json{{"ad_id", r.ad_id}, {"message", d}}.dump() + "\n";
  }
  w.write("wages.jsonl", out);
  w.write("parse_diagnostics.jsonl", diags);
  w.parameters() = {{"hours_per_year", sec.wage.hours_per_year}, {"weeks_per_year", sec.wage.weeks_per_year},
                    {"months_per_year", sec.wage.months_per_year}, {"outlier_min", sec.wage.outlier_min},
                    {"outlier_max", sec.wage.outlier_max}};
  return w.finish(cfg);
}

inline int run_tags(const RunConfig& cfg) {
  if (!cfg.tags) throw ArgumentError("config has no \"tags\" section");
  StageWriter w(cfg.output_dir, "extract tags", "tags");
  w.input(cfg.corpus);
  std::vector<TagClass> classes;
  for (auto& dir : cfg.tags->classes) {
    for (auto f : {"keywords.txt", "negative_rules.txt", "positive_rules.txt", "predictions.jsonl"})
      if (fs::exists(dir / f)) w.input(dir / f);
    classes.push_back(TagClass::load(dir, cfg.tags->radius));
  }
  auto ads = load_corpus(cfg).records;
  auto rows = parallel_map(ads.size(), cfg.workers, [&](std::size_t i) { return to_json(tag_ad(ads[i], classes)); });
  w.write("tags.jsonl", jsonl(rows, [](const nlohmann::ordered_json& j) { return j; }));
  w.parameters() = {{"radius", cfg.tags->radius}};
  return w.finish(cfg);
}

inline int run_dict(const RunConfig& cfg) {
  if (cfg.dictionaries.empty()) throw ArgumentError("config has no \"dictionaries\"");
  StageWriter w(cfg.output_dir, "extract dict", "dict");
  w.input(cfg.corpus);
  auto ads = load_corpus(cfg).records;
  nlohmann::ordered_json versions = nlohmann::ordered_json::object();
  for (auto& d : cfg.dictionaries) {
    w.input(d.path);
    auto loaded = load_dictionary(d.path, d.schema);
    for (auto& s : loaded.skipped)
      w.parameters()["skipped_rows"][d.name].push_back({{"line", s.line}, {"reason", s.reason}});
    std::size_t excluded = 0;
    if (d.exclusions) {
      w.input(*d.exclusions);
      excluded = apply_exclusions(loaded.entries, read_term_list(*d.exclusions));
    }
    std::vector<AssociationRule> rules;
    if (d.rules) {
      w.input(*d.rules);
      rules = load_rules(*d.rules);
    }
    auto matcher = Matcher::compile(std::move(loaded.entries), std::move(rules));
    versions[d.name] = {{"fnv1a64", hex64(fnv1a64(read_file(d.path)))},
                        {"entries", matcher.entries().size()},
                        {"rules", matcher.rules().size()},
                        {"excluded_forms", excluded}};
    auto per_ad = parallel_map(ads.size(), cfg.workers, [&](std::size_t i) {
      std::string out;
      for (auto& h : matcher.scan(ads[i].body, ads[i].id)) {
        auto j = to_json(h);
        j["label"] = h.label;
        out += j.dump() + "\n";
      }
      return out;
    });
    std::string all;
    for (auto& s : per_ad) all += s;
    w.write(d.name + ".jsonl", all);
  }
  w.parameters()["dictionaries"] = versions;
  return w.finish(cfg);
}

// ---------------------------------------------------------------------------
// Aggregation over whatever stage outputs exist

namespace detail {

inline std::vector<nlohmann::json> read_jsonl(const fs::path& p) {
  std::vector<nlohmann::json> out;
  for (auto& line : split_lines(read_file(p)))
    if (!trim(line).empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}

}  // namespace detail

inline int run_aggregate(const RunConfig& cfg) {
  StageWriter w(cfg.output_dir, "aggregate", "aggregate");
  w.input(cfg.corpus);
  auto ads = load_corpus(cfg).records;
  const auto& sec = cfg.aggregate;
  auto index = build_maj(ads, sec.anomalous_months, sec.fallback_offset);

  std::map<std::string, AdKeys> keys;
  std::vector<Feature> features;
  for (auto& ad : ads) {
    keys[ad.id].state = ad.state;
    try {
      features.push_back({ad.id, "readability", "", flesch_reading_ease(ad.body), false});
    } catch (const ArgumentError&) {
    }
  }
  // one feature per (ad, family, code)
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  auto categorical = [&](const std::string& ad, const std::string& family, const std::string& code) {
    if (seen.insert({ad, family, code}).second) features.push_back({ad, family, code, std::nullopt, false});
  };
  std::vector<std::string> used;
  auto stage_file = [&](const char* dir, const std::string& file) -> std::optional<fs::path> {
    auto p = cfg.output_dir / dir / file;
    if (!fs::exists(p)) return std::nullopt;
    w.input(p);
    used.push_back(std::string(dir) + "/" + file);
    return p;
  };
  for (auto [dir, family] : {std::pair{"skills", "skill"}, std::pair{"tasks", "task"}})
    if (auto p = stage_file(dir, "matches.jsonl"))
      for (auto& j : detail::read_jsonl(*p))
        if (!j.contains("retained") || j["retained"].get<bool>())
          categorical(j["ad_id"], family, j["label_code"]);
  if (auto p = stage_file("titles", "titles.jsonl"))
    for (auto& j : detail::read_jsonl(*p)) {
      const std::string ad = j["ad_id"];
      keys[ad].soc = j["soc_code"].get<std::string>();
      categorical(ad, "occupation", j["onet_code"]);
      features.push_back({ad, "hierarchy", "", j["hierarchy"].get<double>(), false});
      for (auto& f : j["features"]) categorical(ad, "title_feature", f);
    }
  if (auto p = stage_file("firms", "firms.jsonl"))
    for (auto& j : detail::read_jsonl(*p)) {
      const std::string ad = j["ad_id"];
      if (!j["naics"].is_null()) keys[ad].naics = j["naics"].get<std::string>();
      categorical(ad, "firm_tier", j["tier"]);
    }
  if (auto p = stage_file("wages", "wages.jsonl"))
    for (auto& j : detail::read_jsonl(*p))
      if (!j["provenance"].is_null())
        features.push_back({j["ad_id"], "wage_annual", "", j["annualized"].get<double>(), j["outlier"].get<bool>()});
  if (auto p = stage_file("tags", "tags.jsonl"))
    for (auto& j : detail::read_jsonl(*p))
      for (auto& [cls, v] : j["tags"].items())
        if (v.get<bool>()) categorical(j["ad_id"], "tag", cls);
  for (auto& d : cfg.dictionaries)
    if (auto p = stage_file("dict", d.name + ".jsonl"))
      for (auto& j : detail::read_jsonl(*p)) categorical(j["ad_id"], "dict:" + d.name, j["uci"]);

  AggregateOptions opt;
  opt.exclude_outliers = sec.exclude_outliers;
  const auto spec = parse_group_spec(sec.group_by);
  Aggregator agg(spec, index, keys, opt);
  agg.add(features);
  auto rows = agg.finish();

  w.write("aggregate.csv", aggregate_csv(rows, spec, opt));
  w.write("aggregate.jsonl", jsonl(rows, [&](const AggregateRow& r) { return to_json(r, spec, opt); }));
  w.write("top_k.csv", aggregate_csv(top_k(rows, sec.top_k), spec, opt));
  w.write("maj.jsonl", jsonl(index.entries(), [](const MajEntry& e) {
            return nlohmann::ordered_json{{"ad_id", e.ad_id}, {"start_month", e.start.str()},
                                          {"end_month", e.end.str()}, {"adjusted", e.adjusted}};
          }));
  nlohmann::ordered_json months = nlohmann::ordered_json::array();
  for (auto& m : sec.anomalous_months) months.push_back(m.str());
  nlohmann::ordered_json thresholds = nlohmann::ordered_json::object();
  if (cfg.skills) thresholds["skills"] = cfg.skills->threshold;
  if (cfg.tasks) thresholds["tasks"] = cfg.tasks->threshold;
  if (cfg.firms) thresholds["firms"] = cfg.firms->threshold;
  nlohmann::ordered_json dict_versions = nlohmann::ordered_json::object();
  for (auto& d : cfg.dictionaries) dict_versions[d.name] = hex64(fnv1a64(read_file(d.path)));
  w.parameters() = {{"group_spec", sec.group_by},
                    {"anomalous_months", months},
                    {"fallback_offset", sec.fallback_offset},
                    {"exclude_outliers", sec.exclude_outliers},
                    {"top_k", sec.top_k},
                    {"thresholds", thresholds},
                    {"dictionary_versions", dict_versions},
                    {"feature_sources", used},
                    {"excluded_outliers", agg.excluded_outliers()},
                    {"unknown_ad_features", agg.unknown_ad_features()}};
  if (agg.unknown_ad_features() > 0)
    w.error({{"kind", "unknown_ad"}, {"count", agg.unknown_ad_features()},
             {"message", "features referencing ads missing from the corpus were excluded"}});
  return w.finish(cfg);
}

/// Every configured stage, then aggregation. Returns the worst status.
inline int run_all(const RunConfig& cfg) {
  int status = run_ingest(cfg);
  auto step = [&](int s) { status = std::max(status, s); };
  step(run_segment(cfg));
  if (cfg.skills) step(run_match(cfg, PipelineTask::skill));
  if (cfg.tasks) step(run_match(cfg, PipelineTask::task));
  if (cfg.titles) step(run_titles(cfg));
  if (cfg.firms) step(run_firms(cfg));
  step(run_wages(cfg));
  if (cfg.tags) step(run_tags(cfg));
  if (!cfg.dictionaries.empty()) step(run_dict(cfg));
  step(run_aggregate(cfg));
  return status;
}

}  // namespace jobtext::cli
