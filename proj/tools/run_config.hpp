#pragma once

// Run configuration for the jobtext CLI. JSON only; relative paths resolve
// against the config file's directory.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobtext/error.hpp"
#include "jobtext/knowledge_map.hpp"
#include "jobtext/month.hpp"
#include "jobtext/stage_pipeline.hpp"
#include "jobtext/text.hpp"
#include "jobtext/wage_extract.hpp"

namespace jobtext::cli {

namespace fs = std::filesystem;

struct PipelineSection {
  std::string filter = "cue";  // cue | all | external
  fs::path cues, external_labels, label_sets, label_vectors, sentence_vectors;
  double threshold = 0.87;
  LabelMode label_mode = LabelMode::member_max;
  bool keep_below_threshold = false;
};

struct TitlesSection {
  fs::path reference, title_vectors, hierarchy_base, hierarchy_stepper;
  std::optional<fs::path> query_vectors, features;
};

struct FirmsSection {
  fs::path establishments;
  std::optional<fs::path> spans;
  double threshold = 0.8;
};

struct WagesSection {
  std::optional<fs::path> overrides;
  WageConfig wage;
};

struct TagsSection {
  std::vector<fs::path> classes;
  std::size_t radius = 6;
};

struct DictSpec {
  std::string name;
  fs::path path;
  DictionarySchema schema = DictionarySchema::generic;
  std::optional<fs::path> rules, exclusions;
};

struct AggregateSection {
  std::string group_by = "month";
  std::set<YearMonth> anomalous_months = {YearMonth(2015, 1), YearMonth(2016, 1), YearMonth(2017, 1)};
  int fallback_offset = 2;
  bool exclude_outliers = true;
  std::size_t top_k = 15;
};

struct RunConfig {
  std::optional<fs::path> source;  // config file, when one was given
  fs::path corpus;
  fs::path output_dir = "out";
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool strict = false;
  std::optional<PipelineSection> skills, tasks;
  std::optional<TitlesSection> titles;
  std::optional<FirmsSection> firms;
  std::optional<WagesSection> wages;
  std::optional<TagsSection> tags;
  std::vector<DictSpec> dictionaries;
  AggregateSection aggregate;
  nlohmann::json raw = nlohmann::json::object();
};

/// Thrown with every validation problem at once.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::vector<std::string>& problems) : Error(render(problems)), problems_(problems) {}
  [[nodiscard]] const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string render(const std::vector<std::string>& p) {
    std::string s = "invalid configuration (" + std::to_string(p.size()) + " problem" + (p.size() == 1 ? "" : "s") + ")";
    for (auto& x : p) s += "\n  - " + x;
    return s;
  }
  std::vector<std::string> problems_;
};

namespace detail {

class Reader {
 public:
  Reader(fs::path base, std::vector<std::string>& problems) : base_(std::move(base)), problems_(problems) {}

  std::optional<fs::path> path(const nlohmann::json& j, const std::string& where, const char* key, bool required) {
    if (!j.contains(key) || j[key].is_null()) {
      if (required) problems_.push_back(where + "." + key + ": required");
      return std::nullopt;
    }
    if (!j[key].is_string()) {
      problems_.push_back(where + "." + key + ": expected a path string");
      return std::nullopt;
    }
    fs::path p = j[key].get<std::string>();
    if (p.is_relative()) p = base_ / p;
    p = p.lexically_normal();
    if (!fs::exists(p)) problems_.push_back(where + "." + key + ": path not found: " + p.string());
    return p;
  }

  template <typename T>
  T value(const nlohmann::json& j, const std::string& where, const char* key, T fallback) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
      return j[key].get<T>();
    } catch (const nlohmann::json::exception&) {
      problems_.push_back(where + "." + key + ": wrong type");
      return fallback;
    }
  }

  double threshold(const nlohmann::json& j, const std::string& where, const char* key, double fallback) {
    const double t = value<double>(j, where, key, fallback);
    if (!(t > 0 && t <= 1)) problems_.push_back(where + "." + key + ": threshold must be in (0, 1]");
    return t;
  }

  std::vector<std::string>& problems() { return problems_; }

 private:
  fs::path base_;
  std::vector<std::string>& problems_;
};

inline PipelineSection read_pipeline(Reader& r, const nlohmann::json& j, const std::string& where, double default_t) {
  PipelineSection s;
  s.filter = r.value<std::string>(j, where, "filter", "cue");
  if (s.filter == "cue") {
    if (auto p = r.path(j, where, "cues", true)) s.cues = *p;
  } else if (s.filter == "external") {
    if (auto p = r.path(j, where, "external_labels", true)) s.external_labels = *p;
  } else if (s.filter != "all") {
    r.problems().push_back(where + ".filter: expected cue, all or external");
  }
  if (auto p = r.path(j, where, "label_sets", true)) s.label_sets = *p;
  if (auto p = r.path(j, where, "label_vectors", true)) s.label_vectors = *p;
  if (auto p = r.path(j, where, "sentence_vectors", true)) s.sentence_vectors = *p;
  s.threshold = r.threshold(j, where, "threshold", default_t);
  const auto mode = r.value<std::string>(j, where, "label_mode", "member_max");
  if (mode == "title_vector")
    s.label_mode = LabelMode::title_vector;
  else if (mode != "member_max")
    r.problems().push_back(where + ".label_mode: expected member_max or title_vector");
  s.keep_below_threshold = r.value<bool>(j, where, "keep_below_threshold", false);
  return s;
}

}  // namespace detail

/// Validates `j` and returns the config; throws ConfigError listing every
/// problem found.
inline RunConfig parse_config(const nlohmann::json& j, const fs::path& base, std::optional<fs::path> source = {}) {
  std::vector<std::string> problems;
  detail::Reader r(base, problems);
  RunConfig c;
  c.source = std::move(source);
  c.raw = j;
  if (!j.is_object()) throw ConfigError({"top level must be a JSON object"});

  if (auto p = r.path(j, "config", "corpus", false)) c.corpus = *p;
  if (j.contains("output_dir")) {
    fs::path o = r.value<std::string>(j, "config", "output_dir", "out");
    c.output_dir = o.is_relative() ? (base / o).lexically_normal() : o;
  }
  c.seed = r.value<std::uint64_t>(j, "config", "seed", 0);
  c.workers = r.value<std::size_t>(j, "config", "workers", 1);
  if (c.workers < 1) problems.push_back("config.workers: must be >= 1");
  c.strict = r.value<bool>(j, "config", "strict", false);

  if (j.contains("skills")) c.skills = detail::read_pipeline(r, j["skills"], "skills", default_threshold(PipelineTask::skill));
  if (j.contains("tasks")) c.tasks = detail::read_pipeline(r, j["tasks"], "tasks", default_threshold(PipelineTask::task));

  if (j.contains("titles")) {
    const auto& t = j["titles"];
    TitlesSection s;
    if (auto p = r.path(t, "titles", "reference", true)) s.reference = *p;
    if (auto p = r.path(t, "titles", "title_vectors", true)) s.title_vectors = *p;
    if (auto p = r.path(t, "titles", "hierarchy_base", true)) s.hierarchy_base = *p;
    if (auto p = r.path(t, "titles", "hierarchy_stepper", true)) s.hierarchy_stepper = *p;
    s.query_vectors = r.path(t, "titles", "query_vectors", false);
    s.features = r.path(t, "titles", "features", false);
    c.titles = s;
  }
  if (j.contains("firms")) {
    const auto& f = j["firms"];
    FirmsSection s;
    if (auto p = r.path(f, "firms", "establishments", true)) s.establishments = *p;
    s.spans = r.path(f, "firms", "spans", false);
    s.threshold = r.threshold(f, "firms", "threshold", 0.8);
    c.firms = s;
  }
  if (j.contains("wages")) {
    const auto& w = j["wages"];
    WagesSection s;
    s.overrides = r.path(w, "wages", "overrides", false);
    s.wage.hours_per_year = r.value<double>(w, "wages", "hours_per_year", s.wage.hours_per_year);
    s.wage.weeks_per_year = r.value<double>(w, "wages", "weeks_per_year", s.wage.weeks_per_year);
    s.wage.months_per_year = r.value<double>(w, "wages", "months_per_year", s.wage.months_per_year);
    s.wage.outlier_min = r.value<double>(w, "wages", "outlier_min", s.wage.outlier_min);
    s.wage.outlier_max = r.value<double>(w, "wages", "outlier_max", s.wage.outlier_max);
    s.wage.hourly_below = r.value<double>(w, "wages", "hourly_below", s.wage.hourly_below);
    s.wage.annual_from = r.value<double>(w, "wages", "annual_from", s.wage.annual_from);
    try {
      s.wage.validate();
    } catch (const Error& e) {
      problems.push_back(std::string("wages: ") + e.what());
    }
    c.wages = s;
  }
  if (j.contains("tags")) {
    const auto& t = j["tags"];
    TagsSection s;
    s.radius = r.value<std::size_t>(t, "tags", "radius", 6);
    if (s.radius < 1) problems.push_back("tags.radius: must be >= 1");
    if (!t.contains("classes") || !t["classes"].is_array() || t["classes"].empty()) {
      problems.push_back("tags.classes: expected a non-empty array of class directories");
    } else {
      for (std::size_t i = 0; i < t["classes"].size(); ++i) {
        nlohmann::json holder = {{"dir", t["classes"][i]}};
        if (auto p = r.path(holder, "tags.classes[" + std::to_string(i) + "]", "dir", true)) s.classes.push_back(*p);
      }
    }
    c.tags = s;
  }
  if (j.contains("dictionaries")) {
    if (!j["dictionaries"].is_array()) {
      problems.push_back("dictionaries: expected an array");
    } else {
      std::set<std::string> names;
      for (std::size_t i = 0; i < j["dictionaries"].size(); ++i) {
        const auto& d = j["dictionaries"][i];
        const auto where = "dictionaries[" + std::to_string(i) + "]";
        DictSpec s;
        s.name = r.value<std::string>(d, where, "name", "");
        if (s.name.empty()) problems.push_back(where + ".name: required");
        if (!names.insert(s.name).second) problems.push_back(where + ".name: duplicate '" + s.name + "'");
        if (auto p = r.path(d, where, "path", true)) s.path = *p;
        try {
          s.schema = parse_schema(r.value<std::string>(d, where, "schema", "generic"));
        } catch (const Error& e) {
          problems.push_back(where + ".schema: " + e.what());
        }
        s.rules = r.path(d, where, "rules", false);
        s.exclusions = r.path(d, where, "exclusions", false);
        c.dictionaries.push_back(std::move(s));
      }
    }
  }
  if (j.contains("aggregate")) {
    const auto& a = j["aggregate"];
    c.aggregate.group_by = r.value<std::string>(a, "aggregate", "group_by", "month");
    c.aggregate.fallback_offset = r.value<int>(a, "aggregate", "fallback_offset", 2);
    if (c.aggregate.fallback_offset < 0) problems.push_back("aggregate.fallback_offset: must be >= 0");
    c.aggregate.exclude_outliers = r.value<bool>(a, "aggregate", "exclude_outliers", true);
    c.aggregate.top_k = r.value<std::size_t>(a, "aggregate", "top_k", 15);
    if (c.aggregate.top_k < 1) problems.push_back("aggregate.top_k: must be >= 1");
    if (a.contains("anomalous_months")) {
      c.aggregate.anomalous_months.clear();
      for (auto& m : a["anomalous_months"]) {
        auto ym = m.is_string() ? YearMonth::parse(m.get<std::string>()) : std::nullopt;
        if (!ym)
          problems.push_back("aggregate.anomalous_months: bad month " + m.dump());
        else
          c.aggregate.anomalous_months.insert(*ym);
      }
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

inline RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("config file not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path(), path);
}

}  // namespace jobtext::cli
