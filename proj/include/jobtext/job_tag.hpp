#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobtext/corpus.hpp"
#include "jobtext/error.hpp"
#include "jobtext/knowledge_map.hpp"
#include "jobtext/text.hpp"

namespace jobtext {

enum class TagDecision { negative, positive };

/// One tagging class: keywords, a token radius and ordered cue lists.
/// Negative cues are checked before positive ones; no cue means negative.
class TagClass {
 public:
  TagClass(std::string name, std::vector<std::string> keywords, std::vector<std::string> negative_cues,
           std::vector<std::string> positive_cues, std::size_t radius = 6)
      : name_(std::move(name)), radius_(radius) {
    if (radius_ < 1) throw ArgumentError("tag class '" + name_ + "': window radius must be >= 1");
    std::vector<MapEntry> entries;
    std::set<std::string> seen;
    for (auto& k : keywords) {
      auto norm = join(token_strings(k), " ");
      if (!norm.empty() && seen.insert(norm).second) entries.push_back(MapEntry{{k}, norm, {}});
    }
    if (entries.empty()) throw InputError("tag class '" + name_ + "' has no keywords");
    keywords_ = Matcher::compile(std::move(entries));
    for (auto& c : negative_cues)
      if (auto t = token_strings(c); !t.empty()) negative_.push_back(std::move(t));
    for (auto& c : positive_cues)
      if (auto t = token_strings(c); !t.empty()) positive_.push_back(std::move(t));
  }

  /// Directory layout: keywords.txt, negative_rules.txt, positive_rules.txt
  /// (one term per line, '#' comments) and optional predictions.jsonl.
  static TagClass load(const std::filesystem::path& dir, std::size_t radius = 6) {
    auto list = [&](const char* f, bool required) -> std::vector<std::string> {
      const auto p = dir / f;
      if (!std::filesystem::exists(p)) {
        if (required) throw InputError(p.string() + ": missing");
        return {};
      }
      return read_term_list(p);
    };
    TagClass c(dir.filename().string(), list("keywords.txt", true), list("negative_rules.txt", false),
               list("positive_rules.txt", false), radius);
    if (std::filesystem::exists(dir / "predictions.jsonl")) c.load_predictions(dir / "predictions.jsonl");
    return c;
  }

  /// External decisions: JSONL {ad_id, window_idx, decision}. They take
  /// precedence over the rule engine for the windows they name.
  void load_predictions(const std::filesystem::path& path) {
    const auto lines = split_lines(read_file(path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      const auto where = path.string() + ":" + std::to_string(i + 1);
      try {
        auto j = nlohmann::json::parse(lines[i]);
        const auto d = j.at("decision");
        TagDecision dec;
        if (d.is_boolean())
          dec = d.get<bool>() ? TagDecision::positive : TagDecision::negative;
        else if (d == "positive")
          dec = TagDecision::positive;
        else if (d == "negative")
          dec = TagDecision::negative;
        else
          throw InputError(where + ": decision must be positive or negative");
        predictions_[{j.at("ad_id").get<std::string>(), j.at("window_idx").get<std::size_t>()}] = dec;
      } catch (const nlohmann::json::exception& e) {
        throw InputError(where + ": " + e.what());
      }
    }
  }

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] std::size_t radius() const { return radius_; }
  [[nodiscard]] const Matcher& keywords() const { return keywords_; }
  [[nodiscard]] const std::vector<std::vector<std::string>>& negative_cues() const { return negative_; }
  [[nodiscard]] const std::vector<std::vector<std::string>>& positive_cues() const { return positive_; }
  [[nodiscard]] std::optional<TagDecision> prediction(const std::string& ad_id, std::size_t window_idx) const {
    auto it = predictions_.find({ad_id, window_idx});
    if (it == predictions_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::string name_;
  std::size_t radius_;
  Matcher keywords_;
  std::vector<std::vector<std::string>> negative_, positive_;
  std::map<std::pair<std::string, std::size_t>, TagDecision> predictions_;
};

struct TagWindow {
  std::string keyword;
  std::size_t keyword_start = 0, keyword_end = 0;  // token offsets in the text
  std::size_t window_start = 0, window_end = 0;
  std::vector<std::string> tokens;  // window tokens

  [[nodiscard]] std::string text() const { return join(tokens, " "); }
};

/// One window per keyword occurrence: the keyword plus up to `radius`
/// tokens each side, cut at the text edges.
inline std::vector<TagWindow> extract_windows(std::string_view text, const TagClass& cls) {
  const auto toks = token_strings(text);
  std::vector<TagWindow> out;
  for (auto& hit : cls.keywords().scan_tokens(toks)) {
    TagWindow w;
    w.keyword = hit.term;
    w.keyword_start = hit.start_token;
    w.keyword_end = hit.end_token;
    w.window_start = hit.start_token >= cls.radius() ? hit.start_token - cls.radius() : 0;
    w.window_end = std::min(toks.size(), hit.end_token + cls.radius());
    w.tokens.assign(toks.begin() + static_cast<std::ptrdiff_t>(w.window_start),
                    toks.begin() + static_cast<std::ptrdiff_t>(w.window_end));
    out.push_back(std::move(w));
  }
  return out;
}

struct WindowDecision {
  TagDecision decision = TagDecision::negative;
  std::string rule;  // "negative:<cue>", "positive:<cue>", "default" or "external"
};

namespace detail {

inline bool contains_seq(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace detail

inline WindowDecision classify_window(const TagWindow& w, const TagClass& cls) {
  for (auto& cue : cls.negative_cues())
    if (detail::contains_seq(w.tokens, cue)) return {TagDecision::negative, "negative:" + join(cue, " ")};
  for (auto& cue : cls.positive_cues())
    if (detail::contains_seq(w.tokens, cue)) return {TagDecision::positive, "positive:" + join(cue, " ")};
  return {TagDecision::negative, "default"};
}

struct TagResult {
  std::string ad_id;
  std::string class_name;
  std::size_t window_index = 0;
  TagWindow window;
  WindowDecision decision;
};

struct AdTags {
  std::string ad_id;
  std::map<std::string, bool> positive;  // class name -> any window positive
  std::vector<TagResult> windows;
};

/// Tags the ad body; an ad is positive for a class when any window is.
inline AdTags tag_ad(const JobAdRecord& ad, const std::vector<TagClass>& classes) {
  AdTags out;
  out.ad_id = ad.id;
  for (auto& cls : classes) {
    bool any = false;
    auto windows = extract_windows(ad.body, cls);
    for (std::size_t i = 0; i < windows.size(); ++i) {
      TagResult r{ad.id, cls.name(), i, std::move(windows[i]), {}};
      if (auto p = cls.prediction(ad.id, i))
        r.decision = {*p, "external"};
      else
        r.decision = classify_window(r.window, cls);
      any = any || r.decision.decision == TagDecision::positive;
      out.windows.push_back(std::move(r));
    }
    out.positive[cls.name()] = any;
  }
  return out;
}

inline nlohmann::ordered_json to_json(const TagResult& r) {
  return {{"ad_id", r.ad_id},
          {"class", r.class_name},
          {"window_idx", r.window_index},
          {"keyword", r.window.keyword},
          {"start_token", r.window.keyword_start},
          {"end_token", r.window.keyword_end},
          {"window", r.window.text()},
          {"decision", r.decision.decision == TagDecision::positive ? "positive" : "negative"},
          {"rule", r.decision.rule}};
}

inline nlohmann::ordered_json to_json(const AdTags& t) {
  nlohmann::ordered_json tags = nlohmann::ordered_json::object();
  for (auto& [k, v] : t.positive) tags[k] = v;
  nlohmann::ordered_json windows = nlohmann::ordered_json::array();
  for (auto& w : t.windows) windows.push_back(to_json(w));
  return {{"ad_id", t.ad_id}, {"tags", tags}, {"windows", windows}};
}

}  // namespace jobtext
