#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobtext/csv.hpp"
#include "jobtext/embed_store.hpp"
#include "jobtext/error.hpp"
#include "jobtext/knowledge_map.hpp"
#include "jobtext/text.hpp"

namespace jobtext {

/// Lowercase, drop bracketed segments such as "(Chicago, IL)" or "[REQ-123]",
/// delete apostrophes, turn other punctuation into spaces, collapse whitespace.
inline std::string normalize_title(std::string_view title) {
  std::string out;
  int depth = 0;
  bool pending_space = false;
  for (char ch : title) {
    if (ch == '(' || ch == '[' || ch == '{') {
      ++depth;
      pending_space = true;
      continue;
    }
    if (ch == ')' || ch == ']' || ch == '}') {
      if (depth > 0) --depth;
      pending_space = true;
      continue;
    }
    if (depth > 0) continue;
    if (ch == '\'') continue;
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      if (pending_space && !out.empty()) out += ' ';
      pending_space = false;
      out += ascii_lower(ch);
    } else {
      pending_space = true;
    }
  }
  return out;
}

struct ReferenceTitle {
  std::string onet_code;
  std::string soc_code;
  std::string title;
};

/// Embedding id of a reference title: "<onet_code>|<normalized title>".
inline std::string reference_title_id(const ReferenceTitle& r) { return r.onet_code + "|" + normalize_title(r.title); }

/// Reference CSV with columns onet_code, soc_code, title. An empty soc_code
/// is derived from the O*NET-SOC code ("13-2099.01" -> "13-2099").
inline std::vector<ReferenceTitle> load_reference_titles(const std::filesystem::path& path) {
  auto t = csv::Table::load(path);
  const auto c_onet = t.require("onet_code"), c_soc = t.require("soc_code"), c_title = t.require("title");
  std::vector<ReferenceTitle> out;
  for (auto& row : t.rows()) {
    ReferenceTitle r{std::string(trim(csv::Table::cell(row, c_onet))), std::string(trim(csv::Table::cell(row, c_soc))),
                     std::string(trim(csv::Table::cell(row, c_title)))};
    if (r.onet_code.empty() || normalize_title(r.title).empty())
      throw InputError(t.source() + ":" + std::to_string(row.line) + ": reference title needs onet_code and title");
    if (r.soc_code.empty()) r.soc_code = r.onet_code.substr(0, std::min<std::size_t>(7, r.onet_code.size()));
    out.push_back(std::move(r));
  }
  return out;
}

struct CodePair {
  std::string soc_code;
  std::string onet_code;

  auto operator<=>(const CodePair&) const = default;
};

/// Exact-title table plus the reference title embeddings used for the
/// nearest-neighbour fallback and for splitting multi-code exact hits.
class TitleIndex {
 public:
  TitleIndex(const std::vector<ReferenceTitle>& refs, EmbeddingMatrix title_vectors)
      : vectors_(std::move(title_vectors)) {
    for (auto& r : refs) {
      auto key = normalize_title(r.title);
      auto& codes = exact_[key];
      CodePair cp{r.soc_code, r.onet_code};
      if (std::find(codes.begin(), codes.end(), cp) == codes.end()) codes.push_back(cp);
      id_to_code_[reference_title_id(r)] = cp;
    }
    for (auto& [k, codes] : exact_) std::sort(codes.begin(), codes.end(), by_onet);
    for (std::size_t i = 0; i < vectors_.size(); ++i) {
      auto it = id_to_code_.find(vectors_.id(i));
      if (it == id_to_code_.end())
        throw InputError("title vector '" + vectors_.id(i) + "' does not match any reference title");
      rows_by_code_[it->second.onet_code].push_back(i);
    }
  }

  [[nodiscard]] bool empty() const { return exact_.empty(); }
  [[nodiscard]] const EmbeddingMatrix& vectors() const { return vectors_; }
  [[nodiscard]] const std::vector<CodePair>* exact(const std::string& normalized) const {
    auto it = exact_.find(normalized);
    return it == exact_.end() ? nullptr : &it->second;
  }
  [[nodiscard]] const CodePair& code_of_row(std::size_t row) const { return id_to_code_.at(vectors_.id(row)); }
  [[nodiscard]] const std::vector<std::size_t>* rows_for(const std::string& onet) const {
    auto it = rows_by_code_.find(onet);
    return it == rows_by_code_.end() ? nullptr : &it->second;
  }

 private:
  static bool by_onet(const CodePair& a, const CodePair& b) {
    return a.onet_code != b.onet_code ? a.onet_code < b.onet_code : a.soc_code < b.soc_code;
  }
  EmbeddingMatrix vectors_;
  std::map<std::string, std::vector<CodePair>> exact_;
  std::map<std::string, CodePair> id_to_code_;
  std::map<std::string, std::vector<std::size_t>> rows_by_code_;
};

enum class MatchKind { exact, nn };

struct TitleCandidate {
  CodePair code;
  std::optional<double> score;
};

struct TitleResult {
  std::string soc_code;
  std::string onet_code;
  MatchKind match_kind = MatchKind::exact;
  std::optional<double> nn_score;  // absent for exact matches
  int hierarchy = 0;
  std::vector<std::string> features;  // sorted, unique
};

struct TitleCoding {
  TitleResult result;
  std::vector<TitleCandidate> candidates;
};

/// Exact lookup on the normalized title, then nearest neighbour with no
/// minimum similarity. With several exact codes the one owning the reference
/// embedding closest to `query` wins (ties and missing query: smallest code);
/// every exact code is reported in `candidates`.
inline TitleCoding code_title(std::string_view title, const TitleIndex& index,
                              std::optional<std::span<const float>> query = std::nullopt, std::size_t nn_k = 5) {
  if (index.empty()) throw ArgumentError("code_title: empty title index");
  const auto key = normalize_title(title);
  if (key.empty()) throw ArgumentError("code_title: empty title");
  TitleCoding out;
  if (const auto* codes = index.exact(key)) {
    std::size_t pick = 0;
    for (auto& c : *codes) out.candidates.push_back({c, std::nullopt});
    if (codes->size() > 1 && query && !index.vectors().empty()) {
      double best = -2;
      for (std::size_t i = 0; i < codes->size(); ++i) {
        const auto* rows = index.rows_for((*codes)[i].onet_code);
        if (!rows) continue;
        double s = -2;
        for (auto r : *rows) s = std::max(s, cosine(index.vectors().row(r), *query));
        out.candidates[i].score = s;
        if (s > best) {
          best = s;
          pick = i;
        }
      }
    }
    out.result.soc_code = (*codes)[pick].soc_code;
    out.result.onet_code = (*codes)[pick].onet_code;
    out.result.match_kind = MatchKind::exact;
    return out;
  }
  if (!query) throw InputError("title '" + std::string(title) + "' has no exact match and no title vector");
  if (index.vectors().empty()) throw InputError("title index has no reference vectors for nearest-neighbour search");
  // Candidates are distinct codes, each scored by its closest reference title.
  auto nn = nearest(*query, index.vectors(), index.vectors().size());
  std::set<std::string> seen;
  for (auto& n : nn) {
    if (out.candidates.size() == std::max<std::size_t>(nn_k, 1)) break;
    const auto& code = index.code_of_row(n.row);
    if (seen.insert(code.onet_code).second) out.candidates.push_back({code, n.score});
  }
  out.result.soc_code = out.candidates.front().code.soc_code;
  out.result.onet_code = out.candidates.front().code.onet_code;
  out.result.match_kind = MatchKind::nn;
  out.result.nn_score = nn.front().score;
  return out;
}

// ---------------------------------------------------------------------------
// Hierarchy

/// Base map (term -> level in {-10, 0, 10, ..., 60}) and stepper map
/// (term -> adjustment in [-7, 4]).
class HierarchyMaps {
 public:
  struct Term {
    std::string term;
    int value;
    std::string label;
  };

  HierarchyMaps(const std::vector<Term>& base, const std::vector<Term>& stepper) {
    static constexpr int kBaseLevels[] = {-10, 0, 10, 20, 30, 40, 50, 60};
    std::vector<MapEntry> b, s;
    for (auto& t : base) {
      if (std::find(std::begin(kBaseLevels), std::end(kBaseLevels), t.value) == std::end(kBaseLevels))
        throw InputError("base hierarchy term '" + t.term + "' has value " + std::to_string(t.value) +
                         " outside {-10, 0, 10, ..., 60}");
      b.push_back(MapEntry{{t.term}, std::to_string(t.value), t.label});
    }
    for (auto& t : stepper) {
      if (t.value < -7 || t.value > 4)
        throw InputError("stepper term '" + t.term + "' has value " + std::to_string(t.value) + " outside [-7, 4]");
      s.push_back(MapEntry{{t.term}, std::to_string(t.value), t.label});
    }
    base_ = Matcher::compile(std::move(b));
    stepper_ = Matcher::compile(std::move(s));
  }

  /// CSV with columns term, value, label.
  static std::vector<Term> load_terms(const std::filesystem::path& path) {
    auto t = csv::Table::load(path);
    const auto c_term = t.require("term"), c_val = t.require("value");
    const auto c_label = t.find("label");
    std::vector<Term> out;
    for (auto& row : t.rows()) {
      Term term{std::string(trim(csv::Table::cell(row, c_term))), 0,
                c_label ? std::string(trim(csv::Table::cell(row, *c_label))) : std::string()};
      if (term.term.empty()) continue;
      try {
        std::size_t used = 0;
        auto raw = std::string(trim(csv::Table::cell(row, c_val)));
        term.value = std::stoi(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
      } catch (const std::exception&) {
        throw InputError(t.source() + ":" + std::to_string(row.line) + ": value must be an integer");
      }
      out.push_back(std::move(term));
    }
    return out;
  }

  static HierarchyMaps load(const std::filesystem::path& base, const std::filesystem::path& stepper) {
    return HierarchyMaps(load_terms(base), load_terms(stepper));
  }

  [[nodiscard]] const Matcher& base() const { return base_; }
  [[nodiscard]] const Matcher& stepper() const { return stepper_; }

 private:
  Matcher base_;
  Matcher stepper_;
};

struct HierarchyBreakdown {
  int base = 0;
  int stepper = 0;
  std::string base_term;
  std::string stepper_term;
  [[nodiscard]] int value() const { return base + stepper; }
};

/// base = highest-valued base term present (0 if none); base matches consume
/// their tokens; stepper = first stepper term left to right among the
/// remaining tokens (0 if none).
inline HierarchyBreakdown hierarchy_breakdown(std::string_view title, const HierarchyMaps& maps) {
  HierarchyBreakdown h;
  const auto tokens = token_strings(title);
  std::vector<char> consumed(tokens.size(), 0);
  bool have_base = false;
  for (auto& hit : maps.base().scan_tokens(tokens)) {
    const int v = std::stoi(hit.uci);
    if (!have_base || v > h.base) {
      h.base = v;
      h.base_term = hit.term;
      have_base = true;
    }
    for (auto t = hit.start_token; t < hit.end_token; ++t) consumed[t] = 1;
  }
  for (auto& hit : maps.stepper().scan_tokens(tokens)) {
    bool clear = true;
    for (auto t = hit.start_token; t < hit.end_token; ++t) clear = clear && !consumed[t];
    if (clear) {
      h.stepper = std::stoi(hit.uci);
      h.stepper_term = hit.term;
      break;
    }
  }
  return h;
}

inline int hierarchy(std::string_view title, const HierarchyMaps& maps) { return hierarchy_breakdown(title, maps).value(); }

/// Feature labels (multi-label) found in a title by a feature dictionary.
inline std::vector<std::string> title_features(std::string_view title, const Matcher& feature_map) {
  std::set<std::string> labels;
  for (auto& h : feature_map.scan(title)) labels.insert(h.uci);
  return {labels.begin(), labels.end()};
}

inline nlohmann::ordered_json to_json(std::string_view ad_id, const TitleResult& r) {
  return {{"ad_id", ad_id},
          {"soc_code", r.soc_code},
          {"onet_code", r.onet_code},
          {"match_kind", r.match_kind == MatchKind::exact ? "exact" : "nn"},
          {"nn_score", r.nn_score ? nlohmann::ordered_json(*r.nn_score) : nlohmann::ordered_json(nullptr)},
          {"hierarchy", r.hierarchy},
          {"features", r.features}};
}

}  // namespace jobtext
