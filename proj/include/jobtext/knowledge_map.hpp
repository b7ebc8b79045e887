#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobtext/csv.hpp"
#include "jobtext/error.hpp"
#include "jobtext/text.hpp"

namespace jobtext {

/// A dictionary entry: one or more surface forms resolving to a concept code.
struct MapEntry {
  std::vector<std::string> surface_forms;
  std::string uci;
  std::string label;
};

enum class RuleKind { negation, co_occur };

/// NEGATION drops a trigger hit when a guard occurs within `window` tokens;
/// CO_OCCUR keeps a trigger hit only when a guard occurs within `window`.
/// A guard is any of `guard_terms` or any other hit carrying `guard_uci`.
struct AssociationRule {
  std::string rule_id;
  RuleKind kind = RuleKind::negation;
  std::string trigger_uci;
  std::vector<std::string> guard_terms;
  std::string guard_uci;
  std::size_t window = 1;
};

/// Half-open token span [start_token, end_token).
struct DictionaryHit {
  std::string ad_id;
  std::string uci;
  std::string term;  // surface form as written in the dictionary
  std::string label;
  std::size_t start_token = 0;
  std::size_t end_token = 0;
  std::size_t entry = 0;  // index into the compiled entry list

  bool operator==(const DictionaryHit&) const = default;
};

inline nlohmann::ordered_json to_json(const DictionaryHit& h) {
  return {{"ad_id", h.ad_id}, {"uci", h.uci}, {"term", h.term}, {"start_token", h.start_token}, {"end_token", h.end_token}};
}

/// Multi-pattern matcher over tokens (Aho-Corasick on token ids). Immutable
/// after construction; `scan` is safe to call concurrently.
class Matcher {
 public:
  Matcher() : nodes_(1) {}

  static Matcher compile(std::vector<MapEntry> entries, std::vector<AssociationRule> rules = {}) {
    Matcher m;
    std::set<std::string> rule_ids;
    for (auto& r : rules) {
      if (r.rule_id.empty()) throw ArgumentError("association rule with empty rule_id");
      if (!rule_ids.insert(r.rule_id).second) throw ArgumentError("conflicting rule id: " + r.rule_id);
      if (r.window < 1) throw ArgumentError("rule " + r.rule_id + ": window must be >= 1");
      if (r.trigger_uci.empty()) throw ArgumentError("rule " + r.rule_id + ": empty trigger_uci");
      if (r.guard_terms.empty() && r.guard_uci.empty())
        throw ArgumentError("rule " + r.rule_id + ": needs guard_terms or guard_uci");
    }
    for (std::size_t e = 0; e < entries.size(); ++e) {
      if (entries[e].uci.empty()) throw ArgumentError("map entry " + std::to_string(e) + " has an empty uci");
      for (std::size_t f = 0; f < entries[e].surface_forms.size(); ++f) {
        auto toks = token_strings(entries[e].surface_forms[f]);
        if (toks.empty())
          throw ArgumentError("surface form '" + entries[e].surface_forms[f] + "' of uci " + entries[e].uci +
                              " is empty after normalization");
        m.add_pattern(toks, Pattern{e, f, {}, false, 0});
      }
    }
    for (std::size_t r = 0; r < rules.size(); ++r) {
      for (auto& g : rules[r].guard_terms) {
        auto toks = token_strings(g);
        if (toks.empty()) throw ArgumentError("rule " + rules[r].rule_id + ": empty guard term");
        m.add_pattern(toks, Pattern{0, 0, {}, true, r});
      }
    }
    m.entries_ = std::move(entries);
    m.rules_ = std::move(rules);
    m.build_links();
    return m;
  }

  /// Hits for `text`, ordered by start token then entry order.
  [[nodiscard]] std::vector<DictionaryHit> scan(std::string_view text, std::string_view ad_id = {}) const {
    return scan_tokens(token_strings(text), ad_id);
  }

  [[nodiscard]] std::vector<DictionaryHit> scan_tokens(const std::vector<std::string>& tokens,
                                                       std::string_view ad_id = {}) const {
    std::vector<Candidate> found;
    std::vector<GuardHit> guards;
    collect(tokens, found, guards);
    auto hits = resolve(found, ad_id);
    if (!rules_.empty()) hits = apply_rules(std::move(hits), guards);
    return hits;
  }

  [[nodiscard]] const std::vector<MapEntry>& entries() const { return entries_; }
  [[nodiscard]] const std::vector<AssociationRule>& rules() const { return rules_; }
  [[nodiscard]] std::size_t pattern_count() const { return patterns_.size(); }

 private:
  static constexpr std::uint32_t kUnknown = std::numeric_limits<std::uint32_t>::max();

  struct Pattern {
    std::size_t entry;
    std::size_t form;
    std::vector<std::uint32_t> tokens;
    bool guard;
    std::size_t rule;
  };
  struct Node {
    std::vector<std::pair<std::uint32_t, std::int32_t>> next;  // sorted by token id
    std::int32_t fail = 0;
    std::int32_t out_link = -1;  // nearest proper suffix node with outputs
    std::vector<std::uint32_t> outputs;
  };
  struct Candidate {
    std::size_t start;
    std::size_t end;
    std::uint32_t pattern;
  };
  struct GuardHit {
    std::size_t start;
    std::size_t end;
    std::size_t rule;
  };

  std::unordered_map<std::string, std::uint32_t> vocab_;
  std::vector<Node> nodes_;
  std::vector<Pattern> patterns_;
  std::vector<MapEntry> entries_;
  std::vector<AssociationRule> rules_;

  [[nodiscard]] std::int32_t child(std::int32_t node, std::uint32_t tok) const {
    const auto& nx = nodes_[static_cast<std::size_t>(node)].next;
    auto it = std::lower_bound(nx.begin(), nx.end(), tok, [](const auto& p, std::uint32_t t) { return p.first < t; });
    return (it != nx.end() && it->first == tok) ? it->second : -1;
  }

  void add_pattern(const std::vector<std::string>& toks, Pattern p) {
    std::int32_t node = 0;
    for (auto& t : toks) {
      auto [it, inserted] = vocab_.try_emplace(t, static_cast<std::uint32_t>(vocab_.size()));
      const std::uint32_t id = it->second;
      p.tokens.push_back(id);
      std::int32_t c = child(node, id);
      if (c < 0) {
        c = static_cast<std::int32_t>(nodes_.size());
        auto& nx = nodes_[static_cast<std::size_t>(node)].next;
        auto pos = std::lower_bound(nx.begin(), nx.end(), id, [](const auto& q, std::uint32_t v) { return q.first < v; });
        nx.insert(pos, {id, c});
        nodes_.emplace_back();
      }
      node = c;
    }
    nodes_[static_cast<std::size_t>(node)].outputs.push_back(static_cast<std::uint32_t>(patterns_.size()));
    patterns_.push_back(std::move(p));
  }

  void build_links() {
    std::deque<std::int32_t> queue;
    for (auto& [tok, c] : nodes_[0].next) {
      nodes_[static_cast<std::size_t>(c)].fail = 0;
      queue.push_back(c);
    }
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop_front();
      for (auto& [tok, v] : nodes_[static_cast<std::size_t>(u)].next) {
        std::int32_t f = nodes_[static_cast<std::size_t>(u)].fail;
        std::int32_t target = -1;
        while (true) {
          target = child(f, tok);
          if (target >= 0 || f == 0) break;
          f = nodes_[static_cast<std::size_t>(f)].fail;
        }
        auto& vn = nodes_[static_cast<std::size_t>(v)];
        vn.fail = (target >= 0 && target != v) ? target : 0;
        const auto& fn = nodes_[static_cast<std::size_t>(vn.fail)];
        vn.out_link = fn.outputs.empty() ? fn.out_link : vn.fail;
        queue.push_back(v);
      }
    }
  }

  void collect(const std::vector<std::string>& tokens, std::vector<Candidate>& found, std::vector<GuardHit>& guards) const {
    std::int32_t state = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      auto it = vocab_.find(tokens[i]);
      if (it == vocab_.end()) {
        state = 0;
        continue;
      }
      const std::uint32_t tok = it->second;
      while (true) {
        const auto c = child(state, tok);
        if (c >= 0) {
          state = c;
          break;
        }
        if (state == 0) break;
        state = nodes_[static_cast<std::size_t>(state)].fail;
      }
      for (std::int32_t n = state; n > 0;) {
        const auto& node = nodes_[static_cast<std::size_t>(n)];
        for (auto pid : node.outputs) {
          const auto& p = patterns_[pid];
          const std::size_t start = i + 1 - p.tokens.size();
          if (p.guard)
            guards.push_back(GuardHit{start, i + 1, p.rule});
          else
            found.push_back(Candidate{start, i + 1, pid});
        }
        n = node.out_link;
      }
    }
  }

  // Longest span wins; among equal lengths the leftmost; every pattern sharing
  // a selected span is emitted.
  std::vector<DictionaryHit> resolve(std::vector<Candidate>& found, std::string_view ad_id) const {
    std::vector<DictionaryHit> hits;
    if (found.empty()) return hits;
    std::sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) {
      const auto la = a.end - a.start, lb = b.end - b.start;
      if (la != lb) return la > lb;
      if (a.start != b.start) return a.start < b.start;
      return a.pattern < b.pattern;
    });
    std::size_t max_end = 0;
    for (auto& c : found) max_end = std::max(max_end, c.end);
    std::vector<char> taken(max_end, 0);
    std::vector<const Candidate*> chosen;
    for (std::size_t i = 0; i < found.size();) {
      std::size_t j = i;
      while (j < found.size() && found[j].start == found[i].start && found[j].end == found[i].end) ++j;
      bool free = true;
      for (std::size_t t = found[i].start; t < found[i].end; ++t)
        if (taken[t]) {
          free = false;
          break;
        }
      if (free) {
        for (std::size_t t = found[i].start; t < found[i].end; ++t) taken[t] = 1;
        for (std::size_t k = i; k < j; ++k) chosen.push_back(&found[k]);
      }
      i = j;
    }
    std::sort(chosen.begin(), chosen.end(), [](const Candidate* a, const Candidate* b) {
      if (a->start != b->start) return a->start < b->start;
      return a->pattern < b->pattern;
    });
    for (auto* c : chosen) {
      const auto& p = patterns_[c->pattern];
      const auto& e = entries_[p.entry];
      hits.push_back(DictionaryHit{std::string(ad_id), e.uci, e.surface_forms[p.form], e.label, c->start, c->end, p.entry});
    }
    return hits;
  }

  static bool within(std::size_t gs, std::size_t ge, const DictionaryHit& h, std::size_t window) {
    return gs + window >= h.start_token && ge <= h.end_token + window;
  }

  [[nodiscard]] bool guard_present(std::size_t rule, const DictionaryHit& h, std::size_t self,
                                   const std::vector<DictionaryHit>& pool, const std::vector<GuardHit>& guards) const {
    const auto& r = rules_[rule];
    for (auto& g : guards)
      if (g.rule == rule && within(g.start, g.end, h, r.window)) return true;
    if (!r.guard_uci.empty())
      for (std::size_t k = 0; k < pool.size(); ++k)
        if (k != self && pool[k].uci == r.guard_uci && within(pool[k].start_token, pool[k].end_token, h, r.window))
          return true;
    return false;
  }

  // NEGATION runs first against the raw hits; CO_OCCUR then runs against the
  // survivors and requires every one of its rules for the trigger to hold.
  std::vector<DictionaryHit> apply_rules(std::vector<DictionaryHit> hits, const std::vector<GuardHit>& guards) const {
    std::vector<char> keep(hits.size(), 1);
    for (std::size_t i = 0; i < hits.size(); ++i)
      for (std::size_t r = 0; r < rules_.size(); ++r)
        if (rules_[r].kind == RuleKind::negation && rules_[r].trigger_uci == hits[i].uci &&
            guard_present(r, hits[i], i, hits, guards)) {
          keep[i] = 0;
          break;
        }
    std::vector<DictionaryHit> survivors;
    for (std::size_t i = 0; i < hits.size(); ++i)
      if (keep[i]) survivors.push_back(std::move(hits[i]));

    std::vector<DictionaryHit> out;
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      bool ok = true;
      for (std::size_t r = 0; r < rules_.size() && ok; ++r)
        if (rules_[r].kind == RuleKind::co_occur && rules_[r].trigger_uci == survivors[i].uci)
          ok = guard_present(r, survivors[i], i, survivors, guards);
      if (ok) out.push_back(survivors[i]);
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Dictionary files

enum class DictionarySchema { benefits, education, shifts, background_checks, riasec, tools_tech, generic };

inline DictionarySchema parse_schema(std::string_view name) {
  static const std::pair<std::string_view, DictionarySchema> table[] = {
      {"benefits", DictionarySchema::benefits},
      {"education", DictionarySchema::education},
      {"shifts", DictionarySchema::shifts},
      {"background_checks", DictionarySchema::background_checks},
      {"riasec", DictionarySchema::riasec},
      {"tools_tech", DictionarySchema::tools_tech},
      {"generic", DictionarySchema::generic}};
  for (auto& [k, v] : table)
    if (k == name) return v;
  throw ArgumentError("unknown dictionary schema '" + std::string(name) + "'");
}

struct SkippedRow {
  std::size_t line = 0;
  std::string reason;
};

struct LoadedDictionary {
  std::vector<MapEntry> entries;
  std::vector<SkippedRow> skipped;
};

namespace detail {

inline std::string riasec_code(std::string_view value) {
  static const std::pair<std::string_view, std::string_view> names[] = {
      {"r", "R"}, {"realistic", "R"},    {"i", "I"}, {"investigative", "I"}, {"a", "A"}, {"artistic", "A"},
      {"s", "S"}, {"social", "S"},       {"e", "E"}, {"enterprising", "E"},  {"c", "C"}, {"conventional", "C"}};
  const auto key = to_lower(trim(value));
  for (auto& [k, v] : names)
    if (k == key) return std::string(v);
  return {};
}

}  // namespace detail

/// Column layout per schema:
///   generic                       term, uci[, label]
///   benefits/education/shifts/    term, label[, uci]   (uci defaults to label)
///   background_checks
///   riasec                        term, label          (label: R/I/A/S/E/C or full name)
///   tools_tech                    example, commodity code, commodity title
/// Each data row becomes one entry with one surface form. Blank-term rows are
/// skipped and reported. Exact duplicate tools_tech rows (the occupation-level
/// repetition in the source file) collapse to one entry.
inline LoadedDictionary load_dictionary_table(const csv::Table& table, DictionarySchema schema) {
  LoadedDictionary out;
  std::size_t term_col = 0, uci_col = 0;
  std::optional<std::size_t> label_col;
  switch (schema) {
    case DictionarySchema::generic:
      term_col = table.require("term");
      uci_col = table.require("uci");
      label_col = table.find("label");
      break;
    case DictionarySchema::tools_tech:
      term_col = table.require("example");
      uci_col = table.require("commodity code");
      label_col = table.require("commodity title");
      break;
    case DictionarySchema::riasec:
      term_col = table.require("term");
      uci_col = table.require("label");
      label_col = uci_col;
      break;
    default:
      term_col = table.require("term");
      label_col = table.require("label");
      uci_col = table.find("uci").value_or(*label_col);
      break;
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (auto& row : table.rows()) {
    auto term = std::string(trim(csv::Table::cell(row, term_col)));
    if (term.empty()) {
      out.skipped.push_back({row.line, "blank term"});
      continue;
    }
    if (token_strings(term).empty()) {
      out.skipped.push_back({row.line, "term '" + term + "' has no alphanumeric content"});
      continue;
    }
    auto uci = std::string(trim(csv::Table::cell(row, uci_col)));
    std::string label = label_col ? std::string(trim(csv::Table::cell(row, *label_col))) : uci;
    if (schema == DictionarySchema::riasec) {
      uci = detail::riasec_code(uci);
      if (uci.empty()) {
        out.skipped.push_back({row.line, "label is not a RIASEC category"});
        continue;
      }
    }
    if (uci.empty()) {
      out.skipped.push_back({row.line, "blank uci/label"});
      continue;
    }
    if (schema == DictionarySchema::tools_tech && !seen.insert({to_lower(term), uci}).second) continue;
    out.entries.push_back(MapEntry{{term}, uci, label});
  }
  return out;
}

inline LoadedDictionary load_dictionary(const std::filesystem::path& path, DictionarySchema schema) {
  return load_dictionary_table(csv::Table::load(path), schema);
}

/// Remove surface forms that normalize to an excluded term; entries left with
/// no surface forms are dropped. Returns the number of forms removed.
inline std::size_t apply_exclusions(std::vector<MapEntry>& entries, const std::vector<std::string>& excluded) {
  std::set<std::vector<std::string>> ex;
  for (auto& t : excluded) ex.insert(token_strings(t));
  std::size_t removed = 0;
  for (auto& e : entries) {
    auto before = e.surface_forms.size();
    std::erase_if(e.surface_forms, [&](const std::string& f) { return ex.count(token_strings(f)) > 0; });
    removed += before - e.surface_forms.size();
  }
  std::erase_if(entries, [](const MapEntry& e) { return e.surface_forms.empty(); });
  return removed;
}

/// Rules CSV: rule_id, kind (NEGATION|CO_OCCUR), trigger_uci, guard_terms
/// ('|'-separated), guard_uci, window.
inline std::vector<AssociationRule> load_rules(const std::filesystem::path& path) {
  auto table = csv::Table::load(path);
  const auto c_id = table.require("rule_id"), c_kind = table.require("kind"), c_trig = table.require("trigger_uci"),
             c_terms = table.require("guard_terms"), c_guci = table.require("guard_uci"), c_win = table.require("window");
  std::vector<AssociationRule> rules;
  for (auto& row : table.rows()) {
    AssociationRule r;
    r.rule_id = std::string(trim(csv::Table::cell(row, c_id)));
    auto kind = to_lower(trim(csv::Table::cell(row, c_kind)));
    if (kind == "negation")
      r.kind = RuleKind::negation;
    else if (kind == "co_occur")
      r.kind = RuleKind::co_occur;
    else
      throw InputError(table.source() + ":" + std::to_string(row.line) + ": unknown rule kind '" + kind + "'");
    r.trigger_uci = std::string(trim(csv::Table::cell(row, c_trig)));
    auto terms = csv::Table::cell(row, c_terms);
    std::size_t start = 0;
    while (start <= terms.size()) {
      auto bar = terms.find('|', start);
      if (bar == std::string_view::npos) bar = terms.size();
      auto t = trim(terms.substr(start, bar - start));
      if (!t.empty()) r.guard_terms.emplace_back(t);
      start = bar + 1;
    }
    r.guard_uci = std::string(trim(csv::Table::cell(row, c_guci)));
    try {
      auto w = std::stol(std::string(csv::Table::cell(row, c_win)));
      if (w < 1) throw std::out_of_range("window");
      r.window = static_cast<std::size_t>(w);
    } catch (const std::exception&) {
      throw InputError(table.source() + ":" + std::to_string(row.line) + ": window must be a positive integer");
    }
    rules.push_back(std::move(r));
  }
  return rules;
}

}  // namespace jobtext
