#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobtext/corpus.hpp"
#include "jobtext/csv.hpp"
#include "jobtext/error.hpp"
#include "jobtext/text.hpp"

namespace jobtext {

namespace detail {

inline const std::unordered_map<std::string, std::string>& firm_token_map() {
  static const std::unordered_map<std::string, std::string> m = {
      {"zero", "0"},        {"one", "1"},          {"two", "2"},        {"three", "3"},     {"four", "4"},
      {"five", "5"},        {"six", "6"},          {"seven", "7"},      {"eight", "8"},     {"nine", "9"},
      {"ten", "10"},        {"eleven", "11"},      {"twelve", "12"},    {"thirteen", "13"}, {"fourteen", "14"},
      {"fifteen", "15"},    {"sixteen", "16"},     {"seventeen", "17"}, {"eighteen", "18"}, {"nineteen", "19"},
      {"incorporated", "inc"}, {"corporation", "corp"}, {"company", "co"}, {"limited", "ltd"},
  };
  return m;
}

/// Decode UTF-8 into code points; bytes of a malformed sequence pass through.
inline std::u32string code_points(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 6 ? 2 : (c >> 4) == 14 ? 3 : (c >> 3) == 30 ? 4 : 0;
    if (len == 0 || i + len > s.size()) {
      out += c;
      ++i;
      continue;
    }
    char32_t cp = len == 1 ? c : (c & (0x7F >> len));
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      out += c;
      ++i;
      continue;
    }
    out += cp;
    i += len;
  }
  return out;
}

}  // namespace detail

/// Firm-name cleaner. Lowercases, deletes apostrophes, turns other
/// punctuation into spaces, maps number words to digits and legal-form
/// words to inc/corp/co/ltd/llc. Idempotent.
inline std::string standardize(std::string_view name) {
  std::vector<std::string> toks;
  std::string cur;
  for (char ch : name) {
    if (ch == '\'') continue;
    if (is_word_byte(static_cast<unsigned char>(ch))) {
      cur += ascii_lower(ch);
    } else if (!cur.empty()) {
      toks.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) toks.push_back(std::move(cur));

  const auto& map = detail::firm_token_map();
  std::vector<std::string> out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    // "L.L.C." arrives as three single-letter tokens
    if (toks[i] == "l" && i + 2 < toks.size() && toks[i + 1] == "l" && toks[i + 2] == "c") {
      out.emplace_back("llc");
      i += 2;
      continue;
    }
    auto it = map.find(toks[i]);
    out.push_back(it == map.end() ? toks[i] : it->second);
  }
  return join(out, " ");
}

/// Unit-cost edit distance over code points.
inline std::size_t lev_distance(std::string_view a, std::string_view b) {
  const auto x = detail::code_points(a), y = detail::code_points(b);
  if (x.empty()) return y.size();
  if (y.empty()) return x.size();
  std::vector<std::size_t> prev(y.size() + 1), row(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    row[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1);
      row[j] = std::min({prev[j] + 1, row[j - 1] + 1, sub});
    }
    std::swap(prev, row);
  }
  return prev[y.size()];
}

/// 1 - d(a, b) / max(|a|, |b|) in code points; 1.0 when both are empty.
inline double lev_ratio(std::string_view a, std::string_view b) {
  const auto la = detail::code_points(a).size(), lb = detail::code_points(b).size();
  const auto m = std::max(la, lb);
  if (m == 0) return 1.0;
  return 1.0 - static_cast<double>(lev_distance(a, b)) / static_cast<double>(m);
}

struct EstablishmentRecord {
  std::string est_id;
  std::string name_raw;
  std::string name_std;
  std::string zip;
  std::string state;
  std::string naics;
  std::optional<std::string> sic;
};

inline char32_t first_alnum(std::string_view name_std) {
  for (auto cp : detail::code_points(name_std))
    if (cp >= 0x80 || std::isalnum(static_cast<int>(cp))) return cp;
  return 0;
}

class EstablishmentIndex {
 public:
  EstablishmentIndex() = default;

  explicit EstablishmentIndex(std::vector<EstablishmentRecord> records) : records_(std::move(records)) {
    std::sort(records_.begin(), records_.end(),
              [](const EstablishmentRecord& a, const EstablishmentRecord& b) { return a.est_id < b.est_id; });
    for (std::size_t i = 0; i < records_.size(); ++i) {
      auto& r = records_[i];
      if (i > 0 && records_[i - 1].est_id == r.est_id) throw InputError("duplicate est_id '" + r.est_id + "'");
      if (r.naics.size() < 2 || r.naics.size() > 6 || !detail::all_digits(r.naics))
        throw InputError("establishment '" + r.est_id + "' has invalid naics '" + r.naics + "'");
      r.name_std = standardize(r.name_raw);
      if (!r.zip.empty()) by_zip_[r.zip].push_back(i);
      if (!r.state.empty()) by_state_[r.state].push_back(i);
      if (auto c = first_alnum(r.name_std)) by_initial_[c].push_back(i);
    }
  }

  /// CSV with columns est_id, name, zip, state, naics and optional sic.
  static EstablishmentIndex load(const std::filesystem::path& path) {
    auto t = csv::Table::load(path);
    const auto c_id = t.require("est_id"), c_name = t.require("name"), c_zip = t.require("zip"),
               c_state = t.require("state"), c_naics = t.require("naics");
    const auto c_sic = t.find("sic");
    std::vector<EstablishmentRecord> recs;
    for (auto& row : t.rows()) {
      EstablishmentRecord r;
      r.est_id = std::string(trim(csv::Table::cell(row, c_id)));
      r.name_raw = std::string(trim(csv::Table::cell(row, c_name)));
      r.zip = std::string(trim(csv::Table::cell(row, c_zip))).substr(0, 5);
      r.state = to_upper(trim(csv::Table::cell(row, c_state)));
      r.naics = std::string(trim(csv::Table::cell(row, c_naics)));
      if (c_sic) {
        auto sic = std::string(trim(csv::Table::cell(row, *c_sic)));
        if (!sic.empty()) r.sic = sic;
      }
      if (r.est_id.empty()) throw InputError(t.source() + ":" + std::to_string(row.line) + ": empty est_id");
      recs.push_back(std::move(r));
    }
    return EstablishmentIndex(std::move(recs));
  }

  [[nodiscard]] bool empty() const { return records_.empty(); }
  [[nodiscard]] std::size_t size() const { return records_.size(); }
  [[nodiscard]] const std::vector<EstablishmentRecord>& records() const { return records_; }
  [[nodiscard]] const std::vector<std::size_t>* zip(const std::string& z) const { return lookup(by_zip_, z); }
  [[nodiscard]] const std::vector<std::size_t>* state(const std::string& s) const { return lookup(by_state_, s); }
  [[nodiscard]] const std::vector<std::size_t>* initial(char32_t c) const { return lookup(by_initial_, c); }

 private:
  template <typename M, typename K>
  static const std::vector<std::size_t>* lookup(const M& m, const K& k) {
    auto it = m.find(k);
    return it == m.end() ? nullptr : &it->second;
  }
  std::vector<EstablishmentRecord> records_;
  std::map<std::string, std::vector<std::size_t>> by_zip_;
  std::map<std::string, std::vector<std::size_t>> by_state_;
  std::map<char32_t, std::vector<std::size_t>> by_initial_;
};

enum class FirmTier { zip, state, national, none };

inline const char* tier_name(FirmTier t) {
  switch (t) {
    case FirmTier::zip: return "zip";
    case FirmTier::state: return "state";
    case FirmTier::national: return "national";
    case FirmTier::none: return "none";
  }
  return "none";
}

struct TierBest {
  std::size_t record = 0;
  double score = 0;
};

struct FirmMatchResult {
  std::string ad_id;
  std::string extracted_name;
  std::string name_std;
  std::string source;  // "metadata" or "external"
  std::optional<std::string> est_id;
  double score = 0;
  FirmTier tier = FirmTier::none;
  std::optional<std::string> naics;
  // best per searched tier; absent when the tier had no candidates or was skipped
  std::optional<TierBest> zip_best, state_best, national_best;
};

namespace detail {

inline std::optional<TierBest> best_in(const std::string& name_std, const EstablishmentIndex& index,
                                       const std::vector<std::size_t>* bucket) {
  if (!bucket || bucket->empty()) return std::nullopt;
  TierBest best{(*bucket)[0], -1};
  // buckets are in ascending est_id order, so strict > keeps the smallest id on ties
  for (auto i : *bucket) {
    const double s = lev_ratio(name_std, index.records()[i].name_std);
    if (s > best.score) best = {i, s};
  }
  return best;
}

}  // namespace detail

/// Zip, then state, then national (same first character) search. The first
/// tier whose best ratio reaches `threshold` wins. Below threshold everywhere,
/// the best score seen is kept but est_id and naics stay empty.
inline FirmMatchResult cascade_match(const std::string& name_std, const std::string& ad_zip, const std::string& ad_state,
                                     const EstablishmentIndex& index, double threshold = 0.8) {
  if (!(threshold > 0 && threshold <= 1)) throw ArgumentError("firm match threshold must be in (0, 1]");
  FirmMatchResult r;
  r.name_std = name_std;
  if (index.empty() || name_std.empty()) return r;
  auto accept = [&](const std::optional<TierBest>& b, FirmTier tier) {
    if (!b || b->score < threshold) return false;
    const auto& rec = index.records()[b->record];
    r.tier = tier;
    r.score = b->score;
    r.est_id = rec.est_id;
    r.naics = rec.naics;
    return true;
  };
  if (!ad_zip.empty()) {
    r.zip_best = detail::best_in(name_std, index, index.zip(ad_zip));
    if (accept(r.zip_best, FirmTier::zip)) return r;
  }
  if (!ad_state.empty()) {
    r.state_best = detail::best_in(name_std, index, index.state(ad_state));
    if (accept(r.state_best, FirmTier::state)) return r;
  }
  r.national_best = detail::best_in(name_std, index, index.initial(first_alnum(name_std)));
  if (accept(r.national_best, FirmTier::national)) return r;
  for (auto* b : {&r.zip_best, &r.state_best, &r.national_best})
    if (*b) r.score = std::max(r.score, (*b)->score);
  return r;
}

/// Firm-name spans from an external extractor: JSONL {ad_id, firm_name}.
inline std::map<std::string, std::string> load_firm_spans(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  const auto lines = split_lines(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto where = path.string() + ":" + std::to_string(i + 1);
    try {
      auto j = nlohmann::json::parse(lines[i]);
      out[j.at("ad_id").get<std::string>()] = j.at("firm_name").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  return out;
}

/// Metadata firm name first; external spans fill gaps.
inline FirmMatchResult match_firm(const JobAdRecord& ad, const std::map<std::string, std::string>& spans,
                                  const EstablishmentIndex& index, double threshold = 0.8) {
  std::string name, source;
  if (ad.firm_name_meta && !trim(*ad.firm_name_meta).empty()) {
    name = *ad.firm_name_meta;
    source = "metadata";
  } else if (auto it = spans.find(ad.id); it != spans.end()) {
    name = it->second;
    source = "external";
  }
  auto r = cascade_match(standardize(name), ad.zip.value_or(""), ad.state.value_or(""), index, threshold);
  r.ad_id = ad.id;
  r.extracted_name = name;
  r.source = source;
  return r;
}

inline nlohmann::ordered_json to_json(const FirmMatchResult& r, const EstablishmentIndex& index) {
  using oj = nlohmann::ordered_json;
  auto opt = [](const std::optional<std::string>& v) { return v ? oj(*v) : oj(nullptr); };
  auto best = [&](const std::optional<TierBest>& b) {
    if (!b) return oj(nullptr);
    return oj{{"est_id", index.records()[b->record].est_id}, {"score", b->score}};
  };
  return {{"ad_id", r.ad_id},
          {"extracted_name", r.source.empty() ? oj(nullptr) : oj(r.extracted_name)},
          {"name_std", r.source.empty() ? oj(nullptr) : oj(r.name_std)},
          {"source", r.source.empty() ? oj(nullptr) : oj(r.source)},
          {"est_id", opt(r.est_id)},
          {"score", r.source.empty() ? oj(nullptr) : oj(r.score)},
          {"tier", tier_name(r.tier)},
          {"naics", opt(r.naics)},
          {"tier_best", {{"zip", best(r.zip_best)}, {"state", best(r.state_best)}, {"national", best(r.national_best)}}}};
}

}  // namespace jobtext
