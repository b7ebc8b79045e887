#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobtext/csv.hpp"
#include "jobtext/error.hpp"
#include "jobtext/month.hpp"
#include "jobtext/text.hpp"

namespace jobtext {

/// One job posting.
struct JobAdRecord {
  std::string id;
  std::string title;
  std::string body;
  std::optional<YearMonth> date_acquired;
  YearMonth date_compiled;
  std::optional<std::string> state;  // two-letter, upper case
  std::optional<std::string> zip;    // five digits
  std::optional<std::string> firm_name_meta;
  std::optional<double> wage_min_meta;  // currency per year
  std::optional<double> wage_max_meta;

  bool operator==(const JobAdRecord&) const = default;
};

/// A sentence of an ad body. `begin`/`end` are byte offsets into the body.
struct Sentence {
  std::string ad_id;
  std::size_t index = 0;
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Sentence&) const = default;
};

// ---------------------------------------------------------------------------
// Ingestion

struct RejectedRow {
  std::size_t line = 0;  // 1-based line (JSONL) or starting line (CSV)
  std::string id;        // may be empty when the id itself is missing
  std::string reason;
};

struct IngestResult {
  std::vector<JobAdRecord> records;
  std::vector<RejectedRow> rejected;
};

enum class CorpusFormat { jsonl, csv };

struct IngestOptions {
  bool strict = false;  // first rejected row becomes a fatal InputError
};

namespace detail {

using RawFields = std::map<std::string, std::optional<std::string>>;

inline bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

inline std::optional<double> parse_money(std::string_view s, std::string& err) {
  s = trim(s);
  std::string cleaned;
  for (char c : s)
    if (c != ',' && c != '$') cleaned += c;
  if (cleaned.empty()) {
    err = "empty wage value";
    return std::nullopt;
  }
  try {
    std::size_t used = 0;
    double v = std::stod(cleaned, &used);
    if (used != cleaned.size() || !std::isfinite(v) || v < 0) {
      err = "malformed wage value '" + std::string(s) + "'";
      return std::nullopt;
    }
    return v;
  } catch (const std::exception&) {
    err = "malformed wage value '" + std::string(s) + "'";
    return std::nullopt;
  }
}

/// Build a record from raw string fields; returns the rejection reason on failure.
inline std::optional<JobAdRecord> build_record(const RawFields& raw, std::string& reason) {
  auto get = [&](const char* key) -> std::optional<std::string> {
    auto it = raw.find(key);
    if (it == raw.end() || !it->second) return std::nullopt;
    auto t = trim(*it->second);
    if (t.empty()) return std::nullopt;
    return std::string(*it->second);
  };
  JobAdRecord r;
  auto id = get("id");
  if (!id) {
    reason = "missing id";
    return std::nullopt;
  }
  r.id = *id;
  for (const char* key : {"title", "body"}) {
    auto it = raw.find(key);
    if (it == raw.end() || !it->second) {
      reason = std::string("missing ") + key;
      return std::nullopt;
    }
  }
  r.title = *raw.at("title");
  r.body = *raw.at("body");

  auto compiled = get("date_compiled");
  if (!compiled) {
    reason = "missing date_compiled";
    return std::nullopt;
  }
  auto dc = YearMonth::parse(trim(*compiled));
  if (!dc) {
    reason = "malformed date_compiled '" + *compiled + "'";
    return std::nullopt;
  }
  r.date_compiled = *dc;
  if (auto acq = get("date_acquired")) {
    auto da = YearMonth::parse(trim(*acq));
    if (!da) {
      reason = "malformed date_acquired '" + *acq + "'";
      return std::nullopt;
    }
    if (*da > *dc) {
      reason = "date_acquired " + da->str() + " is after date_compiled " + dc->str();
      return std::nullopt;
    }
    r.date_acquired = *da;
  }
  if (auto st = get("state")) {
    auto s = std::string(trim(*st));
    if (s.size() != 2 || !std::isalpha(static_cast<unsigned char>(s[0])) ||
        !std::isalpha(static_cast<unsigned char>(s[1]))) {
      reason = "malformed state '" + s + "'";
      return std::nullopt;
    }
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    r.state = s;
  }
  if (auto z = get("zip")) {
    auto s = std::string(trim(*z));
    // ZIP+4 is truncated to the five-digit ZIP.
    if (s.size() == 10 && s[5] == '-' && all_digits(std::string_view(s).substr(6))) s.resize(5);
    if (s.size() != 5 || !all_digits(s)) {
      reason = "malformed zip '" + s + "'";
      return std::nullopt;
    }
    r.zip = s;
  }
  r.firm_name_meta = get("firm_name_meta");
  for (auto [key, slot] : {std::pair{"wage_min_meta", &r.wage_min_meta}, std::pair{"wage_max_meta", &r.wage_max_meta}}) {
    if (auto w = get(key)) {
      std::string err;
      auto v = parse_money(*w, err);
      if (!v) {
        reason = std::string(key) + ": " + err;
        return std::nullopt;
      }
      *slot = *v;
    }
  }
  if (r.wage_min_meta && r.wage_max_meta && *r.wage_min_meta > *r.wage_max_meta) {
    reason = "wage_min_meta exceeds wage_max_meta";
    return std::nullopt;
  }
  return r;
}

inline std::optional<std::string> json_field(const nlohmann::json& obj, const char* key, std::string& err) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number()) return it->dump();
  err = std::string("field '") + key + "' has unsupported type";
  return std::nullopt;
}

inline const char* const kFieldNames[] = {"id",    "title", "body",           "date_acquired", "date_compiled",
                                          "state", "zip",   "firm_name_meta", "wage_min_meta", "wage_max_meta"};

}  // namespace detail

/// Parse a corpus held in memory. Rows that fail validation are reported in
/// `rejected` (or thrown under strict mode); duplicate ids are always fatal.
inline IngestResult ingest_text(std::string_view text, CorpusFormat format, const IngestOptions& opts = {}) {
  if (!is_valid_utf8(text)) throw InputError("corpus is not valid UTF-8");
  IngestResult result;

  auto reject = [&](std::size_t line, std::string id, std::string reason) {
    if (opts.strict)
      throw InputError("line " + std::to_string(line) + (id.empty() ? "" : " (id " + id + ")") + ": " + reason);
    result.rejected.push_back(RejectedRow{line, std::move(id), std::move(reason)});
  };
  auto accept = [&](std::size_t line, const detail::RawFields& raw) {
    std::string reason;
    auto rec = detail::build_record(raw, reason);
    if (!rec) {
      std::string id;
      if (auto it = raw.find("id"); it != raw.end() && it->second) id = *it->second;
      reject(line, std::move(id), std::move(reason));
      return;
    }
    result.records.push_back(std::move(*rec));
  };

  if (format == CorpusFormat::jsonl) {
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(lines[i]);
      } catch (const nlohmann::json::parse_error& e) {
        reject(i + 1, "", std::string("invalid JSON: ") + e.what());
        continue;
      }
      if (!obj.is_object()) {
        reject(i + 1, "", "line is not a JSON object");
        continue;
      }
      detail::RawFields raw;
      std::string err;
      for (const char* key : detail::kFieldNames) {
        raw[key] = detail::json_field(obj, key, err);
        if (!err.empty()) break;
      }
      if (!err.empty()) {
        reject(i + 1, raw["id"].value_or(""), err);
        continue;
      }
      accept(i + 1, raw);
    }
  } else {
    auto rows = csv::parse(text);
    if (rows.empty()) return result;
    std::vector<std::string> header;
    for (auto& h : rows.front().fields) header.push_back(to_lower(trim(h)));
    for (const char* req : {"id", "title", "body", "date_compiled"})
      if (std::find(header.begin(), header.end(), req) == header.end())
        throw InputError(std::string("corpus CSV is missing required column '") + req + "'");
    for (std::size_t r = 1; r < rows.size(); ++r) {
      detail::RawFields raw;
      for (std::size_t c = 0; c < header.size(); ++c) {
        if (c < rows[r].fields.size())
          raw[header[c]] = rows[r].fields[c];
        else
          raw[header[c]] = std::nullopt;
      }
      if (rows[r].fields.size() != header.size()) {
        reject(rows[r].line, raw["id"].value_or(""),
               "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(rows[r].fields.size()));
        continue;
      }
      accept(rows[r].line, raw);
    }
  }

  std::map<std::string, int> seen;
  for (auto& rec : result.records) ++seen[rec.id];
  std::vector<std::string> dups;
  for (auto& [id, n] : seen)
    if (n > 1) dups.push_back(id);
  if (!dups.empty()) throw InputError("duplicate ad ids: " + join(dups, ", "));
  return result;
}

inline CorpusFormat detect_format(const std::filesystem::path& path) {
  auto ext = to_lower(path.extension().string());
  if (ext == ".csv") return CorpusFormat::csv;
  if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") return CorpusFormat::jsonl;
  throw InputError("cannot infer corpus format from extension: " + path.string());
}

inline IngestResult ingest_file(const std::filesystem::path& path, const IngestOptions& opts = {}) {
  return ingest_text(read_file(path), detect_format(path), opts);
}

inline nlohmann::ordered_json to_json(const JobAdRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["title"] = r.title;
  j["body"] = r.body;
  j["date_acquired"] = r.date_acquired ? nlohmann::ordered_json(r.date_acquired->str()) : nlohmann::ordered_json(nullptr);
  j["date_compiled"] = r.date_compiled.str();
  auto opt = [](const auto& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); };
  j["state"] = opt(r.state);
  j["zip"] = opt(r.zip);
  j["firm_name_meta"] = opt(r.firm_name_meta);
  j["wage_min_meta"] = opt(r.wage_min_meta);
  j["wage_max_meta"] = opt(r.wage_max_meta);
  return j;
}

/// JSONL in the ingestion schema; `ingest_text(emit_jsonl(x))` returns x.
inline std::string emit_jsonl(const std::vector<JobAdRecord>& records) {
  std::string out;
  for (auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Segmentation

namespace detail {

// UTF-8 bullet glyphs: • ‣ ◦ ▪ ● ■ ▸ ➢
inline constexpr std::string_view kBullets[] = {"\xE2\x80\xA2", "\xE2\x80\xA3", "\xE2\x97\xA6", "\xE2\x96\xAA",
                                                "\xE2\x97\x8F", "\xE2\x96\xA0", "\xE2\x96\xB8", "\xE2\x9E\xA2"};

inline std::size_t bullet_at(std::string_view s, std::size_t i) {
  for (auto b : kBullets)
    if (s.substr(i, b.size()) == b) return b.size();
  return 0;
}

}  // namespace detail

/// Rule-based sentence splitter. Boundaries: '.', '!' or '?' followed by
/// whitespace or end of text (the terminator stays with its sentence); runs
/// of line breaks; bullet glyphs; and an ASCII '-' or '*' bullet at the start
/// of a fragment. Fragments are trimmed and empty ones dropped.
inline std::vector<Sentence> segment(std::string_view body, std::string_view ad_id = {}) {
  std::vector<Sentence> out;
  const std::size_t n = body.size();
  std::size_t frag_start = 0;

  auto flush = [&](std::size_t end) {
    std::size_t b = frag_start;
    std::size_t e = end;
    while (b < e && is_space(body[b])) ++b;
    while (e > b && is_space(body[e - 1])) --e;
    if (e > b) out.push_back(Sentence{std::string(ad_id), out.size(), std::string(body.substr(b, e - b)), b, e});
  };

  std::size_t i = 0;
  while (i < n) {
    const char c = body[i];
    // ASCII bullet: only whitespace since the fragment began.
    if ((c == '-' || c == '*') && i + 1 < n && (body[i + 1] == ' ' || body[i + 1] == '\t')) {
      bool at_start = true;
      for (std::size_t k = frag_start; k < i; ++k)
        if (!is_space(body[k])) {
          at_start = false;
          break;
        }
      if (at_start) {
        frag_start = i + 1;
        i += 1;
        continue;
      }
    }
    if (c == '\n' || c == '\r') {
      flush(i);
      frag_start = i + 1;
      ++i;
      continue;
    }
    if (auto blen = detail::bullet_at(body, i)) {
      flush(i);
      frag_start = i + blen;
      i += blen;
      continue;
    }
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == n || is_space(body[i + 1]))) {
      flush(i + 1);
      frag_start = i + 1;
      ++i;
      continue;
    }
    ++i;
  }
  flush(n);
  return out;
}

// ---------------------------------------------------------------------------
// Readability

/// Vowel-group syllable heuristic: maximal runs of [aeiouy], minus one for a
/// terminal 'e', never below one.
inline int count_syllables(std::string_view word) {
  int groups = 0;
  bool in_group = false;
  for (char ch : word) {
    const char c = ascii_lower(ch);
    const bool vowel = c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
    if (vowel && !in_group) ++groups;
    in_group = vowel;
  }
  if (!word.empty() && ascii_lower(word.back()) == 'e') --groups;
  return std::max(groups, 1);
}

/// Words are maximal runs of alphanumerics with inner apostrophes.
inline std::vector<std::string_view> readability_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && !is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;
    std::size_t start = i;
    while (i < n && (is_word_byte(static_cast<unsigned char>(text[i])) ||
                     (text[i] == '\'' && i + 1 < n && is_word_byte(static_cast<unsigned char>(text[i + 1])))))
      ++i;
    words.push_back(text.substr(start, i - start));
  }
  return words;
}

struct ReadabilityCounts {
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t syllables = 0;
};

inline ReadabilityCounts readability_counts(std::string_view body) {
  ReadabilityCounts c;
  for (auto w : readability_words(body)) {
    ++c.words;
    c.syllables += static_cast<std::size_t>(count_syllables(w));
  }
  c.sentences = segment(body).size();
  return c;
}

/// Flesch reading ease: 206.835 - 1.015 (words/sentences) - 84.6 (syllables/words).
inline double flesch_reading_ease(std::string_view body) {
  const auto c = readability_counts(body);
  if (c.words == 0 || c.sentences == 0) throw ArgumentError("unreadable input");
  return 206.835 - 1.015 * (static_cast<double>(c.words) / static_cast<double>(c.sentences)) -
         84.6 * (static_cast<double>(c.syllables) / static_cast<double>(c.words));
}

}  // namespace jobtext
