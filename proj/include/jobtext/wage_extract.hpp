#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobtext/corpus.hpp"
#include "jobtext/error.hpp"
#include "jobtext/text.hpp"

namespace jobtext {

enum class PayFrequency { hourly, weekly, monthly, annually };

inline const char* frequency_name(PayFrequency f) {
  switch (f) {
    case PayFrequency::hourly: return "hourly";
    case PayFrequency::weekly: return "weekly";
    case PayFrequency::monthly: return "monthly";
    case PayFrequency::annually: return "annually";
  }
  return "annually";
}

inline PayFrequency parse_frequency(std::string_view s) {
  const auto k = to_lower(trim(s));
  if (k == "hourly" || k == "hour" || k == "hr") return PayFrequency::hourly;
  if (k == "weekly" || k == "week" || k == "wk") return PayFrequency::weekly;
  if (k == "monthly" || k == "month" || k == "mo") return PayFrequency::monthly;
  if (k == "annually" || k == "annual" || k == "yearly" || k == "year" || k == "yr") return PayFrequency::annually;
  throw InputError("unknown pay frequency '" + std::string(s) + "'");
}

struct WageConfig {
  double hours_per_year = 2080;
  double weeks_per_year = 52;
  double months_per_year = 12;
  double outlier_min = 5000;
  double outlier_max = 1000000;
  double hourly_below = 200;     // magnitude heuristic: value < this -> hourly
  double annual_from = 10000;    // value >= this -> annually; in between -> monthly

  void validate() const {
    if (!(hours_per_year > 0 && weeks_per_year > 0 && months_per_year > 0))
      throw ArgumentError("wage multipliers must be positive");
    if (!(outlier_min < outlier_max)) throw ArgumentError("wage outlier bounds must satisfy min < max");
    if (!(hourly_below < annual_from)) throw ArgumentError("wage magnitude table must satisfy hourly_below < annual_from");
  }
};

struct WageObservation {
  std::string ad_id;
  std::optional<std::size_t> sentence_index;
  std::optional<std::string> raw_span_min, raw_span_max;
  std::optional<double> min_value, max_value;
  PayFrequency frequency = PayFrequency::annually;
  bool low_confidence = false;
  bool is_range = false;
  double annualized = 0;
  bool outlier = false;
  std::string provenance;  // "text", "override" or "metadata"
};

// ---------------------------------------------------------------------------
// Amount scanning

struct Amount {
  double value = 0;
  std::size_t begin = 0;  // includes a leading '$'
  std::size_t end = 0;    // includes a trailing k
  bool dollar = false;
  bool k_suffix = false;
};

namespace detail {

struct FreqCue {
  std::string_view text;
  PayFrequency freq;
};

inline constexpr FreqCue kFreqCues[] = {
    {"per hour", PayFrequency::hourly},   {"an hour", PayFrequency::hourly},     {"/hour", PayFrequency::hourly},
    {"/hr", PayFrequency::hourly},        {"hourly", PayFrequency::hourly},      {"per hr", PayFrequency::hourly},
    {"per week", PayFrequency::weekly},   {"a week", PayFrequency::weekly},      {"/week", PayFrequency::weekly},
    {"/wk", PayFrequency::weekly},        {"weekly", PayFrequency::weekly},      {"per month", PayFrequency::monthly},
    {"a month", PayFrequency::monthly},   {"/month", PayFrequency::monthly},     {"/mo", PayFrequency::monthly},
    {"monthly", PayFrequency::monthly},   {"per year", PayFrequency::annually},  {"a year", PayFrequency::annually},
    {"/year", PayFrequency::annually},    {"/yr", PayFrequency::annually},       {"per annum", PayFrequency::annually},
    {"annually", PayFrequency::annually}, {"annual", PayFrequency::annually},    {"yearly", PayFrequency::annually},
};

inline constexpr std::string_view kWageWords[] = {"salary", "wage",    "wages",  "pay",    "compensation",
                                                  "rate",   "stipend", "earn",   "income", "doe"};

inline bool alpha_at(std::string_view s, std::size_t i) {
  return i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]));
}
inline bool alnum_at(std::string_view s, std::size_t i) { return i < s.size() && is_word_byte(static_cast<unsigned char>(s[i])); }

/// Cue occurrences in lowercase text, respecting word edges.
inline std::vector<std::pair<std::size_t, const FreqCue*>> find_cues(std::string_view lower) {
  std::vector<std::pair<std::size_t, const FreqCue*>> out;
  for (auto& cue : kFreqCues) {
    for (auto pos = lower.find(cue.text); pos != std::string_view::npos; pos = lower.find(cue.text, pos + 1)) {
      const bool left_ok = cue.text[0] == '/' || pos == 0 || !alnum_at(lower, pos - 1);
      const bool right_ok = !alpha_at(lower, pos + cue.text.size());
      if (left_ok && right_ok) out.emplace_back(pos, &cue);
    }
  }
  // drop cues nested in a longer one at an overlapping position ("annual" in "annually" is filtered by right_ok)
  std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.first < b.first; });
  return out;
}

inline std::optional<PayFrequency> cue_right_after(std::string_view lower, std::size_t pos) {
  while (pos < lower.size() && (lower[pos] == ' ' || lower[pos] == '\t')) ++pos;
  for (auto& cue : kFreqCues)
    if (lower.substr(pos, cue.text.size()) == cue.text && !alpha_at(lower, pos + cue.text.size())) return cue.freq;
  return std::nullopt;
}

inline std::optional<double> number_from(std::string digits) {
  double v = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || p != digits.data() + digits.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Monetary-looking numbers: optional '$', digits with optional thousands
/// separators and decimals, optional k suffix. Numbers glued to letters
/// ("3rd", "h1b") are ignored.
inline std::vector<Amount> scan_amounts(std::string_view s) {
  std::vector<Amount> out;
  std::size_t i = 0;
  auto digit = [&](std::size_t k) { return k < s.size() && std::isdigit(static_cast<unsigned char>(s[k])); };
  while (i < s.size()) {
    Amount a;
    std::size_t p = i;
    if (s[p] == '$') {
      a.dollar = true;
      ++p;
      while (p < s.size() && s[p] == ' ') ++p;
      if (!digit(p)) {
        i = p;
        continue;
      }
    } else if (!digit(p) || (p > 0 && (detail::alnum_at(s, p - 1) || s[p - 1] == '.' || s[p - 1] == ','))) {
      ++i;
      continue;
    }
    a.begin = i;
    std::string digits;
    while (digit(p)) digits += s[p++];
    while (p + 3 < s.size() + 0 && s[p] == ',' && digit(p + 1) && digit(p + 2) && digit(p + 3) && !digit(p + 4)) {
      digits.append(s.substr(p + 1, 3));
      p += 4;
    }
    if (p < s.size() && s[p] == '.' && digit(p + 1)) {
      digits += '.';
      ++p;
      while (digit(p)) digits += s[p++];
    }
    if (p < s.size() && (s[p] == 'k' || s[p] == 'K') && !detail::alpha_at(s, p + 1)) {
      a.k_suffix = true;
      ++p;
    }
    if (detail::alpha_at(s, p)) {
      while (p < s.size() && detail::alnum_at(s, p)) ++p;
      i = p;
      continue;
    }
    auto v = detail::number_from(digits);
    i = p;
    if (!v) continue;
    a.value = a.k_suffix ? *v * 1000 : *v;
    a.end = p;
    out.push_back(a);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Detection, parsing, frequency

inline bool is_wage_candidate(std::string_view sentence) {
  if (sentence.find('$') != std::string_view::npos) {
    for (auto& a : scan_amounts(sentence))
      if (a.dollar) return true;
  }
  bool has_number = false;
  for (char c : sentence) has_number = has_number || std::isdigit(static_cast<unsigned char>(c));
  if (!has_number) return false;
  const auto lower = to_lower(sentence);
  if (!detail::find_cues(lower).empty()) return true;
  for (auto& tok : token_strings(lower))
    for (auto w : detail::kWageWords)
      if (tok == w) return true;
  return false;
}

/// Indices of candidate wage sentences.
inline std::vector<std::size_t> detect_wage_sentences(const std::vector<Sentence>& sentences) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sentences.size(); ++i)
    if (is_wage_candidate(sentences[i].text)) out.push_back(i);
  return out;
}

struct ParsedWage {
  double min_value = 0;
  double max_value = 0;
  std::string raw_min, raw_max;
  bool is_range = false;
};

struct WageParse {
  std::optional<ParsedWage> wage;
  std::string diagnostic;  // why no parse
};

/// Grammar: "A - B", "A to B", "between A and B" give a range; a lone amount
/// gives a point. An amount counts only with a '$' or a frequency cue right
/// after it (for ranges, on either end). More than one counted item is
/// ambiguous.
inline WageParse parse_wage(std::string_view sentence) {
  const auto lower = to_lower(sentence);
  const auto amounts = scan_amounts(sentence);
  auto anchored = [&](const Amount& a) { return a.dollar || detail::cue_right_after(lower, a.end).has_value(); };
  auto connector = [&](const Amount& a, const Amount& b) {
    auto gap = trim(std::string_view(lower).substr(a.end, b.begin - a.end));
    if (gap == "-" || gap == "to" || gap == "\xE2\x80\x93" || gap == "\xE2\x80\x94") return true;
    if (gap == "and") {
      auto before = trim(std::string_view(lower).substr(0, a.begin));
      return before.size() >= 7 && before.substr(before.size() - 7) == "between" &&
             (before.size() == 7 || !detail::alnum_at(before, before.size() - 8));
    }
    return false;
  };

  struct Item {
    Amount lo, hi;
    bool range;
  };
  std::vector<Item> items;
  std::size_t unanchored = 0;
  for (std::size_t i = 0; i < amounts.size(); ++i) {
    if (i + 1 < amounts.size() && connector(amounts[i], amounts[i + 1])) {
      const auto &a = amounts[i], &b = amounts[i + 1];
      if (anchored(a) || anchored(b))
        items.push_back({a, b, true});
      else
        unanchored += 2;
      ++i;
      continue;
    }
    if (anchored(amounts[i]))
      items.push_back({amounts[i], amounts[i], false});
    else
      ++unanchored;
  }
  WageParse out;
  if (items.empty()) {
    out.diagnostic = amounts.empty() ? "no amount" : "no amount anchored by a currency symbol or frequency cue";
    return out;
  }
  if (items.size() > 1) {
    out.diagnostic = "ambiguous: " + std::to_string(items.size()) + " amounts without range syntax";
    return out;
  }
  auto item = items.front();
  // "$50-60k": the k carries over to the lower bound
  if (item.range && item.hi.k_suffix && !item.lo.k_suffix && item.lo.value * 1000 <= item.hi.value)
    item.lo.value *= 1000;
  if (item.range && item.lo.value > item.hi.value) {
    out.diagnostic = "range bounds reversed";
    return out;
  }
  ParsedWage w;
  w.min_value = item.lo.value;
  w.max_value = item.hi.value;
  w.is_range = item.range;
  w.raw_min = std::string(sentence.substr(item.lo.begin, item.lo.end - item.lo.begin));
  w.raw_max = std::string(sentence.substr(item.hi.begin, item.hi.end - item.hi.begin));
  out.wage = w;
  return out;
}

struct FrequencyClass {
  PayFrequency frequency;
  bool low_confidence;
};

/// Cue words decide; the cue closest to the amount wins. Without cues the
/// magnitude table applies and the result is flagged low-confidence.
inline FrequencyClass classify_frequency(std::string_view sentence, double min_value, double max_value,
                                         const WageConfig& config = {}) {
  const auto lower = to_lower(sentence);
  const auto cues = detail::find_cues(lower);
  if (!cues.empty()) {
    // distance from the first amount whose value matches
    std::size_t anchor = 0;
    for (auto& a : scan_amounts(sentence))
      if (a.value == min_value || a.value == max_value) {
        anchor = a.end;
        break;
      }
    auto dist = [&](std::size_t pos) { return pos >= anchor ? pos - anchor : anchor - pos; };
    const auto* best = &cues.front();
    for (auto& c : cues)
      if (dist(c.first) < dist(best->first)) best = &c;
    return {best->second->freq, false};
  }
  const double v = (min_value + max_value) / 2;
  if (v < config.hourly_below) return {PayFrequency::hourly, true};
  if (v < config.annual_from) return {PayFrequency::monthly, true};
  return {PayFrequency::annually, true};
}

inline double annual_multiplier(PayFrequency f, const WageConfig& config) {
  switch (f) {
    case PayFrequency::hourly: return config.hours_per_year;
    case PayFrequency::weekly: return config.weeks_per_year;
    case PayFrequency::monthly: return config.months_per_year;
    case PayFrequency::annually: return 1;
  }
  return 1;
}

/// Sets `annualized` and `outlier` from point value or range midpoint.
inline void annualize(WageObservation& obs, const WageConfig& config = {}) {
  if (!obs.min_value && !obs.max_value) throw ArgumentError("annualize: observation has no values");
  const double lo = obs.min_value.value_or(*obs.max_value), hi = obs.max_value.value_or(*obs.min_value);
  obs.annualized = (lo + hi) / 2 * annual_multiplier(obs.frequency, config);
  obs.outlier = obs.annualized < config.outlier_min || obs.annualized > config.outlier_max;
}

inline std::string format_amount(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  return std::string(buf, ec == std::errc() ? p : buf);
}

/// Canonical text for an observation; parse_wage on it returns the same values.
inline std::string render(const WageObservation& obs) {
  static constexpr const char* kPer[] = {"per hour", "per week", "per month", "per year"};
  const auto per = kPer[static_cast<int>(obs.frequency)];
  const double lo = obs.min_value.value_or(obs.max_value.value_or(0));
  const double hi = obs.max_value.value_or(lo);
  if (obs.is_range) return "$" + format_amount(lo) + " - $" + format_amount(hi) + " " + per;
  return "$" + format_amount(lo) + " " + per;
}

// ---------------------------------------------------------------------------
// Per-ad extraction

/// Span override from an external extractor:
/// JSONL {ad_id, sentence_idx, min_span, max_span, freq}.
struct WageOverride {
  std::size_t sentence_index = 0;
  std::optional<std::string> min_span, max_span;
  std::optional<std::string> freq;
};

inline std::map<std::string, std::vector<WageOverride>> load_wage_overrides(const std::filesystem::path& path) {
  std::map<std::string, std::vector<WageOverride>> out;
  const auto lines = split_lines(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto where = path.string() + ":" + std::to_string(i + 1);
    try {
      auto j = nlohmann::json::parse(lines[i]);
      WageOverride o;
      o.sentence_index = j.at("sentence_idx").get<std::size_t>();
      auto opt = [&](const char* k) -> std::optional<std::string> {
        if (!j.contains(k) || j[k].is_null()) return std::nullopt;
        return j[k].get<std::string>();
      };
      o.min_span = opt("min_span");
      o.max_span = opt("max_span");
      o.freq = opt("freq");
      if (!o.min_span && !o.max_span) throw InputError(where + ": override needs min_span or max_span");
      if (o.freq) parse_frequency(*o.freq);
      out[j.at("ad_id").get<std::string>()].push_back(std::move(o));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  for (auto& [id, v] : out)
    std::stable_sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.sentence_index < b.sentence_index; });
  return out;
}

struct AdWage {
  std::string ad_id;
  std::optional<WageObservation> wage;             // the reported value
  std::optional<WageObservation> text_extraction;  // kept separately when metadata wins
  std::vector<std::string> diagnostics;
};

namespace detail {

inline std::optional<double> span_value(const std::string& span) {
  auto a = scan_amounts(span);
  if (a.size() != 1) return std::nullopt;
  return a.front().value;
}

inline std::optional<WageObservation> from_override(const JobAdRecord& ad, const std::vector<Sentence>& sentences,
                                                    const WageOverride& o, const WageConfig& config,
                                                    std::vector<std::string>& diags) {
  WageObservation obs;
  obs.ad_id = ad.id;
  obs.sentence_index = o.sentence_index;
  obs.provenance = "override";
  obs.raw_span_min = o.min_span;
  obs.raw_span_max = o.max_span;
  if (o.min_span) obs.min_value = span_value(*o.min_span);
  if (o.max_span) obs.max_value = span_value(*o.max_span);
  if ((o.min_span && !obs.min_value) || (o.max_span && !obs.max_value)) {
    diags.push_back("override span without a single amount");
    return std::nullopt;
  }
  if (!obs.min_value) obs.min_value = obs.max_value;
  if (!obs.max_value) obs.max_value = obs.min_value;
  if (*obs.min_value > *obs.max_value) {
    diags.push_back("override range bounds reversed");
    return std::nullopt;
  }
  obs.is_range = *obs.min_value != *obs.max_value;
  if (o.freq) {
    obs.frequency = parse_frequency(*o.freq);
  } else {
    const std::string_view text = o.sentence_index < sentences.size() ? std::string_view(sentences[o.sentence_index].text)
                                                                      : std::string_view();
    auto fc = classify_frequency(text, *obs.min_value, *obs.max_value, config);
    obs.frequency = fc.frequency;
    obs.low_confidence = fc.low_confidence;
  }
  annualize(obs, config);
  return obs;
}

}  // namespace detail

/// Text extraction (or override spans when given) plus metadata merge.
/// Metadata wages, when present, are reported and never overwritten; the
/// text result is then kept in `text_extraction`.
inline AdWage extract_wage(const JobAdRecord& ad, const WageConfig& config = {},
                           const std::vector<WageOverride>* overrides = nullptr) {
  AdWage out;
  out.ad_id = ad.id;
  const auto sentences = segment(ad.body, ad.id);
  std::optional<WageObservation> text;
  if (overrides && !overrides->empty()) {
    for (auto& o : *overrides)
      if ((text = detail::from_override(ad, sentences, o, config, out.diagnostics))) break;
  } else {
    for (auto idx : detect_wage_sentences(sentences)) {
      auto p = parse_wage(sentences[idx].text);
      if (!p.wage) {
        out.diagnostics.push_back("sentence " + std::to_string(idx) + ": " + p.diagnostic);
        continue;
      }
      WageObservation obs;
      obs.ad_id = ad.id;
      obs.sentence_index = idx;
      obs.provenance = "text";
      obs.raw_span_min = p.wage->raw_min;
      obs.raw_span_max = p.wage->raw_max;
      obs.min_value = p.wage->min_value;
      obs.max_value = p.wage->max_value;
      obs.is_range = p.wage->is_range;
      auto fc = classify_frequency(sentences[idx].text, p.wage->min_value, p.wage->max_value, config);
      obs.frequency = fc.frequency;
      obs.low_confidence = fc.low_confidence;
      annualize(obs, config);
      text = obs;
      break;
    }
  }
  if (ad.wage_min_meta || ad.wage_max_meta) {
    WageObservation meta;
    meta.ad_id = ad.id;
    meta.provenance = "metadata";
    double lo = ad.wage_min_meta ? *ad.wage_min_meta : *ad.wage_max_meta;
    double hi = ad.wage_max_meta ? *ad.wage_max_meta : lo;
    if (lo > hi) std::swap(lo, hi);
    meta.min_value = lo;
    meta.max_value = hi;
    meta.is_range = lo != hi;
    meta.frequency = PayFrequency::annually;
    annualize(meta, config);
    out.wage = meta;
    out.text_extraction = text;
  } else {
    out.wage = text;
  }
  return out;
}

inline nlohmann::ordered_json to_json(const WageObservation& o) {
  using oj = nlohmann::ordered_json;
  auto opt = [](const auto& v) { return v ? oj(*v) : oj(nullptr); };
  return {{"provenance", o.provenance},
          {"sentence_idx", opt(o.sentence_index)},
          {"raw_span_min", opt(o.raw_span_min)},
          {"raw_span_max", opt(o.raw_span_max)},
          {"min_value", opt(o.min_value)},
          {"max_value", opt(o.max_value)},
          {"frequency", frequency_name(o.frequency)},
          {"low_confidence", o.low_confidence},
          {"point_or_range", o.is_range ? "range" : "point"},
          {"annualized", o.annualized},
          {"outlier", o.outlier}};
}

inline nlohmann::ordered_json to_json(const AdWage& w) {
  nlohmann::ordered_json j;
  j["ad_id"] = w.ad_id;
  if (w.wage) {
    auto body = to_json(*w.wage);
    for (auto& [k, v] : body.items()) j[k] = v;
  } else {
    j["provenance"] = nullptr;
  }
  j["text_extraction"] = w.text_extraction ? to_json(*w.text_extraction) : nlohmann::ordered_json(nullptr);
  return j;
}

}  // namespace jobtext
