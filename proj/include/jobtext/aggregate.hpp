#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobtext/corpus.hpp"
#include "jobtext/csv.hpp"
#include "jobtext/error.hpp"
#include "jobtext/month.hpp"

namespace jobtext {

// ---------------------------------------------------------------------------
// Monthly active jobs

struct MajEntry {
  std::string ad_id;
  YearMonth start;
  YearMonth end;
  bool adjusted = false;

  [[nodiscard]] int span() const { return YearMonth::span(start, end); }
};

inline std::set<YearMonth> default_anomalous_months() {
  return {YearMonth(2015, 1), YearMonth(2016, 1), YearMonth(2017, 1)};
}

class MonthlyActiveIndex {
 public:
  MonthlyActiveIndex() = default;
  explicit MonthlyActiveIndex(std::vector<MajEntry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), [](auto& a, auto& b) { return a.ad_id < b.ad_id; });
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (i > 0 && entries_[i - 1].ad_id == entries_[i].ad_id)
        throw InputError("duplicate ad id in activity index: " + entries_[i].ad_id);
      if (entries_[i].end < entries_[i].start)
        throw InputError("ad " + entries_[i].ad_id + " ends before it starts");
    }
  }

  [[nodiscard]] const std::vector<MajEntry>& entries() const { return entries_; }
  [[nodiscard]] const MajEntry* find(std::string_view ad_id) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), ad_id,
                               [](const MajEntry& e, std::string_view id) { return e.ad_id < id; });
    return it != entries_.end() && it->ad_id == ad_id ? &*it : nullptr;
  }

  /// month -> active ad ids (ascending)
  [[nodiscard]] std::map<YearMonth, std::vector<std::string>> by_month() const {
    std::map<YearMonth, std::vector<std::string>> out;
    for (auto& e : entries_)
      for (auto m = e.start; m <= e.end; m = m.plus(1)) out[m].push_back(e.ad_id);
    return out;
  }

  [[nodiscard]] bool active(std::string_view ad_id, YearMonth m) const {
    auto* e = find(ad_id);
    return e && e->start <= m && m <= e->end;
  }

 private:
  std::vector<MajEntry> entries_;
};

/// An ad is active from its acquisition month through its compiled month.
/// Without an acquisition month, or when it falls in an anomalous month,
/// the start is moved to `fallback_offset` months before the end.
inline MonthlyActiveIndex build_maj(const std::vector<JobAdRecord>& ads,
                                    const std::set<YearMonth>& anomalous = default_anomalous_months(),
                                    int fallback_offset = 2) {
  if (fallback_offset < 0) throw ArgumentError("fallback offset must be >= 0");
  std::vector<MajEntry> entries;
  entries.reserve(ads.size());
  for (auto& ad : ads) {
    MajEntry e{ad.id, ad.date_compiled, ad.date_compiled, false};
    if (ad.date_acquired && !anomalous.contains(*ad.date_acquired)) {
      e.start = *ad.date_acquired;
    } else {
      e.start = ad.date_compiled.minus(fallback_offset);
      e.adjusted = true;
    }
    entries.push_back(std::move(e));
  }
  return MonthlyActiveIndex(std::move(entries));
}

// ---------------------------------------------------------------------------
// Statistics helpers

/// Nearest rank: the value at position ceil(p/100 * n) (1-based) of the
/// sorted values; p = 0 gives the minimum.
inline std::vector<double> percentiles(std::vector<double> values, const std::vector<double>& ps) {
  if (values.empty()) throw ArgumentError("percentiles of an empty set");
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  for (double p : ps) {
    if (!(p >= 0 && p <= 100)) throw ArgumentError("percentile must be in [0, 100]");
    const double n = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    out.push_back(values[rank - 1]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grouped aggregation

enum class GroupDim { month, soc2, soc4, soc6, naics2, naics4, naics6, state };

inline const char* dim_name(GroupDim d) {
  static constexpr const char* kNames[] = {"month", "soc2", "soc4", "soc6", "naics2", "naics4", "naics6", "state"};
  return kNames[static_cast<int>(d)];
}

/// Comma-separated dimensions, e.g. "month,soc2". Empty spec = one group.
inline std::vector<GroupDim> parse_group_spec(std::string_view spec) {
  std::vector<GroupDim> out;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    auto comma = spec.find(',', pos);
    if (comma == std::string_view::npos) comma = spec.size();
    const auto name = to_lower(trim(spec.substr(pos, comma - pos)));
    pos = comma + 1;
    if (name.empty()) continue;
    bool found = false;
    for (int d = 0; d <= static_cast<int>(GroupDim::state); ++d) {
      if (name == dim_name(static_cast<GroupDim>(d))) {
        if (std::find(out.begin(), out.end(), static_cast<GroupDim>(d)) != out.end())
          throw ArgumentError("group dimension '" + name + "' repeated");
        out.push_back(static_cast<GroupDim>(d));
        found = true;
      }
    }
    if (!found) throw ArgumentError("unknown group dimension '" + name + "'");
  }
  return out;
}

/// Per-ad classification keys used for grouping.
struct AdKeys {
  std::optional<std::string> soc;    // "13-2011" or "13-2011.00"
  std::optional<std::string> naics;  // 2-6 digits
  std::optional<std::string> state;
};

inline constexpr std::string_view kMissingKey = "NA";

inline std::string soc_prefix(std::string_view soc, std::size_t digits) {
  std::string d;
  for (char c : soc.substr(0, soc.find('.')))
    if (c >= '0' && c <= '9') d += c;
  if (d.size() < digits) return std::string(kMissingKey);
  d.resize(digits);
  return digits > 2 ? d.substr(0, 2) + "-" + d.substr(2) : d;
}

inline std::string naics_prefix(std::string_view naics, std::size_t digits) {
  if (naics.size() < digits) return std::string(kMissingKey);
  return std::string(naics.substr(0, digits));
}

/// One extracted feature of an ad. Categorical features carry only a code;
/// numeric ones carry a value (code is ignored).
struct Feature {
  std::string ad_id;
  std::string family;
  std::string code;
  std::optional<double> value;
  bool outlier = false;
};

struct AggregateOptions {
  bool exclude_outliers = true;
  std::vector<double> percentile_points = {10, 25, 50, 75, 90};
};

struct AggregateRow {
  std::vector<std::string> key;  // one value per group dimension
  std::string family;            // "active_ads" for the activity row
  std::string code;              // empty for numeric families
  std::size_t count = 0;
  std::size_t active_ads = 0;      // ad-months in the group
  std::optional<double> share;     // count / family total within the group
  std::optional<double> ad_share;  // count / active_ads
  std::optional<double> mean;
  std::vector<double> pct;  // at AggregateOptions::percentile_points

  [[nodiscard]] bool numeric() const { return mean.has_value(); }
};

/// Each ad contributes its features to every month it is active. Partial
/// aggregators built from any split of the feature stream merge into the
/// same rows.
class Aggregator {
 public:
  Aggregator(std::vector<GroupDim> spec, const MonthlyActiveIndex& index, const std::map<std::string, AdKeys>& keys,
             AggregateOptions options = {})
      : spec_(std::move(spec)), index_(&index), keys_(&keys), options_(std::move(options)) {}

  void add(const Feature& f) {
    auto* e = index_->find(f.ad_id);
    if (!e) {
      ++unknown_;
      return;
    }
    if (f.value && f.outlier && options_.exclude_outliers) {
      ++excluded_outliers_;
      return;
    }
    for (auto m = e->start; m <= e->end; m = m.plus(1)) {
      auto& cell = cells_[group_key(f.ad_id, m)][{f.family, f.value ? std::string() : f.code}];
      ++cell.count;
      if (f.value) cell.values.push_back(*f.value);
    }
  }

  void add(const std::vector<Feature>& batch) {
    for (auto& f : batch) add(f);
  }

  void merge(const Aggregator& other) {
    if (other.spec_ != spec_) throw ArgumentError("cannot merge aggregators with different group specs");
    for (auto& [k, metrics] : other.cells_)
      for (auto& [m, c] : metrics) {
        auto& mine = cells_[k][m];
        mine.count += c.count;
        mine.values.insert(mine.values.end(), c.values.begin(), c.values.end());
      }
    unknown_ += other.unknown_;
    excluded_outliers_ += other.excluded_outliers_;
  }

  /// Rows ordered by group key, then family, then code. Every group with at
  /// least one active ad gets an "active_ads" row.
  [[nodiscard]] std::vector<AggregateRow> finish() const {
    std::map<Key, std::size_t> active;
    for (auto& e : index_->entries())
      for (auto m = e.start; m <= e.end; m = m.plus(1)) ++active[group_key(e.ad_id, m)];

    std::vector<AggregateRow> rows;
    for (auto& [k, n] : active) {
      AggregateRow a;
      a.key = k;
      a.family = "active_ads";
      a.count = n;
      a.active_ads = n;
      rows.push_back(std::move(a));
      auto it = cells_.find(k);
      if (it == cells_.end()) continue;
      std::map<std::string, std::size_t> family_total;
      for (auto& [m, c] : it->second)
        if (c.values.empty()) family_total[m.first] += c.count;
      for (auto& [m, c] : it->second) {
        AggregateRow r;
        r.key = k;
        r.family = m.first;
        r.code = m.second;
        r.count = c.count;
        r.active_ads = n;
        if (c.values.empty()) {
          r.share = static_cast<double>(c.count) / static_cast<double>(family_total[m.first]);
          r.ad_share = static_cast<double>(c.count) / static_cast<double>(n);
        } else {
          auto v = c.values;
          std::sort(v.begin(), v.end());
          double sum = 0;
          for (double x : v) sum += x;
          r.mean = sum / static_cast<double>(v.size());
          r.pct = percentiles(std::move(v), options_.percentile_points);
        }
        rows.push_back(std::move(r));
      }
    }
    return rows;
  }

  [[nodiscard]] std::size_t unknown_ad_features() const { return unknown_; }
  [[nodiscard]] std::size_t excluded_outliers() const { return excluded_outliers_; }
  [[nodiscard]] const std::vector<GroupDim>& spec() const { return spec_; }
  [[nodiscard]] const AggregateOptions& options() const { return options_; }

 private:
  using Key = std::vector<std::string>;
  struct Cell {
    std::size_t count = 0;
    std::vector<double> values;
  };

  [[nodiscard]] Key group_key(const std::string& ad_id, YearMonth m) const {
    Key k;
    k.reserve(spec_.size());
    const AdKeys* ak = nullptr;
    if (auto it = keys_->find(ad_id); it != keys_->end()) ak = &it->second;
    auto soc = [&](std::size_t n) { return ak && ak->soc ? soc_prefix(*ak->soc, n) : std::string(kMissingKey); };
    auto naics = [&](std::size_t n) { return ak && ak->naics ? naics_prefix(*ak->naics, n) : std::string(kMissingKey); };
    for (auto d : spec_) {
      switch (d) {
        case GroupDim::month: k.push_back(m.str()); break;
        case GroupDim::soc2: k.push_back(soc(2)); break;
        case GroupDim::soc4: k.push_back(soc(4)); break;
        case GroupDim::soc6: k.push_back(soc(6)); break;
        case GroupDim::naics2: k.push_back(naics(2)); break;
        case GroupDim::naics4: k.push_back(naics(4)); break;
        case GroupDim::naics6: k.push_back(naics(6)); break;
        case GroupDim::state: k.push_back(ak && ak->state ? *ak->state : std::string(kMissingKey)); break;
      }
    }
    return k;
  }

  std::vector<GroupDim> spec_;
  const MonthlyActiveIndex* index_;
  const std::map<std::string, AdKeys>* keys_;
  AggregateOptions options_;
  std::map<Key, std::map<std::pair<std::string, std::string>, Cell>> cells_;
  std::size_t unknown_ = 0;
  std::size_t excluded_outliers_ = 0;
};

inline std::vector<AggregateRow> aggregate(const std::vector<Feature>& features, const MonthlyActiveIndex& index,
                                           const std::map<std::string, AdKeys>& keys, std::vector<GroupDim> spec,
                                           AggregateOptions options = {}) {
  Aggregator a(std::move(spec), index, keys, std::move(options));
  a.add(features);
  return a.finish();
}

/// Per (group key, family): the k highest-count categorical codes, ties by
/// code ascending. Numeric and activity rows are dropped.
inline std::vector<AggregateRow> top_k(const std::vector<AggregateRow>& rows, std::size_t k) {
  if (k < 1) throw ArgumentError("top_k: k must be >= 1");
  std::map<std::pair<std::vector<std::string>, std::string>, std::vector<const AggregateRow*>> groups;
  for (auto& r : rows)
    if (!r.numeric() && r.family != "active_ads") groups[{r.key, r.family}].push_back(&r);
  std::vector<AggregateRow> out;
  for (auto& [g, v] : groups) {
    std::sort(v.begin(), v.end(), [](auto* a, auto* b) { return a->count != b->count ? a->count > b->count : a->code < b->code; });
    for (std::size_t i = 0; i < v.size() && i < k; ++i) out.push_back(*v[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? p : buf);
}

inline std::vector<std::string> aggregate_header(const std::vector<GroupDim>& spec, const AggregateOptions& opt) {
  std::vector<std::string> h;
  for (auto d : spec) h.emplace_back(dim_name(d));
  for (auto c : {"family", "code", "count", "active_ads", "share", "ad_share", "mean"}) h.emplace_back(c);
  for (double p : opt.percentile_points) h.push_back("p" + format_number(p));
  return h;
}

inline std::string aggregate_csv(const std::vector<AggregateRow>& rows, const std::vector<GroupDim>& spec,
                                 const AggregateOptions& opt = {}) {
  std::string out = csv::format_row(aggregate_header(spec, opt));
  auto opt_num = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (auto& r : rows) {
    std::vector<std::string> f = r.key;
    f.push_back(r.family);
    f.push_back(r.code);
    f.push_back(std::to_string(r.count));
    f.push_back(std::to_string(r.active_ads));
    f.push_back(opt_num(r.share));
    f.push_back(opt_num(r.ad_share));
    f.push_back(opt_num(r.mean));
    for (std::size_t i = 0; i < opt.percentile_points.size(); ++i)
      f.push_back(i < r.pct.size() ? format_number(r.pct[i]) : std::string());
    out += csv::format_row(f);
  }
  return out;
}

inline nlohmann::ordered_json to_json(const AggregateRow& r, const std::vector<GroupDim>& spec,
                                      const AggregateOptions& opt = {}) {
  using oj = nlohmann::ordered_json;
  oj key = oj::object();
  for (std::size_t i = 0; i < spec.size(); ++i) key[dim_name(spec[i])] = r.key[i];
  auto opt_num = [](const std::optional<double>& v) { return v ? oj(*v) : oj(nullptr); };
  oj j{{"key", key},           {"family", r.family},          {"code", r.code},
       {"count", r.count},     {"active_ads", r.active_ads},  {"share", opt_num(r.share)},
       {"ad_share", opt_num(r.ad_share)}, {"mean", opt_num(r.mean)}};
  oj pct = oj::object();
  for (std::size_t i = 0; i < opt.percentile_points.size() && i < r.pct.size(); ++i)
    pct["p" + format_number(opt.percentile_points[i])] = r.pct[i];
  j["percentiles"] = r.pct.empty() ? oj(nullptr) : pct;
  return j;
}

}  // namespace jobtext
