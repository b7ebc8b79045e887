#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobtext/csv.hpp"
#include "jobtext/error.hpp"
#include "jobtext/text.hpp"

namespace jobtext {

// ---------------------------------------------------------------------------
// Score-bin tables

struct ScoreBin {
  std::string label;
  double lo = 0;  // inclusive lower edge
  double hi = 0;  // upper value named in the label
  double freq = 0;
  double accuracy = 0;
};

/// Bins ordered by score; frequencies sum to 1.
class BinTable {
 public:
  static constexpr double kEdgeTol = 1e-9;

  explicit BinTable(std::vector<ScoreBin> bins, std::string accuracy_name = "accuracy")
      : bins_(std::move(bins)), accuracy_name_(std::move(accuracy_name)) {
    if (bins_.empty()) throw InputError("bin table has no bins");
    double total = 0;
    for (std::size_t i = 0; i < bins_.size(); ++i) {
      const auto& b = bins_[i];
      if (b.hi < b.lo) throw InputError("bin '" + b.label + "' has upper < lower");
      if (i > 0 && !(b.lo > bins_[i - 1].hi)) throw InputError("bins must be ascending and disjoint at '" + b.label + "'");
      if (b.freq < 0) throw InputError("bin '" + b.label + "' has negative frequency");
      if (b.accuracy < 0 || b.accuracy > 1) throw InputError("bin '" + b.label + "' accuracy outside [0, 1]");
      total += b.freq;
    }
    if (std::abs(total - 1) > 1e-6) throw InputError("bin frequencies sum to " + std::to_string(total) + ", not 1");
  }

  /// "0.85" -> [0.85, 0.85]; "0.80-0.84" or "0.80--0.84" -> [0.80, 0.84].
  static std::pair<double, double> parse_label(std::string_view label) {
    auto num = [&](std::string_view v) {
      auto str = std::string(trim(v));
      try {
        std::size_t used = 0;
        double d = std::stod(str, &used);
        if (used != str.size()) throw std::invalid_argument("trailing");
        return d;
      } catch (const std::exception&) {
        throw InputError("bad bin label '" + std::string(label) + "'");
      }
    };
    const auto s = trim(label);
    static constexpr std::string_view kEnDash = "\xE2\x80\x93";
    auto sep = s.find('-');
    auto sep_len = std::size_t{1};
    if (auto en = s.find(kEnDash); en != std::string_view::npos && en < sep) {
      sep = en;
      sep_len = kEnDash.size();
    }
    if (sep == std::string_view::npos) {
      const double v = num(s);
      return {v, v};
    }
    auto rest = s.substr(sep + sep_len);
    while (!rest.empty() && rest.front() == '-') rest.remove_prefix(1);
    return {num(s.substr(0, sep)), num(rest)};
  }

  /// CSV: bin_label, freq and one or more accuracy columns; `accuracy_column`
  /// picks one (case-insensitive).
  static BinTable load(const std::filesystem::path& path, std::string_view accuracy_column) {
    return from_table(csv::Table::load(path), accuracy_column);
  }

  static BinTable from_table(const csv::Table& t, std::string_view accuracy_column) {
    const auto c_label = t.require("bin_label"), c_freq = t.require("freq");
    const auto c_acc = t.require(accuracy_column);
    std::vector<ScoreBin> bins;
    for (auto& row : t.rows()) {
      ScoreBin b;
      b.label = std::string(trim(csv::Table::cell(row, c_label)));
      std::tie(b.lo, b.hi) = parse_label(b.label);
      auto num = [&](std::size_t c, const char* what) {
        try {
          return std::stod(std::string(trim(csv::Table::cell(row, c))));
        } catch (const std::exception&) {
          throw InputError(t.source() + ":" + std::to_string(row.line) + ": bad " + what);
        }
      };
      b.freq = num(c_freq, "freq");
      b.accuracy = num(c_acc, "accuracy");
      bins.push_back(std::move(b));
    }
    return BinTable(std::move(bins), std::string(accuracy_column));
  }

  [[nodiscard]] const std::vector<ScoreBin>& bins() const { return bins_; }
  [[nodiscard]] const std::string& accuracy_name() const { return accuracy_name_; }

  /// Lower edges of all bins, ascending.
  [[nodiscard]] std::vector<double> edges() const {
    std::vector<double> e;
    for (auto& b : bins_) e.push_back(b.lo);
    return e;
  }

  /// Index of the first retained bin for threshold t. Thresholds at or
  /// below the first edge retain everything; others must sit on an edge.
  [[nodiscard]] std::size_t first_retained(double t) const {
    if (t <= bins_.front().lo + kEdgeTol) return 0;
    for (std::size_t i = 1; i < bins_.size(); ++i)
      if (std::abs(t - bins_[i].lo) <= kEdgeTol) return i;
    std::string lower = "none", upper = "none";
    for (auto& b : bins_) {
      if (b.lo < t) lower = format_edge(b.lo);
      if (b.lo > t && upper == "none") upper = format_edge(b.lo);
    }
    throw ArgumentError("threshold " + format_edge(t) + " is not on a bin edge; nearest edges are " + lower + " and " +
                        upper);
  }

 private:
  static std::string format_edge(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
  }
  std::vector<ScoreBin> bins_;
  std::string accuracy_name_;
};

struct ConfusionEstimate {
  double threshold = 0;
  double tp = 0, fp = 0, tn = 0, fn = 0;
  std::optional<double> precision, recall, f1;  // absent when undefined (0/0)
};

/// Expected confusion counts when results scoring below `threshold` are
/// discarded. Unflagged sentences contribute false negatives at the stage-1
/// miss rate.
inline ConfusionEstimate simulate_confusion(const BinTable& bins, double n_flagged, double n_unflagged, double stage1_fnr,
                                            double threshold) {
  if (!(stage1_fnr >= 0 && stage1_fnr <= 1)) throw ArgumentError("stage1_fnr must be in [0, 1]");
  if (n_flagged < 0 || n_unflagged < 0) throw ArgumentError("population counts must be >= 0");
  const auto first = bins.first_retained(threshold);
  ConfusionEstimate e;
  e.threshold = threshold;
  double kept_ok = 0, kept_bad = 0, dropped_ok = 0;
  for (std::size_t i = 0; i < bins.bins().size(); ++i) {
    const auto& b = bins.bins()[i];
    if (i >= first) {
      kept_ok += b.freq * b.accuracy;
      kept_bad += b.freq * (1 - b.accuracy);
    } else {
      dropped_ok += b.freq * b.accuracy;
    }
  }
  e.tp = n_flagged * kept_ok;
  e.fp = n_flagged * kept_bad;
  e.fn = n_flagged * dropped_ok + n_unflagged * stage1_fnr;
  e.tn = std::max(0.0, (n_flagged + n_unflagged) - e.tp - e.fp - e.fn);
  if (e.tp + e.fp > 0) e.precision = e.tp / (e.tp + e.fp);
  if (e.tp + e.fn > 0) e.recall = e.tp / (e.tp + e.fn);
  if (e.precision && e.recall && *e.precision + *e.recall > 0)
    e.f1 = 2 * *e.precision * *e.recall / (*e.precision + *e.recall);
  return e;
}

inline nlohmann::ordered_json to_json(const ConfusionEstimate& e) {
  using oj = nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? oj(*v) : oj(nullptr); };
  return {{"threshold", e.threshold}, {"tp", e.tp},
          {"fp", e.fp},               {"tn", e.tn},
          {"fn", e.fn},               {"precision", opt(e.precision)},
          {"recall", opt(e.recall)},  {"f1", opt(e.f1)}};
}

/// The estimate at `threshold` plus the whole curve over every bin edge.
inline nlohmann::ordered_json simulation_report(const BinTable& bins, double n_flagged, double n_unflagged,
                                                double stage1_fnr, double threshold) {
  nlohmann::ordered_json curve = nlohmann::ordered_json::array();
  for (double edge : bins.edges()) curve.push_back(to_json(simulate_confusion(bins, n_flagged, n_unflagged, stage1_fnr, edge)));
  return {{"accuracy_column", bins.accuracy_name()},
          {"n_flagged", n_flagged},
          {"n_unflagged", n_unflagged},
          {"stage1_fnr", stage1_fnr},
          {"estimate", to_json(simulate_confusion(bins, n_flagged, n_unflagged, stage1_fnr, threshold))},
          {"curve", curve}};
}

// ---------------------------------------------------------------------------
// Inter-rater statistics

using RaterTable = std::vector<std::vector<double>>;

namespace detail {

inline double check_rater_table(const RaterTable& t) {
  if (t.empty()) throw ArgumentError("rater table is empty");
  double total = 0;
  for (auto& row : t) {
    if (row.size() != t.size()) throw ArgumentError("rater table must be square");
    for (double v : row) {
      if (v < 0) throw ArgumentError("rater table has a negative count");
      total += v;
    }
  }
  if (total <= 0) throw ArgumentError("rater table total must be > 0");
  return total;
}

}  // namespace detail

/// Share of items on the diagonal.
inline double agreement(const RaterTable& t) {
  const double total = detail::check_rater_table(t);
  double diag = 0;
  for (std::size_t i = 0; i < t.size(); ++i) diag += t[i][i];
  return diag / total;
}

/// Cohen's kappa. When chance agreement is 1 the value is 1 for perfect
/// observed agreement and undefined otherwise.
inline double kappa(const RaterTable& t) {
  const double total = detail::check_rater_table(t);
  const double po = agreement(t);
  double pe = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    double row = 0, col = 0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      row += t[i][j];
      col += t[j][i];
    }
    pe += (row / total) * (col / total);
  }
  if (std::abs(1 - pe) < 1e-15) {
    if (std::abs(1 - po) < 1e-15) return 1.0;
    throw ArgumentError("kappa undefined: chance agreement is 1");
  }
  return (po - pe) / (1 - pe);
}

/// Contingency table from paired labels; categories sorted.
inline RaterTable contingency(const std::vector<std::string>& a, const std::vector<std::string>& b,
                              std::vector<std::string>* categories = nullptr) {
  if (a.size() != b.size()) throw ArgumentError("rater label vectors differ in length");
  std::set<std::string> cats(a.begin(), a.end());
  cats.insert(b.begin(), b.end());
  std::vector<std::string> order(cats.begin(), cats.end());
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  RaterTable t(order.size(), std::vector<double>(order.size(), 0));
  for (std::size_t i = 0; i < a.size(); ++i) t[pos[a[i]]][pos[b[i]]] += 1;
  if (categories) *categories = std::move(order);
  return t;
}

struct RaterAccuracy {
  double strict = 0;   // reference equals every rater
  double lenient = 0;  // reference equals at least one rater
};

/// `decisions[i]` holds every rater's label for item i.
inline RaterAccuracy rater_accuracy(const std::vector<std::vector<std::string>>& decisions,
                                    const std::vector<std::string>& reference) {
  if (decisions.empty()) throw ArgumentError("rater accuracy needs at least one item");
  if (decisions.size() != reference.size()) throw ArgumentError("decisions and reference differ in length");
  std::size_t strict = 0, lenient = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (decisions[i].empty()) throw ArgumentError("item " + std::to_string(i) + " has no rater decisions");
    const auto n = static_cast<std::size_t>(std::count(decisions[i].begin(), decisions[i].end(), reference[i]));
    strict += n == decisions[i].size();
    lenient += n > 0;
  }
  const auto d = static_cast<double>(decisions.size());
  return {static_cast<double>(strict) / d, static_cast<double>(lenient) / d};
}

/// Product-moment correlation.
inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw ArgumentError("pearson: length mismatch");
  if (xs.size() < 2) throw ArgumentError("pearson: need at least 2 points");
  const auto n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0 || syy == 0) throw ArgumentError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Stratified sampling

/// Uniform integer in [0, n) from a 64-bit engine by rejection, so the draw
/// sequence does not depend on the standard library's distributions.
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw ArgumentError("bounded_draw: empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  for (;;) {
    const std::uint64_t x = rng();
    if (x < limit) return x % n;
  }
}

struct ScoredItem {
  std::string id;
  double score = 0;
};

struct SampledItem {
  std::size_t index = 0;  // position in the input
  std::size_t bin = 0;
};

/// Bin i is [edges[i], edges[i+1]); the last bin is open above; items below
/// the first edge are ignored. Up to `per_bin_n` items are drawn per bin
/// without replacement; smaller bins come back whole. Output is ordered by
/// bin, then input position.
inline std::vector<SampledItem> stratified_sample(const std::vector<ScoredItem>& items, const std::vector<double>& edges,
                                                  std::size_t per_bin_n, std::uint64_t seed) {
  if (per_bin_n < 1) throw ArgumentError("per_bin_n must be >= 1");
  if (edges.empty()) throw ArgumentError("stratified_sample: no bin edges");
  if (!std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw ArgumentError("stratified_sample: edges must be strictly ascending");
  std::vector<std::vector<std::size_t>> members(edges.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double s = items[i].score;
    if (s < edges.front()) continue;
    const auto b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), s) - edges.begin()) - 1;
    members[b].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<SampledItem> out;
  for (std::size_t b = 0; b < members.size(); ++b) {
    auto& m = members[b];
    if (m.size() > per_bin_n) {
      for (std::size_t i = 0; i < per_bin_n; ++i) {
        const auto j = i + static_cast<std::size_t>(bounded_draw(rng, m.size() - i));
        std::swap(m[i], m[j]);
      }
      m.resize(per_bin_n);
      std::sort(m.begin(), m.end());
    }
    for (auto i : m) out.push_back({i, b});
  }
  return out;
}

}  // namespace jobtext
