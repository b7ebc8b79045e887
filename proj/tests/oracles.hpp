#pragma once

// Deliberately naive reference implementations used to check the engine.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "jobtext/jobtext.hpp"

namespace oracle {

// Per-entry sliding-window dictionary scan with the same resolution rules as
// the automaton: longest span, then leftmost, every entry on a chosen span.
inline std::vector<jobtext::DictionaryHit> scan(const std::vector<jobtext::MapEntry>& entries,
                                                const std::vector<jobtext::AssociationRule>& rules,
                                                const std::vector<std::string>& toks) {
  struct Cand {
    std::size_t start, end, entry, form;
  };
  std::vector<Cand> cands;
  for (std::size_t e = 0; e < entries.size(); ++e)
    for (std::size_t f = 0; f < entries[e].surface_forms.size(); ++f) {
      auto form = jobtext::token_strings(entries[e].surface_forms[f]);
      if (form.size() > toks.size()) continue;
      for (std::size_t i = 0; i + form.size() <= toks.size(); ++i)
        if (std::equal(form.begin(), form.end(), toks.begin() + static_cast<std::ptrdiff_t>(i)))
          cands.push_back({i, i + form.size(), e, f});
    }
  std::vector<Cand> chosen;
  std::vector<bool> used(toks.size(), false);
  // Visit spans from longest to shortest, left to right.
  for (std::size_t len = toks.size(); len >= 1; --len)
    for (std::size_t s = 0; s + len <= toks.size(); ++s) {
      std::vector<Cand> here;
      for (auto& c : cands)
        if (c.start == s && c.end == s + len) here.push_back(c);
      if (here.empty()) continue;
      bool clash = false;
      for (std::size_t t = s; t < s + len; ++t) clash = clash || used[t];
      if (clash) continue;
      for (std::size_t t = s; t < s + len; ++t) used[t] = true;
      chosen.insert(chosen.end(), here.begin(), here.end());
    }
  std::sort(chosen.begin(), chosen.end(), [](const Cand& a, const Cand& b) {
    return std::tie(a.start, a.entry, a.form) < std::tie(b.start, b.entry, b.form);
  });
  std::vector<jobtext::DictionaryHit> hits;
  for (auto& c : chosen) {
    auto& e = entries[c.entry];
    hits.push_back({"", e.uci, e.surface_forms[c.form], e.label, c.start, c.end, c.entry});
  }
  if (rules.empty()) return hits;

  auto near = [](std::size_t gs, std::size_t ge, const jobtext::DictionaryHit& h, std::size_t w) {
    // guard lies inside [start - w, end + w)
    return static_cast<long>(gs) >= static_cast<long>(h.start_token) - static_cast<long>(w) &&
           ge <= h.end_token + w;
  };
  auto guarded = [&](const jobtext::AssociationRule& r, std::size_t self, const std::vector<jobtext::DictionaryHit>& pool) {
    const auto& h = pool[self];
    for (auto& g : r.guard_terms) {
      auto gt = jobtext::token_strings(g);
      for (std::size_t i = 0; i + gt.size() <= toks.size(); ++i)
        if (std::equal(gt.begin(), gt.end(), toks.begin() + static_cast<std::ptrdiff_t>(i)) &&
            near(i, i + gt.size(), h, r.window))
          return true;
    }
    if (!r.guard_uci.empty())
      for (std::size_t k = 0; k < pool.size(); ++k)
        if (k != self && pool[k].uci == r.guard_uci && near(pool[k].start_token, pool[k].end_token, h, r.window))
          return true;
    return false;
  };
  std::vector<jobtext::DictionaryHit> survivors;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    bool drop = false;
    for (auto& r : rules)
      if (r.kind == jobtext::RuleKind::negation && r.trigger_uci == hits[i].uci && guarded(r, i, hits)) drop = true;
    if (!drop) survivors.push_back(hits[i]);
  }
  std::vector<jobtext::DictionaryHit> out;
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    bool ok = true;
    for (auto& r : rules)
      if (r.kind == jobtext::RuleKind::co_occur && r.trigger_uci == survivors[i].uci && !guarded(r, i, survivors))
        ok = false;
    if (ok) out.push_back(survivors[i]);
  }
  return out;
}

// Full-table Levenshtein over code points.
inline std::size_t levenshtein(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
  return d[a.size()][b.size()];
}

inline std::u32string decode(const std::string& s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    auto c = static_cast<unsigned char>(s[i]);
    int len = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
    char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
    for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]) & 0x3F);
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

inline double lev_ratio(const std::string& a, const std::string& b) {
  auto ua = decode(a), ub = decode(b);
  const auto m = std::max(ua.size(), ub.size());
  if (m == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(ua, ub)) / static_cast<double>(m);
}

// Exhaustive top-k: score every row, full sort by (score desc, id asc).
inline std::vector<std::pair<std::string, double>> nearest(const std::vector<float>& q, const jobtext::EmbeddingMatrix& m,
                                                           std::size_t k) {
  double qn = 0;
  for (auto v : q) qn += double(v) * double(v);
  qn = std::sqrt(qn);
  std::vector<std::pair<std::string, double>> all;
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto r = m.row(i);
    double dot = 0, rn = 0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      dot += double(r[j]) * double(q[j]);
      rn += double(r[j]) * double(r[j]);
    }
    all.push_back({m.id(i), std::clamp(dot / (qn * std::sqrt(rn)), -1.0, 1.0)});
  }
  std::sort(all.begin(), all.end(), [](auto& a, auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  all.resize(std::min(k, all.size()));
  return all;
}

// Active months of an ad, listed one by one.
inline std::vector<jobtext::YearMonth> active_months(const jobtext::JobAdRecord& ad,
                                                     const std::set<jobtext::YearMonth>& anomalous, int offset) {
  jobtext::YearMonth start = ad.date_compiled.minus(offset);
  if (ad.date_acquired && !anomalous.count(*ad.date_acquired)) start = *ad.date_acquired;
  std::vector<jobtext::YearMonth> out;
  for (auto m = start; m <= ad.date_compiled; m = m.plus(1)) out.push_back(m);
  return out;
}

// Nearest-rank percentile by counting.
inline double nearest_rank(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  std::size_t rank = 1;
  while (static_cast<double>(rank) < p / 100.0 * static_cast<double>(v.size()) - 1e-12) ++rank;
  return v[std::min(rank, v.size()) - 1];
}

// Two-pass Pearson with long double accumulation.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

}  // namespace oracle
