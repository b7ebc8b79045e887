#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace jobtext;

namespace {

YearMonth ym(const char* s) { return *YearMonth::parse(s); }

JobAdRecord ad(std::string id, std::optional<YearMonth> acquired, YearMonth compiled) {
  JobAdRecord a;
  a.id = std::move(id);
  a.date_acquired = acquired;
  a.date_compiled = compiled;
  return a;
}

Feature cat(std::string ad_id, std::string family, std::string code) { return {std::move(ad_id), std::move(family), std::move(code), std::nullopt, false}; }

}  // namespace

TEST(Maj, WorkedExamples) {
  auto idx = build_maj({ad("a", ym("2016-03"), ym("2016-05")), ad("b", std::nullopt, ym("2016-05")),
                        ad("c", ym("2015-01"), ym("2016-07")), ad("d", ym("2016-05"), ym("2016-05"))});
  auto* a = idx.find("a");
  ASSERT_TRUE(a);
  EXPECT_EQ(a->span(), 3);
  EXPECT_FALSE(a->adjusted);
  auto* b = idx.find("b");
  EXPECT_EQ(b->start.str(), "2016-03");
  EXPECT_TRUE(b->adjusted);
  // acquired in an anomalous month: active 2016-05 .. 2016-07
  auto* c = idx.find("c");
  EXPECT_EQ(c->start.str(), "2016-05");
  EXPECT_EQ(c->end.str(), "2016-07");
  EXPECT_TRUE(c->adjusted);
  EXPECT_EQ(idx.find("d")->span(), 1);
  EXPECT_FALSE(idx.find("zzz"));
  auto months = idx.by_month();
  EXPECT_EQ(months.at(ym("2016-05")), (std::vector<std::string>{"a", "b", "c", "d"}));
  EXPECT_EQ(months.at(ym("2016-07")), (std::vector<std::string>{"c"}));
  EXPECT_TRUE(idx.active("c", ym("2016-06")));
  EXPECT_FALSE(idx.active("a", ym("2016-06")));
}

TEST(Maj, CustomOffsetAndDuplicates) {
  auto idx = build_maj({ad("a", std::nullopt, ym("2020-01"))}, {}, 0);
  EXPECT_EQ(idx.find("a")->span(), 1);
  EXPECT_THROW(build_maj({ad("a", std::nullopt, ym("2020-01")), ad("a", std::nullopt, ym("2020-02"))}), InputError);
  EXPECT_THROW(build_maj({}, {}, -1), ArgumentError);
}

TEST(Maj, AgreesWithMonthListOracle) {
  std::mt19937_64 rng(8);
  std::vector<JobAdRecord> ads;
  for (int i = 0; i < 2000; ++i) {
    auto compiled = ym("2015-01").plus(static_cast<int>(rng() % 40));
    std::optional<YearMonth> acq;
    if (rng() % 10) acq = compiled.minus(static_cast<int>(rng() % 6));
    ads.push_back(ad("ad" + std::to_string(i), acq, compiled));
  }
  const auto anomalous = default_anomalous_months();
  auto idx = build_maj(ads);
  std::map<YearMonth, std::size_t> want;
  std::size_t total_span = 0;
  for (auto& a : ads) {
    auto months = oracle::active_months(a, anomalous, 2);
    for (auto& m : months) ++want[m];
    total_span += months.size();
    EXPECT_EQ(static_cast<std::size_t>(idx.find(a.id)->span()), months.size());
  }
  std::size_t total_active = 0;
  for (auto& [m, ids] : idx.by_month()) {
    EXPECT_EQ(ids.size(), want[m]) << m.str();
    total_active += ids.size();
  }
  EXPECT_EQ(total_active, total_span);
}

TEST(Percentiles, NearestRank) {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  EXPECT_EQ(percentiles(v, {0, 50, 90, 100}), (std::vector<double>{1, 50, 90, 100}));
  EXPECT_EQ(percentiles({3, 1, 2}, {50}), (std::vector<double>{2}));
  EXPECT_THROW(percentiles({}, {50}), ArgumentError);
  EXPECT_THROW(percentiles({1}, {101}), ArgumentError);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> xs(1 + rng() % 50);
    for (auto& x : xs) x = static_cast<double>(rng() % 1000);
    for (double p : {0.0, 10.0, 25.0, 33.3, 50.0, 75.0, 90.0, 100.0})
      EXPECT_EQ(percentiles(xs, {p})[0], oracle::nearest_rank(xs, p));
  }
}

TEST(Keys, Prefixes) {
  EXPECT_EQ(soc_prefix("13-2011.00", 2), "13");
  EXPECT_EQ(soc_prefix("13-2011", 4), "13-20");
  EXPECT_EQ(soc_prefix("13-2011.01", 6), "13-2011");
  EXPECT_EQ(soc_prefix("", 2), "NA");
  EXPECT_EQ(naics_prefix("722511", 2), "72");
  EXPECT_EQ(naics_prefix("72", 4), "NA");
  EXPECT_EQ(parse_group_spec("month, soc2"), (std::vector<GroupDim>{GroupDim::month, GroupDim::soc2}));
  EXPECT_THROW(parse_group_spec("month,planet"), ArgumentError);
}

TEST(TopK, FirefighterCounts) {
  const std::vector<std::size_t> counts = {15611, 8226, 6619, 4017, 2441, 2164, 2118, 1961,
                                           1867,  1529, 1473, 1460, 1305, 995,  905};
  auto idx = build_maj({ad("ff", ym("2020-01"), ym("2020-01"))});
  std::map<std::string, AdKeys> keys = {{"ff", {"33-2011.00", std::nullopt, std::nullopt}}};
  Aggregator agg({GroupDim::soc6}, idx, keys);
  // Add in reverse so order cannot come from insertion.
  for (std::size_t i = counts.size(); i-- > 0;)
    for (std::size_t n = 0; n < counts[i]; ++n) agg.add(cat("ff", "task", "33-2011.00-T" + std::string(i < 9 ? "0" : "") + std::to_string(i + 1)));
  for (std::size_t n = 0; n < 900; ++n) agg.add(cat("ff", "task", "other"));
  auto top = top_k(agg.finish(), 15);
  ASSERT_EQ(top.size(), 15u);
  for (std::size_t i = 0; i < 15; ++i) {
    EXPECT_EQ(top[i].count, counts[i]);
    EXPECT_EQ(top[i].key, (std::vector<std::string>{"33-2011"}));
  }
  EXPECT_EQ(top[0].code, "33-2011.00-T01");
}

TEST(TopK, TiesByCodeAndKValidation) {
  auto idx = build_maj({ad("a", ym("2020-01"), ym("2020-01"))});
  std::map<std::string, AdKeys> keys;
  auto rows = aggregate({cat("a", "f", "z"), cat("a", "f", "b"), cat("a", "f", "m")}, idx, keys, {GroupDim::month});
  auto top = top_k(rows, 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].code, "b");
  EXPECT_EQ(top[1].code, "m");
  EXPECT_THROW(top_k(rows, 0), ArgumentError);
}

TEST(Aggregate, CountsAgreeWithTwoLoopOracle) {
  std::mt19937_64 rng(13);
  std::vector<JobAdRecord> ads;
  std::map<std::string, AdKeys> keys;
  const std::string states[] = {"CA", "NY", "TX"};
  for (int i = 0; i < 300; ++i) {
    auto compiled = ym("2019-01").plus(static_cast<int>(rng() % 12));
    ads.push_back(ad("ad" + std::to_string(i), compiled.minus(static_cast<int>(rng() % 4)), compiled));
    AdKeys k;
    if (rng() % 5) k.state = states[rng() % 3];
    keys[ads.back().id] = k;
  }
  std::vector<Feature> feats;
  for (int i = 0; i < 3000; ++i) feats.push_back(cat("ad" + std::to_string(rng() % 300), "skill", "S" + std::to_string(rng() % 7)));
  auto idx = build_maj(ads);
  auto rows = aggregate(feats, idx, keys, {GroupDim::month, GroupDim::state});

  // Loop over every month and every feature.
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> want;
  for (auto& [m, ids] : idx.by_month())
    for (auto& f : feats)
      if (idx.active(f.ad_id, m)) {
        auto& k = keys.at(f.ad_id);
        ++want[{m.str(), k.state.value_or("NA"), f.code}];
      }
  std::size_t seen = 0;
  for (auto& r : rows) {
    if (r.family == "active_ads") continue;
    ++seen;
    EXPECT_EQ(r.count, (want[{r.key[0], r.key[1], r.code}]));
  }
  EXPECT_EQ(seen, want.size());
}

TEST(Aggregate, MergeOfSplitsEqualsWhole) {
  auto idx = build_maj({ad("a", ym("2020-01"), ym("2020-03")), ad("b", std::nullopt, ym("2020-02"))});
  std::map<std::string, AdKeys> keys;
  std::vector<Feature> f = {cat("a", "x", "1"), cat("b", "x", "2"), {"a", "wage", "", 40000, false},
                            {"b", "wage", "", 60000, false}, {"b", "wage", "", 1, true}, cat("ghost", "x", "1")};
  Aggregator whole({GroupDim::month}, idx, keys);
  whole.add(f);
  Aggregator p1({GroupDim::month}, idx, keys), p2({GroupDim::month}, idx, keys);
  p1.add(std::vector<Feature>(f.begin(), f.begin() + 3));
  p2.add(std::vector<Feature>(f.begin() + 3, f.end()));
  p2.merge(p1);
  auto a = whole.finish(), b = p2.finish();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].key, b[i].key);
    EXPECT_EQ(a[i].code, b[i].code);
    EXPECT_EQ(a[i].count, b[i].count);
    EXPECT_EQ(a[i].mean, b[i].mean);
    EXPECT_EQ(a[i].pct, b[i].pct);
  }
  EXPECT_EQ(whole.unknown_ad_features(), 1u);
  EXPECT_EQ(whole.excluded_outliers(), 1u);
  EXPECT_THROW(p1.merge(Aggregator({GroupDim::state}, idx, keys)), ArgumentError);
}

TEST(Aggregate, SharesAndNumericRows) {
  auto idx = build_maj({ad("a", ym("2020-01"), ym("2020-01")), ad("b", ym("2020-01"), ym("2020-01"))});
  std::map<std::string, AdKeys> keys;
  auto rows = aggregate({cat("a", "x", "1"), cat("b", "x", "1"), cat("b", "x", "2"), {"a", "wage", "", 30000, false},
                         {"b", "wage", "", 50000, false}},
                        idx, keys, {GroupDim::month});
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].family, "active_ads");
  EXPECT_EQ(rows[0].count, 2u);
  EXPECT_EQ(rows[1].family, "wage");
  EXPECT_DOUBLE_EQ(*rows[1].mean, 40000);
  EXPECT_EQ(rows[2].code, "1");
  EXPECT_DOUBLE_EQ(*rows[2].share, 2.0 / 3);
  EXPECT_DOUBLE_EQ(*rows[2].ad_share, 1.0);
}
