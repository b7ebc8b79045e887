#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace jobtext;

namespace {

const std::string kData = JOBTEXT_DATA_DIR;

EstablishmentRecord rec(std::string id, std::string name, std::string zip, std::string state, std::string naics = "722511") {
  return {std::move(id), std::move(name), "", std::move(zip), std::move(state), std::move(naics), std::nullopt};
}

const std::string kTwenty = "abcdefghijklmnopqrst";

std::string with_edits(std::size_t n) {
  auto s = kTwenty;
  for (std::size_t i = 0; i < n; ++i) s[s.size() - 1 - i] = 'z';
  return s;
}

}  // namespace

TEST(Standardize, WorkedExamples) {
  EXPECT_EQ(standardize("Wal-Mart Stores, Incorporated"), "wal mart stores inc");
  EXPECT_EQ(standardize("Seven-Eleven"), "7 11");
  EXPECT_EQ(standardize("7-11 Inc."), "7 11 inc");
  EXPECT_EQ(standardize("McDonald's Corporation"), "mcdonalds corp");
  EXPECT_EQ(standardize("Acme L.L.C."), "acme llc");
  EXPECT_EQ(standardize(""), "");
}

TEST(Standardize, Idempotent) {
  for (const char* s : {"Wal-Mart Stores, Incorporated", "Seven-Eleven", "Desert Inn LLC", "Ben & Jerry's Company"})
    EXPECT_EQ(standardize(standardize(s)), standardize(s)) << s;
}

TEST(Levenshtein, KnownDistances) {
  EXPECT_EQ(lev_distance("kitten", "sitting"), 3u);
  EXPECT_NEAR(lev_ratio("kitten", "sitting"), 1 - 3.0 / 7, 1e-12);
  EXPECT_EQ(lev_distance("", "abc"), 3u);
  EXPECT_DOUBLE_EQ(lev_ratio("", ""), 1.0);
  // code points, not bytes
  EXPECT_EQ(lev_distance("caf\xC3\xA9", "cafe"), 1u);
}

TEST(Levenshtein, AgreesWithFullTableOracle) {
  std::mt19937_64 rng(4);
  const std::string alphabet[] = {"a", "b", "c", " ", "\xC3\xA9", "\xE2\x82\xAC"};
  auto word = [&] {
    std::string s;
    for (std::size_t i = 0, n = rng() % 12; i < n; ++i) s += alphabet[rng() % 6];
    return s;
  };
  for (int i = 0; i < 500; ++i) {
    auto a = word(), b = word();
    EXPECT_EQ(lev_distance(a, b), oracle::levenshtein(oracle::decode(a), oracle::decode(b)));
    EXPECT_NEAR(lev_ratio(a, b), oracle::lev_ratio(a, b), 1e-12);
  }
}

TEST(Cascade, ZipTierWinsFirst) {
  EstablishmentIndex idx({rec("E1", kTwenty, "11111", "CA"), rec("E2", kTwenty, "22222", "CA")});
  auto r = cascade_match(kTwenty, "22222", "CA", idx);
  EXPECT_EQ(r.tier, FirmTier::zip);
  EXPECT_EQ(r.est_id, "E2");
  EXPECT_DOUBLE_EQ(r.score, 1.0);
}

TEST(Cascade, StateTierAtPointEightFive) {
  EstablishmentIndex idx({rec("E1", "unrelated name", "11111", "CA"), rec("E2", with_edits(3), "33333", "CA", "445110")});
  auto r = cascade_match(kTwenty, "11111", "CA", idx, 0.8);
  EXPECT_EQ(r.tier, FirmTier::state);
  EXPECT_EQ(r.est_id, "E2");
  EXPECT_EQ(r.naics, "445110");
  EXPECT_NEAR(r.score, 0.85, 1e-12);
  ASSERT_TRUE(r.zip_best);
  EXPECT_LT(r.zip_best->score, 0.8);
}

TEST(Cascade, BelowThresholdEverywhereIsNone) {
  EstablishmentIndex idx({rec("E1", with_edits(5), "11111", "CA")});
  auto r = cascade_match(kTwenty, "11111", "CA", idx, 0.8);
  EXPECT_EQ(r.tier, FirmTier::none);
  EXPECT_FALSE(r.est_id);
  EXPECT_FALSE(r.naics);
  EXPECT_NEAR(r.score, 0.75, 1e-12);
}

TEST(Cascade, NationalTierNeedsSameInitial) {
  EstablishmentIndex idx({rec("E1", kTwenty, "99999", "NY"), rec("E2", "b" + kTwenty.substr(1), "99999", "NY")});
  auto r = cascade_match(kTwenty, "11111", "CA", idx);
  EXPECT_EQ(r.tier, FirmTier::national);
  EXPECT_EQ(r.est_id, "E1");
  EstablishmentIndex other({rec("E2", "b" + kTwenty.substr(1), "99999", "NY")});
  EXPECT_EQ(cascade_match(kTwenty, "11111", "CA", other).tier, FirmTier::none);
}

TEST(Cascade, TiesGoToSmallerEstId) {
  EstablishmentIndex idx({rec("E9", kTwenty, "11111", "CA"), rec("E3", kTwenty, "11111", "CA")});
  EXPECT_EQ(cascade_match(kTwenty, "11111", "CA", idx).est_id, "E3");
}

TEST(Cascade, EmptyNameOrIndex) {
  EstablishmentIndex idx({rec("E1", kTwenty, "11111", "CA")});
  EXPECT_EQ(cascade_match("", "11111", "CA", idx).tier, FirmTier::none);
  EXPECT_EQ(cascade_match(kTwenty, "11111", "CA", EstablishmentIndex()).tier, FirmTier::none);
  EXPECT_THROW(cascade_match(kTwenty, "", "", idx, 0.0), ArgumentError);
}

TEST(Establishments, ValidationAndFixture) {
  EXPECT_THROW(EstablishmentIndex({rec("E1", "a", "", "", "7")}), InputError);
  EXPECT_THROW(EstablishmentIndex({rec("E1", "a", "", ""), rec("E1", "b", "", "")}), InputError);
  auto idx = EstablishmentIndex::load(kData + "/firms/establishments.csv");
  EXPECT_EQ(idx.size(), 20u);
  EXPECT_EQ(idx.records().front().est_id, "E0001");
}

TEST(MatchFirm, MetadataBeatsExternalSpan) {
  EstablishmentIndex idx({rec("E1", "Desert Inn LLC", "89101", "NV"), rec("E2", "Other Place", "89101", "NV")});
  JobAdRecord ad;
  ad.id = "x";
  ad.zip = "89101";
  ad.firm_name_meta = "Desert Inn, L.L.C.";
  auto r = match_firm(ad, {{"x", "Other Place"}}, idx);
  EXPECT_EQ(r.source, "metadata");
  EXPECT_EQ(r.est_id, "E1");
  ad.firm_name_meta.reset();
  r = match_firm(ad, {{"x", "Other Place"}}, idx);
  EXPECT_EQ(r.source, "external");
  EXPECT_EQ(r.est_id, "E2");
  r = match_firm(ad, {}, idx);
  EXPECT_EQ(r.source, "");
  EXPECT_EQ(r.tier, FirmTier::none);
}
