#include <gtest/gtest.h>

#include <cctype>
#include <string>

#include "jobtext/corpus.hpp"
#include "jobtext/month.hpp"

using namespace jobtext;

namespace {

const std::string kData = JOBTEXT_DATA_DIR;

std::string jsonl_row(const std::string& acquired, const std::string& compiled) {
  return R"({"id":"a1","title":"Cook","body":"Cook food.","date_acquired":")" + acquired +
         R"(","date_compiled":")" + compiled + R"("})";
}

}  // namespace

TEST(YearMonth, ParseAndArithmetic) {
  auto m = YearMonth::parse("2015-01");
  ASSERT_TRUE(m);
  EXPECT_EQ(m->year(), 2015);
  EXPECT_EQ(m->month(), 1);
  EXPECT_EQ(m->minus(2).str(), "2014-11");
  EXPECT_EQ(m->plus(12).str(), "2016-01");
  EXPECT_EQ(YearMonth::span(*YearMonth::parse("2024-01"), *YearMonth::parse("2024-03")), 3);
  EXPECT_FALSE(YearMonth::parse("2015-13"));
  EXPECT_FALSE(YearMonth::parse("2015-1"));
  EXPECT_FALSE(YearMonth::parse("15-01"));
}

TEST(Ingest, EmptyStreamGivesNoRecords) {
  auto r = ingest_text("", CorpusFormat::jsonl);
  EXPECT_TRUE(r.records.empty());
  EXPECT_TRUE(r.rejected.empty());
}

TEST(Ingest, AcquiredAfterCompiledIsRejected) {
  auto r = ingest_text(jsonl_row("2024-03", "2024-01"), CorpusFormat::jsonl);
  EXPECT_TRUE(r.records.empty());
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].line, 1u);
  EXPECT_NE(r.rejected[0].reason.find("after"), std::string::npos);
}

TEST(Ingest, StrictModeThrowsOnBadRow) {
  IngestOptions opts;
  opts.strict = true;
  EXPECT_THROW(ingest_text(jsonl_row("2024-03", "2024-01"), CorpusFormat::jsonl, opts), InputError);
}

TEST(Ingest, BadRowsDoNotStopGoodOnes) {
  std::string text = jsonl_row("2024-01", "2024-02") + "\nnot json\n" + R"({"id":"b","title":"x"})" + "\n";
  auto r = ingest_text(text, CorpusFormat::jsonl);
  EXPECT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.rejected.size(), 2u);
}

TEST(Ingest, ThreeRowCsvFixtureRoundTrips) {
  auto r = ingest_file(kData + "/corpus_small.csv");
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_TRUE(r.rejected.empty());
  const auto& a = r.records[0];
  EXPECT_EQ(a.id, "csv-1");
  EXPECT_EQ(a.title, "Barista");
  EXPECT_EQ(a.body, "Make espresso drinks, serve customers. $13 per hour.");
  EXPECT_EQ(a.date_acquired->str(), "2019-01");
  EXPECT_EQ(a.date_compiled.str(), "2019-02");
  EXPECT_EQ(*a.state, "WA");
  EXPECT_EQ(*a.zip, "98101");
  EXPECT_FALSE(a.firm_name_meta);
  const auto& b = r.records[1];
  EXPECT_FALSE(b.date_acquired);
  EXPECT_EQ(*b.firm_name_meta, "Desert Inn LLC");
  EXPECT_DOUBLE_EQ(*b.wage_min_meta, 38000);
  EXPECT_DOUBLE_EQ(*b.wage_max_meta, 42000);
  const auto& c = r.records[2];
  EXPECT_EQ(c.body, "Mow lawns and maintain \"green\" spaces.");
  EXPECT_EQ(*c.state, "OR");
}

TEST(Ingest, SampleCorpusLoadsCleanly) {
  auto r = ingest_file(kData + "/corpus.jsonl");
  EXPECT_EQ(r.records.size(), 30u);
  EXPECT_TRUE(r.rejected.empty());
}

TEST(Ingest, EmitRoundTrip) {
  auto r = ingest_file(kData + "/corpus.jsonl");
  auto again = ingest_text(emit_jsonl(r.records), CorpusFormat::jsonl);
  ASSERT_EQ(again.records.size(), r.records.size());
  EXPECT_EQ(emit_jsonl(again.records), emit_jsonl(r.records));
}

TEST(Segment, EmptyBody) { EXPECT_TRUE(segment("").empty()); }

TEST(Segment, TwoSentencesWithSpans) {
  const std::string body = "Cook food. Clean grill.";
  auto s = segment(body, "ad");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].text, "Cook food.");
  EXPECT_EQ(s[1].text, "Clean grill.");
  for (auto& x : s) EXPECT_EQ(body.substr(x.begin, x.end - x.begin), x.text);
  EXPECT_EQ(s[1].index, 1u);
  EXPECT_EQ(s[1].ad_id, "ad");
}

TEST(Segment, Bullets) {
  auto s = segment("\xE2\x80\xA2 greet guests\n\xE2\x80\xA2 run register");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].text, "greet guests");
  EXPECT_EQ(s[1].text, "run register");
}

TEST(Segment, DecimalsAndMoneyStayInsideASentence) {
  auto s = segment("Pay is $18.50 - $24.00 per hour. Apply now.");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].text, "Pay is $18.50 - $24.00 per hour.");
}

TEST(Readability, HandComputedSentence) {
  // 3 words, 1 sentence, 3 syllables: 206.835 - 1.015*3 - 84.6*1
  EXPECT_NEAR(flesch_reading_ease("The cat sat."), 119.19, 0.01);
}

TEST(Readability, EmptyTextIsAnError) { EXPECT_THROW(flesch_reading_ease(""), ArgumentError); }

namespace {

// Independent syllable heuristic: vowel groups, silent final e, minimum one.
int oracle_syllables(std::string w) {
  for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  auto vowel = [](char c) { return std::string("aeiouy").find(c) != std::string::npos; };
  int n = 0;
  bool prev = false;
  for (char c : w) {
    bool v = vowel(c);
    if (v && !prev) ++n;
    prev = v;
  }
  if (w.size() > 2 && w.back() == 'e' && !vowel(w[w.size() - 2]) && !(w[w.size() - 2] == 'l')) --n;
  return std::max(n, 1);
}

}  // namespace

TEST(Readability, FixtureParagraphAgreesWithOracle) {
  const std::string text =
      "Participate in firefighting efforts. Drive and operate fire fighting vehicles and equipment. "
      "Conduct wildland firefighting training. Candidates must pass a background check and drug screen.";
  int words = 0, syll = 0, sentences = 4;
  std::string cur;
  for (char c : text + " ") {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cur += c;
    } else if (!cur.empty()) {
      ++words;
      syll += oracle_syllables(cur);
      cur.clear();
    }
  }
  const double expected = 206.835 - 1.015 * words / sentences - 84.6 * static_cast<double>(syll) / words;
  EXPECT_NEAR(flesch_reading_ease(text), expected, 2.0);
}
