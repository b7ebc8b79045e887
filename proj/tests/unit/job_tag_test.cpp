#include <gtest/gtest.h>

#include "jobtext/jobtext.hpp"

using namespace jobtext;

namespace {

const std::string kData = JOBTEXT_DATA_DIR;

JobAdRecord ad(std::string id, std::string body) {
  JobAdRecord a;
  a.id = std::move(id);
  a.body = std::move(body);
  return a;
}

}  // namespace

TEST(TagWindows, RadiusAndEdges) {
  TagClass cls("union", {"union"}, {}, {}, 2);
  auto w = extract_windows("one two three four five union seven eight nine ten", cls);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].keyword_start, 5u);
  EXPECT_EQ(w[0].window_start, 3u);
  EXPECT_EQ(w[0].window_end, 8u);
  EXPECT_EQ(w[0].text(), "four five union seven eight");
  auto edge = extract_windows("union two three", cls);
  ASSERT_EQ(edge.size(), 1u);
  EXPECT_EQ(edge[0].text(), "union two three");
  EXPECT_TRUE(extract_windows("", cls).empty());
}

TEST(TagWindows, OneWindowPerOccurrence) {
  TagClass cls("union", {"union", "unions"}, {}, {}, 1);
  EXPECT_EQ(extract_windows("union and unions and union", cls).size(), 3u);
}

TEST(TagClassify, NegativeBeforePositive) {
  auto cls = TagClass::load(kData + "/tags/union");
  auto neg = extract_windows("Join our federal credit union and become a member.", cls);
  ASSERT_EQ(neg.size(), 1u);
  auto d = classify_window(neg[0], cls);
  EXPECT_EQ(d.decision, TagDecision::negative);
  EXPECT_EQ(d.rule, "negative:credit");
  auto pos = extract_windows("Wages set by union collective bargaining agreement.", cls);
  ASSERT_EQ(pos.size(), 1u);
  EXPECT_EQ(classify_window(pos[0], cls).decision, TagDecision::positive);
}

TEST(TagClassify, NoRulesMeansNegative) {
  TagClass cls("bare", {"union"}, {}, {});
  auto w = extract_windows("union labor wages", cls);
  ASSERT_EQ(w.size(), 1u);
  auto d = classify_window(w[0], cls);
  EXPECT_EQ(d.decision, TagDecision::negative);
  EXPECT_EQ(d.rule, "default");
}

TEST(TagAd, AnyPositiveWindowMakesTheAdPositive) {
  auto cls = TagClass::load(kData + "/tags/union");
  auto t = tag_ad(ad("a", "Bank at our credit union. Separately, this full time warehouse role is a union position with membership dues."), {cls});
  ASSERT_EQ(t.windows.size(), 2u);
  EXPECT_TRUE(t.positive.at("union"));
  auto n = tag_ad(ad("b", "Bank at our credit union."), {cls});
  EXPECT_FALSE(n.positive.at("union"));
  auto none = tag_ad(ad("c", "No keywords at all."), {cls});
  EXPECT_TRUE(none.windows.empty());
  EXPECT_FALSE(none.positive.at("union"));
}

TEST(TagAd, SpanishPreferredIsNegativeRequiredIsPositive) {
  auto cls = TagClass::load(kData + "/tags/spanish_language");
  EXPECT_FALSE(tag_ad(ad("a", "Spanish a plus."), {cls}).positive.at("spanish_language"));
  EXPECT_TRUE(tag_ad(ad("b", "Fluent Spanish required."), {cls}).positive.at("spanish_language"));
}

TEST(TagClass, Validation) {
  EXPECT_THROW(TagClass("x", {}, {}, {}), InputError);
  EXPECT_THROW(TagClass("x", {"a"}, {}, {}, 0), ArgumentError);
  EXPECT_THROW(TagClass::load(kData + "/tags/does_not_exist"), InputError);
}
