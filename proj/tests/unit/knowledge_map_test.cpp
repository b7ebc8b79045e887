#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"

using namespace jobtext;

namespace {

const std::string kData = JOBTEXT_DATA_DIR;

AssociationRule negation(std::string id, std::string trigger, std::vector<std::string> terms, std::size_t window) {
  AssociationRule r;
  r.rule_id = std::move(id);
  r.kind = RuleKind::negation;
  r.trigger_uci = std::move(trigger);
  r.guard_terms = std::move(terms);
  r.window = window;
  return r;
}

}  // namespace

TEST(Tokenize, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(token_strings("Seven-Eleven, 7-11 Inc."), (std::vector<std::string>{"seven", "eleven", "7", "11", "inc"}));
  EXPECT_TRUE(token_strings("  --  ").empty());
}

TEST(Matcher, NoEntriesNoHits) {
  auto m = Matcher::compile({});
  EXPECT_TRUE(m.scan("anything at all").empty());
}

TEST(Matcher, EmptyTextNoHits) {
  auto m = Matcher::compile({{{"union"}, "U", ""}});
  EXPECT_TRUE(m.scan("").empty());
}

TEST(Matcher, MultiWordExactMatch) {
  auto m = Matcher::compile({{{"Microsoft Office"}, "X", "office suite"}});
  auto hits = m.scan("experience with Microsoft Office required", "ad-1");
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].uci, "X");
  EXPECT_EQ(hits[0].ad_id, "ad-1");
  EXPECT_EQ(hits[0].start_token, 2u);
  EXPECT_EQ(hits[0].end_token, 4u);
}

TEST(Matcher, LongestMatchShadowsContainedForm) {
  auto m = Matcher::compile({{{"office"}, "O", ""}, {{"microsoft office"}, "MO", ""}});
  auto hits = m.scan("microsoft office and office");
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].uci, "MO");
  EXPECT_EQ(hits[1].uci, "O");
  EXPECT_EQ(hits[1].start_token, 3u);
}

TEST(Matcher, DuplicateSurfaceFormsBothEmitted) {
  auto m = Matcher::compile({{{"python"}, "A", ""}, {{"Python"}, "B", ""}});
  auto hits = m.scan("python");
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].uci, "A");
  EXPECT_EQ(hits[1].uci, "B");
}

TEST(Matcher, TokenBoundariesOnly) {
  auto m = Matcher::compile({{{"union"}, "U", ""}});
  EXPECT_TRUE(m.scan("reunion unions").empty());
}

TEST(Matcher, CreditUnionNegation) {
  auto m = Matcher::compile({{{"union"}, "LABOR_UNION", ""}}, {negation("r1", "LABOR_UNION", {"credit"}, 2)});
  EXPECT_TRUE(m.scan("join our credit union team").empty());
  EXPECT_EQ(m.scan("join our union team").size(), 1u);
  // guard farther away than the window
  EXPECT_EQ(m.scan("credit is given to the union").size(), 1u);
}

TEST(Matcher, CoOccurRequiresGuardUci) {
  AssociationRule r;
  r.rule_id = "c1";
  r.kind = RuleKind::co_occur;
  r.trigger_uci = "APP";
  r.guard_uci = "UNION";
  r.window = 3;
  auto m = Matcher::compile({{{"apprenticeship"}, "APP", ""}, {{"union"}, "UNION", ""}}, {r});
  auto with = m.scan("union apprenticeship program");
  ASSERT_EQ(with.size(), 2u);
  auto without = m.scan("apprenticeship program available");
  EXPECT_TRUE(without.empty());
}

TEST(Matcher, NegationRunsBeforeCoOccur) {
  // The guard uci of the co-occur rule is itself negated, so the trigger loses its support.
  AssociationRule co;
  co.rule_id = "c";
  co.kind = RuleKind::co_occur;
  co.trigger_uci = "APP";
  co.guard_uci = "UNION";
  co.window = 4;
  auto m = Matcher::compile({{{"apprenticeship"}, "APP", ""}, {{"union"}, "UNION", ""}},
                            {negation("n", "UNION", {"credit"}, 1), co});
  EXPECT_TRUE(m.scan("credit union apprenticeship").empty());
}

TEST(Matcher, CompileErrors) {
  EXPECT_THROW(Matcher::compile({{{"--"}, "X", ""}}), ArgumentError);
  EXPECT_THROW(Matcher::compile({}, {negation("r", "X", {"a"}, 1), negation("r", "Y", {"b"}, 1)}), ArgumentError);
  EXPECT_THROW(Matcher::compile({}, {negation("r", "X", {"a"}, 0)}), ArgumentError);
}

TEST(Matcher, AgreesWithNaiveOracle) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f", "credit", "union"};
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<MapEntry> entries;
    const auto n_entries = 1 + pick(20);
    for (std::size_t e = 0; e < n_entries; ++e) {
      MapEntry me;
      me.uci = "U" + std::to_string(pick(6));
      for (std::size_t f = 0, nf = 1 + pick(2); f < nf; ++f) {
        std::string form;
        for (std::size_t t = 0, len = 1 + pick(3); t < len; ++t) form += (t ? " " : "") + vocab[pick(vocab.size())];
        me.surface_forms.push_back(form);
      }
      entries.push_back(me);
    }
    std::vector<AssociationRule> rules;
    if (trial % 2) rules.push_back(negation("n", "U" + std::to_string(pick(6)), {vocab[pick(vocab.size())]}, 1 + pick(3)));
    if (trial % 3 == 0) {
      AssociationRule co;
      co.rule_id = "c";
      co.kind = RuleKind::co_occur;
      co.trigger_uci = "U" + std::to_string(pick(6));
      co.guard_uci = "U" + std::to_string(pick(6));
      co.window = 1 + pick(4);
      rules.push_back(co);
    }
    std::vector<std::string> toks;
    for (std::size_t i = 0, n = pick(120); i < n; ++i) toks.push_back(vocab[pick(vocab.size())]);
    auto m = Matcher::compile(entries, rules);
    EXPECT_EQ(m.scan_tokens(toks), oracle::scan(entries, rules, toks)) << "trial " << trial;
  }
}

TEST(Matcher, SeamProperty) {
  auto m = Matcher::compile({{{"data analysis"}, "DA", ""}, {{"sql"}, "SQL", ""}});
  const std::string a = "sql and data analysis";
  auto ha = m.scan(a);
  auto hab = m.scan(a + " then reporting with sql");
  std::vector<DictionaryHit> inside;
  for (auto& h : hab)
    if (h.end_token <= token_strings(a).size()) inside.push_back(h);
  EXPECT_EQ(inside, ha);
}

TEST(Dictionary, EmptyCsvWithHeader) {
  auto d = load_dictionary_table(csv::Table::parse_text("term,label\n"), DictionarySchema::benefits);
  EXPECT_TRUE(d.entries.empty());
}

TEST(Dictionary, MissingColumnNamesIt) {
  try {
    load_dictionary_table(csv::Table::parse_text("word,label\nx,y\n"), DictionarySchema::benefits);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("term"), std::string::npos);
  }
}

TEST(Dictionary, BlankRowsSkippedWithReport) {
  auto d = load_dictionary_table(csv::Table::parse_text("term,label\n,Dental\ndental,Dental\n"), DictionarySchema::benefits);
  EXPECT_EQ(d.entries.size(), 1u);
  ASSERT_EQ(d.skipped.size(), 1u);
  EXPECT_EQ(d.skipped[0].line, 2u);
}

TEST(Dictionary, SampleBenefitsLabelsMatchFile) {
  auto d = load_dictionary(kData + "/dictionaries/benefits.csv", DictionarySchema::benefits);
  auto t = csv::Table::load(kData + "/dictionaries/benefits.csv");
  ASSERT_EQ(d.entries.size(), t.rows().size());
  for (std::size_t i = 0; i < d.entries.size(); ++i) {
    EXPECT_EQ(d.entries[i].label, csv::Table::cell(t.rows()[i], 1));
    EXPECT_EQ(d.entries[i].surface_forms[0], csv::Table::cell(t.rows()[i], 0));
  }
}

TEST(Dictionary, RiasecCodesAreCanonical) {
  auto d = load_dictionary(kData + "/dictionaries/riasec.csv", DictionarySchema::riasec);
  ASSERT_FALSE(d.entries.empty());
  const std::set<std::string> allowed = {"R", "I", "A", "S", "E", "C"};
  for (auto& e : d.entries) EXPECT_TRUE(allowed.count(e.uci)) << e.uci;
}

TEST(Dictionary, ToolsTechCollapsesRepeatsAndExclusionsApply) {
  auto d = load_dictionary(kData + "/dictionaries/tools_tech.csv", DictionarySchema::tools_tech);
  std::size_t python = 0;
  for (auto& e : d.entries) python += e.surface_forms[0] == "Python";
  EXPECT_EQ(python, 1u);
  auto removed = apply_exclusions(d.entries, read_term_list(kData + "/dictionaries/tools_tech_exclusions.txt"));
  EXPECT_EQ(removed, 1u);
  for (auto& e : d.entries) EXPECT_NE(to_lower(e.surface_forms[0]), "word");
}

TEST(Dictionary, LaborUnionFixtureWithRules) {
  auto d = load_dictionary(kData + "/dictionaries/labor_union.csv", DictionarySchema::generic);
  auto m = Matcher::compile(d.entries, load_rules(kData + "/dictionaries/labor_union_rules.csv"));
  EXPECT_TRUE(m.scan("Join our credit union team.").empty());
  auto hits = m.scan("Union apprenticeship training program available.");
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[1].uci, "APPRENTICESHIP");
}

TEST(Dictionary, UnknownSchema) { EXPECT_THROW(parse_schema("nope"), ArgumentError); }
