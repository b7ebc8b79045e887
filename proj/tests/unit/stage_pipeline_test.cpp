#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

using namespace jobtext;

namespace {

const std::string kData = JOBTEXT_DATA_DIR;

Sentence sentence(std::string ad, std::size_t idx, std::string text) {
  Sentence s;
  s.ad_id = std::move(ad);
  s.index = idx;
  s.text = std::move(text);
  return s;
}

// Unit vector at angle whose cosine with (1, 0) is c.
std::vector<float> at_cosine(double c) { return {static_cast<float>(c), static_cast<float>(std::sqrt(1 - c * c))}; }

}  // namespace

TEST(Stage1, ShippedSkillCuesAcceptAbilitySentence) {
  auto f = CuePhraseFilter::load("skill", kData + "/skill_cues.txt");
  EXPECT_TRUE(f.is_candidate(sentence("a", 0, "Ability to operate forklifts.")));
  EXPECT_FALSE(f.is_candidate(sentence("a", 1, "We are located downtown.")));
}

TEST(Stage1, FilterFailureBecomesDiagnostic) {
  ExternalLabelFilter f;
  f.set("a", 0, true);
  auto r = run_stage1(f, {sentence("a", 0, "x"), sentence("a", 1, "y")});
  EXPECT_EQ(r.candidates.size(), 1u);
  EXPECT_EQ(r.rejected.size(), 1u);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].sentence_index, 1u);
}

TEST(Stage1, ExternalLabelsParse) {
  auto f = ExternalLabelFilter::parse(R"({"ad_id":"a","sentence_idx":0,"candidate":false})" "\n");
  EXPECT_FALSE(f.is_candidate(sentence("a", 0, "x")));
  EXPECT_THROW(ExternalLabelFilter::parse("{bad"), InputError);
}

TEST(Stage2, ScoreBelowThresholdIsNotRetained) {
  LabelIndex labels(EmbeddingMatrix::from_rows({"m"}, std::vector<std::vector<float>>{{1, 0}}, 2), {{"L", {"m"}}});
  auto svecs = EmbeddingMatrix::from_rows({"a#0", "a#1"}, std::vector<std::vector<float>>{at_cosine(0.85), at_cosine(0.88)}, 2);
  PipelineConfig cfg;
  cfg.threshold = default_threshold(PipelineTask::skill);
  auto r = run_stage2({sentence("a", 0, "x"), sentence("a", 1, "y")}, cfg, labels, svecs);
  ASSERT_EQ(r.results.size(), 2u);
  EXPECT_NEAR(r.results[0].score, 0.85, 1e-6);
  EXPECT_FALSE(r.results[0].retained);
  EXPECT_TRUE(r.results[1].retained);
}

TEST(Stage2, MissingVectorIsDiagnosed) {
  LabelIndex labels(EmbeddingMatrix::from_rows({"m"}, std::vector<std::vector<float>>{{1, 0}}, 2), {{"L", {"m"}}});
  auto r = run_stage2({sentence("a", 3, "x")}, PipelineConfig{}, labels, EmbeddingMatrix(2));
  EXPECT_TRUE(r.results.empty());
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_NE(r.diagnostics[0].message.find("a#3"), std::string::npos);
}

TEST(Stage2, TenByThreeAgreesWithOracle) {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> g;
  auto rand_rows = [&](std::size_t n) {
    std::vector<std::vector<float>> rows(n, std::vector<float>(4));
    for (auto& r : rows)
      for (auto& x : r) x = g(rng);
    return rows;
  };
  std::vector<std::string> member_ids = {"m0", "m1", "m2", "m3", "m4", "m5"};
  auto members = EmbeddingMatrix::from_rows(member_ids, rand_rows(6), 4);
  std::vector<LabeledSet> sets = {{"C", {"m4", "m5"}}, {"A", {"m0", "m1"}}, {"B", {"m2", "m3"}}};
  std::vector<std::string> sids;
  std::vector<Sentence> sents;
  for (std::size_t i = 0; i < 10; ++i) {
    sids.push_back(sentence_vector_id("ad", i));
    sents.push_back(sentence("ad", i, "s"));
  }
  auto svecs = EmbeddingMatrix::from_rows(sids, rand_rows(10), 4);
  PipelineConfig cfg;
  cfg.threshold = 0.5;
  auto r = run_stage2(sents, cfg, LabelIndex(members, sets), svecs);
  ASSERT_EQ(r.results.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    std::vector<float> q(svecs.row(i).begin(), svecs.row(i).end());
    auto all = oracle::nearest(q, members, members.size());
    // First member in score order decides the label.
    std::string label;
    for (auto& s : sets)
      for (auto& m : s.member_ids)
        if (m == all[0].first) label = s.label_code;
    EXPECT_EQ(r.results[i].label_code, label) << i;
    EXPECT_NEAR(r.results[i].score, all[0].second, 1e-6);
    EXPECT_EQ(r.results[i].retained, all[0].second >= 0.5);
  }
}

TEST(Stage2, LabelTiesGoToSmallerCode) {
  auto m = EmbeddingMatrix::from_rows({"x", "y"}, std::vector<std::vector<float>>{{1, 0}, {1, 0}}, 2);
  LabelIndex labels(m, {{"Z", {"x"}}, {"K", {"y"}}});
  std::vector<float> q = {1, 0};
  EXPECT_EQ(labels.best(std::span<const float>(q)).label_code, "K");
}

TEST(Stage2, TitleVectorMode) {
  auto m = EmbeddingMatrix::from_rows({"L1", "L2"}, std::vector<std::vector<float>>{{1, 0}, {0, 1}}, 2);
  LabelIndex labels(m, {{"L1", {"ignored"}}, {"L2", {"ignored"}}}, LabelMode::title_vector);
  std::vector<float> q = {0.1f, 1};
  EXPECT_EQ(labels.best(std::span<const float>(q)).label_code, "L2");
  EXPECT_THROW(LabelIndex(m, {{"L3", {"x"}}}, LabelMode::title_vector), InputError);
}

TEST(Stage2, RaisingThresholdNeverAddsResults) {
  std::mt19937_64 rng(9);
  std::normal_distribution<float> g;
  std::vector<std::string> ids;
  std::vector<std::vector<float>> rows;
  std::vector<Sentence> sents;
  for (std::size_t i = 0; i < 300; ++i) {
    ids.push_back(sentence_vector_id("ad", i));
    std::vector<float> r = {1, g(rng) * 0.5f, g(rng) * 0.5f};
    rows.push_back(r);
    sents.push_back(sentence("ad", i, "s"));
  }
  auto svecs = EmbeddingMatrix::from_rows(ids, rows, 3);
  LabelIndex labels(EmbeddingMatrix::from_rows({"m"}, std::vector<std::vector<float>>{{1, 0, 0}}, 3), {{"L", {"m"}}});
  std::size_t prev = sents.size() + 1;
  for (double t = 0.80; t <= 1.0; t += 0.01) {
    PipelineConfig cfg;
    cfg.threshold = t;
    std::size_t kept = 0;
    for (auto& m : run_stage2(sents, cfg, labels, svecs).results) kept += m.retained;
    EXPECT_LE(kept, prev);
    prev = kept;
  }
}

TEST(Histogram, BinEdges) {
  EXPECT_EQ(ScoreHistogram::bin_of(0.5), 0u);
  EXPECT_EQ(ScoreHistogram::bin_of(0.7999), 0u);
  EXPECT_EQ(ScoreHistogram::bin_of(0.80), 1u);
  EXPECT_EQ(ScoreHistogram::bin_of(0.87), 8u);
  EXPECT_EQ(ScoreHistogram::bin_of(0.999), 20u);
  EXPECT_EQ(ScoreHistogram::bin_of(1.0), 20u);
  EXPECT_EQ(ScoreHistogram::label(0), "<0.80");
  EXPECT_EQ(ScoreHistogram::label(8), "0.87");
}

TEST(Pipeline, SampleCorpusCountsAddUpAndWorkersAgree) {
  auto ads = ingest_file(kData + "/corpus.jsonl").records;
  auto filter = CuePhraseFilter::load("skill", kData + "/skill_cues.txt");
  LabelIndex labels(load_vectors(kData + "/vectors/skill_label_vectors.jvec"),
                    load_labeled_sets(kData + "/labels/skill_sets.json"));
  auto svecs = load_vectors(kData + "/vectors/sentence_vectors.jvec");
  PipelineConfig cfg;
  cfg.threshold = 0.87;
  auto one = run_pipeline(ads, filter, cfg, labels, svecs, 1);
  auto many = run_pipeline(ads, filter, cfg, labels, svecs, 4);
  EXPECT_EQ(one.results, many.results);
  const auto& s = one.stats;
  EXPECT_EQ(s.ads, ads.size());
  EXPECT_EQ(s.stage1_candidates + s.stage1_rejected, s.sentences);
  EXPECT_EQ(s.stage2_inputs + s.stage2_missing_vectors, s.stage1_candidates);
  EXPECT_EQ(s.histogram.total(), s.stage2_inputs);
  EXPECT_EQ(s.retained, one.results.size());
  EXPECT_GT(s.retained, 0u);
  for (auto& m : one.results) EXPECT_GE(m.score, 0.87);
}

TEST(Pipeline, ThresholdValidation) {
  PipelineConfig cfg;
  cfg.threshold = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg.threshold = 1.01;
  EXPECT_THROW(cfg.validate(), ArgumentError);
}
