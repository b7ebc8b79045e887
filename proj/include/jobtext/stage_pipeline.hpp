#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "jobtext/corpus.hpp"
#include "jobtext/embed_store.hpp"
#include "jobtext/error.hpp"
#include "jobtext/knowledge_map.hpp"
#include "jobtext/parallel.hpp"

namespace jobtext {

/// Stage 1: decides whether a sentence is a candidate for semantic matching.
/// Implementations must be deterministic and safe to call concurrently; a
/// throw marks the sentence as a filter failure.
class SentenceFilter {
 public:
  virtual ~SentenceFilter() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual std::string version() const = 0;
  [[nodiscard]] virtual bool is_candidate(const Sentence& s) const = 0;
};

class AcceptAllFilter final : public SentenceFilter {
 public:
  [[nodiscard]] std::string name() const override { return "accept_all"; }
  [[nodiscard]] std::string version() const override { return "1"; }
  [[nodiscard]] bool is_candidate(const Sentence&) const override { return true; }
};

/// Baseline filter: a sentence is a candidate when it contains any cue phrase
/// (token-boundary, case-insensitive).
class CuePhraseFilter final : public SentenceFilter {
 public:
  CuePhraseFilter(std::string name, const std::vector<std::string>& cues) : name_(std::move(name)) {
    std::vector<MapEntry> entries;
    for (auto& c : cues) entries.push_back(MapEntry{{c}, "cue", c});
    matcher_ = Matcher::compile(std::move(entries));
    std::string joined;
    for (auto& c : cues) joined += to_lower(c) + "\n";
    version_ = std::to_string(cues.size()) + "-" + std::to_string(fnv1a64(joined) & 0xffffffffULL);
  }

  static CuePhraseFilter load(std::string name, const std::filesystem::path& path) {
    return CuePhraseFilter(std::move(name), read_term_list(path));
  }

  [[nodiscard]] std::string name() const override { return name_; }
  [[nodiscard]] std::string version() const override { return version_; }
  [[nodiscard]] bool is_candidate(const Sentence& s) const override { return !matcher_.scan(s.text).empty(); }

 private:
  std::string name_;
  std::string version_;
  Matcher matcher_;
};

/// Labels produced outside the engine (e.g. by a fine-tuned classifier),
/// keyed by (ad_id, sentence index). Unlabeled sentences fail the filter.
class ExternalLabelFilter final : public SentenceFilter {
 public:
  void set(std::string ad_id, std::size_t idx, bool candidate) { labels_[{std::move(ad_id), idx}] = candidate; }

  /// JSONL rows {ad_id, sentence_idx, candidate}.
  static ExternalLabelFilter parse(std::string_view text, std::string source = "<labels>") {
    ExternalLabelFilter f;
    f.source_ = std::move(source);
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      try {
        auto j = nlohmann::json::parse(lines[i]);
        f.set(j.at("ad_id").get<std::string>(), j.at("sentence_idx").get<std::size_t>(), j.at("candidate").get<bool>());
      } catch (const nlohmann::json::exception& e) {
        throw InputError(f.source_ + ":" + std::to_string(i + 1) + ": " + e.what());
      }
    }
    return f;
  }

  static ExternalLabelFilter load(const std::filesystem::path& path) { return parse(read_file(path), path.string()); }

  [[nodiscard]] std::string name() const override { return "external"; }
  [[nodiscard]] std::string version() const override { return source_; }
  [[nodiscard]] bool is_candidate(const Sentence& s) const override {
    auto it = labels_.find({s.ad_id, s.index});
    if (it == labels_.end())
      throw InputError("no external label for sentence " + s.ad_id + "#" + std::to_string(s.index));
    return it->second;
  }

 private:
  std::string source_;
  std::map<std::pair<std::string, std::size_t>, bool> labels_;
};

// ---------------------------------------------------------------------------

enum class PipelineTask { skill, task, custom };

inline double default_threshold(PipelineTask t) {
  switch (t) {
    case PipelineTask::skill:
      return 0.87;
    case PipelineTask::task:
      return 0.90;
    default:
      return 0.90;
  }
}

/// How a sentence is scored against a label.
enum class LabelMode {
  member_max,    // max cosine over the label's member statements
  title_vector,  // cosine to a single vector whose id is the label code
};

/// Label side of stage 2: statement vectors plus the sets that group them.
class LabelIndex {
 public:
  LabelIndex(EmbeddingMatrix vectors, std::vector<LabeledSet> sets, LabelMode mode = LabelMode::member_max)
      : vectors_(std::move(vectors)), mode_(mode) {
    std::sort(sets.begin(), sets.end(), [](auto& a, auto& b) { return a.label_code < b.label_code; });
    for (auto& s : sets) {
      Label l{s.label_code, {}};
      if (mode_ == LabelMode::title_vector) {
        auto r = vectors_.find(s.label_code);
        if (!r) throw InputError("label " + s.label_code + " has no title vector");
        l.rows.push_back(*r);
      } else {
        for (auto& id : s.member_ids) {
          auto r = vectors_.find(id);
          if (!r) throw InputError("label " + s.label_code + ": member '" + id + "' has no embedding");
          l.rows.push_back(*r);
        }
      }
      if (l.rows.empty()) throw InputError("label " + s.label_code + " has no members");
      labels_.push_back(std::move(l));
    }
  }

  struct Best {
    std::string label_code;
    double score = -2;
  };

  /// Best label by max-over-members; ties go to the smaller label code.
  template <typename T>
  [[nodiscard]] Best best(std::span<const T> query) const {
    if (query.size() != vectors_.dim()) throw ArgumentError("sentence vector dimension differs from label vectors");
    std::vector<double> row_score(vectors_.size());
    for (std::size_t r = 0; r < vectors_.size(); ++r) row_score[r] = std::clamp(dot(vectors_.row(r), query), -1.0, 1.0);
    Best b;
    for (auto& l : labels_) {
      double s = -2;
      for (auto r : l.rows) s = std::max(s, row_score[r]);
      if (s > b.score) b = Best{l.code, s};
    }
    return b;
  }

  [[nodiscard]] std::size_t label_count() const { return labels_.size(); }
  [[nodiscard]] const EmbeddingMatrix& vectors() const { return vectors_; }
  [[nodiscard]] LabelMode mode() const { return mode_; }

 private:
  struct Label {
    std::string code;
    std::vector<std::size_t> rows;
  };
  EmbeddingMatrix vectors_;
  std::vector<Label> labels_;
  LabelMode mode_;
};

struct PipelineConfig {
  PipelineTask task = PipelineTask::skill;
  double threshold = 0.87;
  bool keep_below_threshold = false;

  void validate() const {
    if (!(threshold > 0 && threshold <= 1)) throw ArgumentError("pipeline threshold must lie in (0, 1]");
  }
};

struct MatchResult {
  std::string ad_id;
  std::size_t sentence_index = 0;
  std::string label_code;
  double score = 0;
  bool stage1_passed = true;
  bool retained = false;

  bool operator==(const MatchResult&) const = default;
};

inline nlohmann::ordered_json to_json(const MatchResult& m) {
  return {{"ad_id", m.ad_id}, {"sentence_idx", m.sentence_index}, {"label_code", m.label_code}, {"score", m.score}};
}

struct Diagnostic {
  std::string ad_id;
  std::size_t sentence_index = 0;
  std::string message;
};

/// Key under which a sentence's vector is stored: "<ad_id>#<index>".
inline std::string sentence_vector_id(std::string_view ad_id, std::size_t index) {
  return std::string(ad_id) + "#" + std::to_string(index);
}

// ---------------------------------------------------------------------------
// Statistics

/// Score histogram: bin 0 holds scores below 0.80, bins 1..20 hold
/// [0.80, 0.81), ..., [0.99, 1.00] (1.00 falls in the last bin).
struct ScoreHistogram {
  static constexpr std::size_t kBins = 21;
  std::array<std::uint64_t, kBins> counts{};

  static std::size_t bin_of(double score) {
    if (score < 0.80) return 0;
    auto k = static_cast<long>(std::floor(score * 100.0 + 1e-9)) - 80;
    return static_cast<std::size_t>(std::clamp<long>(k, 0, 19)) + 1;
  }
  static std::string label(std::size_t bin) {
    if (bin == 0) return "<0.80";
    char buf[8];
    std::snprintf(buf, sizeof buf, "%.2f", 0.79 + 0.01 * static_cast<double>(bin));
    return buf;
  }
  void add(double score) { ++counts[bin_of(score)]; }
  [[nodiscard]] std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
  ScoreHistogram& operator+=(const ScoreHistogram& o) {
    for (std::size_t i = 0; i < kBins; ++i) counts[i] += o.counts[i];
    return *this;
  }
};

struct StageStats {
  std::uint64_t ads = 0;
  std::uint64_t sentences = 0;
  std::uint64_t stage1_candidates = 0;
  std::uint64_t stage1_rejected = 0;
  std::uint64_t stage1_failures = 0;  // subset of stage1_rejected
  std::uint64_t stage2_inputs = 0;    // candidates that were scored
  std::uint64_t stage2_missing_vectors = 0;
  std::uint64_t retained = 0;
  ScoreHistogram histogram;

  StageStats& operator+=(const StageStats& o) {
    ads += o.ads;
    sentences += o.sentences;
    stage1_candidates += o.stage1_candidates;
    stage1_rejected += o.stage1_rejected;
    stage1_failures += o.stage1_failures;
    stage2_inputs += o.stage2_inputs;
    stage2_missing_vectors += o.stage2_missing_vectors;
    retained += o.retained;
    histogram += o.histogram;
    return *this;
  }
};

inline nlohmann::ordered_json to_json(const StageStats& s) {
  nlohmann::ordered_json hist = nlohmann::ordered_json::array();
  for (std::size_t b = 0; b < ScoreHistogram::kBins; ++b)
    hist.push_back({{"bin", ScoreHistogram::label(b)}, {"count", s.histogram.counts[b]}});
  return {{"ads", s.ads},
          {"sentences", s.sentences},
          {"stage1_candidates", s.stage1_candidates},
          {"stage1_rejected", s.stage1_rejected},
          {"stage1_failures", s.stage1_failures},
          {"stage2_inputs", s.stage2_inputs},
          {"stage2_missing_vectors", s.stage2_missing_vectors},
          {"retained", s.retained},
          {"histogram", hist}};
}

// ---------------------------------------------------------------------------
// Stages

struct Stage1Result {
  std::vector<Sentence> candidates;
  std::vector<Sentence> rejected;
  std::vector<Diagnostic> diagnostics;  // one per filter failure
};

inline Stage1Result run_stage1(const SentenceFilter& filter, const std::vector<Sentence>& sentences) {
  Stage1Result r;
  for (auto& s : sentences) {
    try {
      if (filter.is_candidate(s))
        r.candidates.push_back(s);
      else
        r.rejected.push_back(s);
    } catch (const std::exception& e) {
      r.rejected.push_back(s);
      r.diagnostics.push_back({s.ad_id, s.index, std::string("filter failure: ") + e.what()});
    }
  }
  return r;
}

struct Stage2Result {
  std::vector<MatchResult> results;  // every scored candidate, sorted by (ad_id, sentence index)
  std::vector<Diagnostic> diagnostics;
};

inline Stage2Result run_stage2(const std::vector<Sentence>& candidates, const PipelineConfig& config,
                               const LabelIndex& labels, const EmbeddingMatrix& sentence_vectors) {
  config.validate();
  Stage2Result out;
  for (auto& s : candidates) {
    auto row = sentence_vectors.find(sentence_vector_id(s.ad_id, s.index));
    if (!row) {
      out.diagnostics.push_back({s.ad_id, s.index, "missing sentence vector " + sentence_vector_id(s.ad_id, s.index)});
      continue;
    }
    auto best = labels.best(sentence_vectors.row(*row));
    out.results.push_back(MatchResult{s.ad_id, s.index, best.label_code, best.score, true, best.score >= config.threshold});
  }
  std::sort(out.results.begin(), out.results.end(), [](auto& a, auto& b) {
    return a.ad_id != b.ad_id ? a.ad_id < b.ad_id : a.sentence_index < b.sentence_index;
  });
  return out;
}

struct PipelineOutput {
  std::vector<MatchResult> results;  // retained only, unless keep_below_threshold
  StageStats stats;
  std::vector<Diagnostic> diagnostics;
};

/// segment -> stage 1 -> stage 2 over every ad, data-parallel across ads.
inline PipelineOutput run_pipeline(const std::vector<JobAdRecord>& ads, const SentenceFilter& filter,
                                   const PipelineConfig& config, const LabelIndex& labels,
                                   const EmbeddingMatrix& sentence_vectors, std::size_t workers = 1) {
  config.validate();
  auto per_ad = parallel_map(ads.size(), workers, [&](std::size_t i) {
    PipelineOutput o;
    auto sentences = segment(ads[i].body, ads[i].id);
    auto s1 = run_stage1(filter, sentences);
    auto s2 = run_stage2(s1.candidates, config, labels, sentence_vectors);
    o.stats.ads = 1;
    o.stats.sentences = sentences.size();
    o.stats.stage1_candidates = s1.candidates.size();
    o.stats.stage1_rejected = s1.rejected.size();
    o.stats.stage1_failures = s1.diagnostics.size();
    o.stats.stage2_inputs = s2.results.size();
    o.stats.stage2_missing_vectors = s2.diagnostics.size();
    for (auto& m : s2.results) {
      o.stats.histogram.add(m.score);
      if (m.retained) ++o.stats.retained;
      if (m.retained || config.keep_below_threshold) o.results.push_back(m);
    }
    o.diagnostics = std::move(s1.diagnostics);
    o.diagnostics.insert(o.diagnostics.end(), s2.diagnostics.begin(), s2.diagnostics.end());
    return o;
  });
  PipelineOutput total;
  for (auto& o : per_ad) {
    total.stats += o.stats;
    total.results.insert(total.results.end(), o.results.begin(), o.results.end());
    total.diagnostics.insert(total.diagnostics.end(), o.diagnostics.begin(), o.diagnostics.end());
  }
  std::stable_sort(total.results.begin(), total.results.end(), [](auto& a, auto& b) {
    return a.ad_id != b.ad_id ? a.ad_id < b.ad_id : a.sentence_index < b.sentence_index;
  });
  return total;
}

}  // namespace jobtext
