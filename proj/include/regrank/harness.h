// Copyright 2026 The regrank Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef REGRANK_HARNESS_H_
#define REGRANK_HARNESS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "regrank/backends.h"
#include "regrank/context.h"
#include "regrank/corpus.h"
#include "regrank/metrics.h"
#include "regrank/rerank.h"

namespace regrank {

// Report file format tag.
inline constexpr char kReportFormat[] = "regrank-report/1";

// Metric keys in SampleRecord rows and ScoreReports.
namespace metric {
inline constexpr char kBleu[] = "bleu";  // unigram BLEU vs ground-truth RE
inline constexpr char kRougeL[] = "rouge_l";
inline constexpr char kCosineTT[] = "cosine_tt";
inline constexpr char kAccuracy[] = "accuracy";
inline constexpr char kMrr[] = "mrr";
inline constexpr char kNdcg[] = "ndcg";
inline constexpr char kCosineTI[] = "cosine_ti";
// Referent description vs the target's ground-truth description label.
inline constexpr char kDescBleu[] = "desc_bleu";  // unigram + bigram
inline constexpr char kDescRougeL[] = "desc_rouge_l";
inline constexpr char kDescJaccard[] = "desc_jaccard";
}  // namespace metric

// One cross-validation fold: the dialogues of one image set are tested, the
// rest are listed for (external) training.
struct FoldSpec {
  std::string fold_id;
  std::string test_set_id;
  std::vector<std::string> test_dialogue_ids;
  std::vector<std::string> train_dialogue_ids;

  bool operator==(const FoldSpec&) const = default;
};

// One fold per image set, in corpus order.
std::vector<FoldSpec> MakeFolds(const Corpus& corpus);

enum class FoldAggregation { kMacro, kMicro };

struct RunConfig {
  Decoding decoding = Decoding::Beam(6);
  std::vector<Strategy> strategies = {Strategy::kTop1, Strategy::kMaxDisc,
                                      Strategy::kRerank};
  PoolingConfig pooling;
  std::size_t window_size = kDefaultWindowSize;
  // 0 uses the plain generation prompt; 1..8 builds an n-shot prompt from
  // the fold's training dialogues.
  std::size_t shots = 0;
  // Recorded verbatim in the report (role -> base URL or "mock").
  std::map<std::string, std::string> endpoints;
  ReplayMode replay_mode = ReplayMode::kOff;
  std::string replay_path;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  FoldAggregation aggregation = FoldAggregation::kMacro;
  // Wall-clock timing makes reports differ between runs, so it is opt-in.
  bool record_timing = false;

  void Validate() const;
  nlohmann::json ToJson() const;
  static RunConfig FromJson(const nlohmann::json& j);
};

enum class SampleStatus { kIncluded, kExcluded, kFailed };

struct SampleRecord {
  std::string mention_id;
  std::string dialogue_id;
  std::string fold_id;
  std::string target_image_id;
  std::string reference_re;
  SampleStatus status = SampleStatus::kIncluded;
  std::string reason;
  std::vector<std::string> visual_context;
  std::vector<Candidate> candidates;
  // Aligned with candidates; nullopt where description generation failed.
  std::vector<std::optional<std::string>> descriptions;
  std::vector<ScoredCandidate> scored;
  std::vector<Selection> selections;
  std::map<std::string, MetricRow> metrics;  // keyed by StrategyName

  const Selection* SelectionFor(Strategy strategy) const;
};

struct Tallies {
  std::size_t total = 0;
  std::size_t included = 0;
  std::size_t excluded = 0;
  std::size_t failed = 0;
  std::size_t degraded = 0;  // included samples with a Top-1 fallback

  bool operator==(const Tallies&) const = default;
};

struct FoldReport {
  FoldSpec fold;
  std::map<std::string, ScoreReport> scores;  // keyed by StrategyName
  Tallies tallies;
};

struct RunReport {
  RunConfig config;
  std::vector<FoldReport> folds;
  std::map<std::string, ScoreReport> overall;
  Tallies tallies;
  std::vector<SampleRecord> samples;
  std::optional<double> elapsed_seconds;

  nlohmann::json ToJson() const;
  static RunReport FromJson(const nlohmann::json& j);
};

// Runs the four pipeline steps for one single-image mention. Backend
// failures mark the record failed instead of throwing. `support_pool` is
// required when config.shots > 0.
SampleRecord RunMention(const Corpus& corpus, const Dialogue& dialogue,
                        const Mention& mention, const RunConfig& config,
                        const ModelClient& client,
                        const std::vector<IclExample>* support_pool = nullptr);

// Evaluates every fold's test dialogues. Throws only on corpus or config
// errors.
RunReport RunExperiment(const Corpus& corpus, const RunConfig& config,
                        const ModelClient& client);

// Monte-Carlo accuracy of guessing uniformly from the reduced visual context
// over all included single-image mentions.
double RandomGuessBaseline(const Corpus& corpus, std::size_t trials,
                           std::uint64_t seed);
// Exact expectation of the above: mean of 1 / |visual context|.
double AnalyticChance(const Corpus& corpus);

// Lossless JSON file (2-space indent, trailing newline).
void EmitReport(const RunReport& report, const std::filesystem::path& path);
RunReport ReadReport(const std::filesystem::path& path);

// Markdown tables with scores rounded to the nearest hundredth.
std::string RenderTables(const RunReport& report);
void EmitTables(const RunReport& report, const std::filesystem::path& path);

// CSV of RE lengths in tokens per included sample and strategy, plus the
// ground truth, for length plots.
std::string RenderLengthData(const RunReport& report);

}  // namespace regrank

#endif  // REGRANK_HARNESS_H_
