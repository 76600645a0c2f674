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

#include "regrank/harness.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "regrank/errors.h"
#include "regrank/random.h"

namespace regrank {

using nlohmann::json;

std::vector<FoldSpec> MakeFolds(const Corpus& corpus) {
  std::vector<FoldSpec> folds;
  for (const ImageSet& set : corpus.image_sets()) {
    FoldSpec fold;
    fold.fold_id = "fold-" + set.set_id;
    fold.test_set_id = set.set_id;
    for (const Dialogue& d : corpus.dialogues()) {
      (d.set_id == set.set_id ? fold.test_dialogue_ids
                              : fold.train_dialogue_ids)
          .push_back(d.dialogue_id);
    }
    folds.push_back(std::move(fold));
  }
  return folds;
}

// ---------------------------------------------------------------------------
// Config and report serialization.

namespace {

std::string StatusName(SampleStatus status) {
  switch (status) {
    case SampleStatus::kIncluded:
      return "included";
    case SampleStatus::kExcluded:
      return "excluded";
    case SampleStatus::kFailed:
      return "failed";
  }
  return "included";
}

SampleStatus ParseStatus(const std::string& name) {
  if (name == "included") return SampleStatus::kIncluded;
  if (name == "excluded") return SampleStatus::kExcluded;
  if (name == "failed") return SampleStatus::kFailed;
  throw DataError("unknown sample status " + name);
}

json ScoreReportToJson(const ScoreReport& r) {
  return {{"means", r.means}, {"counts", r.counts}, {"samples", r.samples}};
}

ScoreReport ScoreReportFromJson(const json& j) {
  ScoreReport r;
  r.means = j.at("means").get<std::map<std::string, double>>();
  r.counts = j.at("counts").get<std::map<std::string, std::size_t>>();
  r.samples = j.at("samples").get<std::size_t>();
  return r;
}

json TalliesToJson(const Tallies& t) {
  return {{"total", t.total},       {"included", t.included},
          {"excluded", t.excluded}, {"failed", t.failed},
          {"degraded", t.degraded}};
}

Tallies TalliesFromJson(const json& j) {
  return {j.at("total").get<std::size_t>(), j.at("included").get<std::size_t>(),
          j.at("excluded").get<std::size_t>(), j.at("failed").get<std::size_t>(),
          j.at("degraded").get<std::size_t>()};
}

json SampleToJson(const SampleRecord& s) {
  json candidates = json::array();
  for (std::size_t i = 0; i < s.candidates.size(); ++i) {
    const Candidate& c = s.candidates[i];
    json item = {{"text", c.text}, {"score", c.score}, {"beam_rank", c.beam_rank}};
    item["description"] = i < s.descriptions.size() && s.descriptions[i]
                              ? json(*s.descriptions[i])
                              : json(nullptr);
    candidates.push_back(std::move(item));
  }
  json scored = json::array();
  for (const ScoredCandidate& c : s.scored) {
    scored.push_back({{"candidate_index", c.candidate_index},
                      {"beam_rank", c.beam_rank},
                      {"a", c.a},
                      {"b", c.b},
                      {"s", c.s}});
  }
  json selections = json::array();
  for (const Selection& sel : s.selections) {
    selections.push_back({{"strategy", StrategyName(sel.strategy)},
                          {"candidate_index", sel.candidate_index},
                          {"beam_rank", sel.beam_rank},
                          {"degraded", sel.degraded}});
  }
  return {{"mention_id", s.mention_id},
          {"dialogue_id", s.dialogue_id},
          {"fold_id", s.fold_id},
          {"target_image_id", s.target_image_id},
          {"reference_re", s.reference_re},
          {"status", StatusName(s.status)},
          {"reason", s.reason},
          {"visual_context", s.visual_context},
          {"candidates", std::move(candidates)},
          {"scored", std::move(scored)},
          {"selections", std::move(selections)},
          {"metrics", s.metrics}};
}

SampleRecord SampleFromJson(const json& j) {
  SampleRecord s;
  s.mention_id = j.at("mention_id").get<std::string>();
  s.dialogue_id = j.at("dialogue_id").get<std::string>();
  s.fold_id = j.at("fold_id").get<std::string>();
  s.target_image_id = j.at("target_image_id").get<std::string>();
  s.reference_re = j.at("reference_re").get<std::string>();
  s.status = ParseStatus(j.at("status").get<std::string>());
  s.reason = j.at("reason").get<std::string>();
  s.visual_context = j.at("visual_context").get<std::vector<std::string>>();
  for (const json& c : j.at("candidates")) {
    s.candidates.push_back({c.at("text").get<std::string>(),
                            c.at("score").get<double>(),
                            c.at("beam_rank").get<std::size_t>()});
    s.descriptions.push_back(c.at("description").is_null()
                                 ? std::nullopt
                                 : std::optional<std::string>(
                                       c.at("description").get<std::string>()));
  }
  for (const json& c : j.at("scored")) {
    s.scored.push_back({c.at("candidate_index").get<std::size_t>(),
                        c.at("beam_rank").get<std::size_t>(),
                        c.at("a").get<double>(), c.at("b").get<double>(),
                        c.at("s").get<double>()});
  }
  for (const json& c : j.at("selections")) {
    s.selections.push_back({ParseStrategy(c.at("strategy").get<std::string>()),
                            c.at("candidate_index").get<std::size_t>(),
                            c.at("beam_rank").get<std::size_t>(),
                            c.at("degraded").get<bool>()});
  }
  s.metrics = j.at("metrics").get<std::map<std::string, MetricRow>>();
  return s;
}

}  // namespace

const Selection* SampleRecord::SelectionFor(Strategy strategy) const {
  for (const Selection& s : selections) {
    if (s.strategy == strategy) return &s;
  }
  return nullptr;
}

void RunConfig::Validate() const {
  if (decoding.width < 1) throw PreconditionError("beam width must be >= 1");
  if (shots > 8) throw PreconditionError("shots must be in 0..8");
  if (parallelism < 1) throw PreconditionError("parallelism must be >= 1");
  std::set<Strategy> seen;
  for (Strategy s : strategies) {
    if (!seen.insert(s).second) {
      throw PreconditionError("duplicate strategy " + StrategyName(s));
    }
  }
  pooling.Validate();
}

json RunConfig::ToJson() const {
  json names = json::array();
  for (Strategy s : strategies) names.push_back(StrategyName(s));
  return {{"decoding", decoding.ToJson()},
          {"strategies", std::move(names)},
          {"pooling",
           {{"w_tim", pooling.w_tim},
            {"w_itm", pooling.w_itm},
            {"epsilon", pooling.epsilon},
            {"logit_scale", pooling.logit_scale}}},
          {"window_size", window_size},
          {"shots", shots},
          {"endpoints", endpoints},
          {"replay_mode", ReplayModeName(replay_mode)},
          {"replay_path", replay_path},
          {"seed", seed},
          {"parallelism", parallelism},
          {"aggregation",
           aggregation == FoldAggregation::kMacro ? "macro" : "micro"},
          {"record_timing", record_timing}};
}

RunConfig RunConfig::FromJson(const json& j) {
  RunConfig c;
  c.decoding = Decoding::FromJson(j.at("decoding"));
  c.strategies.clear();
  for (const json& s : j.at("strategies")) {
    c.strategies.push_back(ParseStrategy(s.get<std::string>()));
  }
  const json& p = j.at("pooling");
  c.pooling = {p.at("w_tim").get<double>(), p.at("w_itm").get<double>(),
               p.at("epsilon").get<double>(), p.at("logit_scale").get<double>()};
  c.window_size = j.at("window_size").get<std::size_t>();
  c.shots = j.at("shots").get<std::size_t>();
  c.endpoints = j.at("endpoints").get<std::map<std::string, std::string>>();
  c.replay_mode = ParseReplayMode(j.at("replay_mode").get<std::string>());
  c.replay_path = j.at("replay_path").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.parallelism = j.at("parallelism").get<std::size_t>();
  c.aggregation = j.at("aggregation").get<std::string>() == "micro"
                      ? FoldAggregation::kMicro
                      : FoldAggregation::kMacro;
  c.record_timing = j.at("record_timing").get<bool>();
  return c;
}

json RunReport::ToJson() const {
  json folds_json = json::array();
  for (const FoldReport& f : folds) {
    json scores = json::object();
    for (const auto& [name, r] : f.scores) scores[name] = ScoreReportToJson(r);
    folds_json.push_back({{"fold_id", f.fold.fold_id},
                          {"test_set_id", f.fold.test_set_id},
                          {"test_dialogue_ids", f.fold.test_dialogue_ids},
                          {"train_dialogue_ids", f.fold.train_dialogue_ids},
                          {"scores", std::move(scores)},
                          {"tallies", TalliesToJson(f.tallies)}});
  }
  json overall_json = json::object();
  for (const auto& [name, r] : overall) overall_json[name] = ScoreReportToJson(r);
  json samples_json = json::array();
  for (const SampleRecord& s : samples) samples_json.push_back(SampleToJson(s));
  json out = {{"format", kReportFormat},
              {"config", config.ToJson()},
              {"folds", std::move(folds_json)},
              {"overall", std::move(overall_json)},
              {"tallies", TalliesToJson(tallies)},
              {"samples", std::move(samples_json)}};
  if (elapsed_seconds) out["elapsed_seconds"] = *elapsed_seconds;
  return out;
}

RunReport RunReport::FromJson(const json& j) {
  if (j.value("format", "") != kReportFormat) {
    throw DataError("not a " + std::string(kReportFormat) + " report");
  }
  RunReport r;
  r.config = RunConfig::FromJson(j.at("config"));
  for (const json& f : j.at("folds")) {
    FoldReport fold;
    fold.fold.fold_id = f.at("fold_id").get<std::string>();
    fold.fold.test_set_id = f.at("test_set_id").get<std::string>();
    fold.fold.test_dialogue_ids =
        f.at("test_dialogue_ids").get<std::vector<std::string>>();
    fold.fold.train_dialogue_ids =
        f.at("train_dialogue_ids").get<std::vector<std::string>>();
    for (const auto& [name, s] : f.at("scores").items()) {
      fold.scores[name] = ScoreReportFromJson(s);
    }
    fold.tallies = TalliesFromJson(f.at("tallies"));
    r.folds.push_back(std::move(fold));
  }
  for (const auto& [name, s] : j.at("overall").items()) {
    r.overall[name] = ScoreReportFromJson(s);
  }
  r.tallies = TalliesFromJson(j.at("tallies"));
  for (const json& s : j.at("samples")) r.samples.push_back(SampleFromJson(s));
  if (j.contains("elapsed_seconds")) {
    r.elapsed_seconds = j["elapsed_seconds"].get<double>();
  }
  return r;
}

// ---------------------------------------------------------------------------
// Pipeline.

namespace {

// Text metrics against a reference; metrics whose reference tokenizes to
// nothing are omitted.
void AddTextMetrics(MetricRow& row, const std::string& candidate,
                    const std::string& reference) {
  const TokenSeq cand = Tokenize(candidate);
  const TokenSeq ref = Tokenize(reference);
  if (ref.empty()) return;
  row[metric::kBleu] = Bleu(cand, ref, 1);
  row[metric::kRougeL] = RougeL(cand, ref);
}

void AddDescriptionMetrics(MetricRow& row, const std::string& description,
                           const std::string& label) {
  const TokenSeq cand = Tokenize(description);
  const TokenSeq ref = Tokenize(label);
  if (ref.empty()) return;
  row[metric::kDescBleu] = Bleu(cand, ref, 2);
  row[metric::kDescRougeL] = RougeL(cand, ref);
  row[metric::kDescJaccard] = Jaccard(cand, ref);
}

void ScoreSample(SampleRecord& record, const Corpus& corpus,
                 const RunConfig& config, const ModelClient& client,
                 const ContextWindow& window) {
  const std::size_t target_col =
      std::find(record.visual_context.begin(), record.visual_context.end(),
                record.target_image_id) -
      record.visual_context.begin();

  // Step 2: referent description per candidate.
  record.descriptions.assign(record.candidates.size(), std::nullopt);
  std::vector<std::size_t> described;
  std::vector<std::string> description_texts;
  for (std::size_t i = 0; i < record.candidates.size(); ++i) {
    const Candidate& c = record.candidates[i];
    try {
      ReferentDescription d =
          client.DescribeReferent(InsertCandidate(window, c.text), c.beam_rank);
      record.descriptions[i] = d.text;
      described.push_back(i);
      description_texts.push_back(std::move(d.text));
    } catch (const EmptyDescription&) {
      // The candidate drops out of scoring; see SelectCandidate fallback.
    }
  }

  // Step 3: similarities and the two softmaxes.
  std::vector<EmbeddingVector> images =
      client.EmbedImages(record.visual_context);
  std::optional<SimilarityMatrix> matrix;
  if (!described.empty()) {
    std::vector<EmbeddingVector> texts = client.EmbedTexts(description_texts);
    matrix.emplace(BuildSimilarityMatrix(texts, images, target_col));
    const std::vector<double> a = TimScores(*matrix, config.pooling);
    const std::vector<double> b = ItmDistribution(*matrix, config.pooling);
    std::vector<std::size_t> beam_ranks;
    for (std::size_t i : described) {
      beam_ranks.push_back(record.candidates[i].beam_rank);
    }
    record.scored = PooledScores(a, b, config.pooling, beam_ranks);
    for (std::size_t row = 0; row < described.size(); ++row) {
      record.scored[row].candidate_index = described[row];
    }
  }

  // Step 4: selection per strategy.
  for (Strategy strategy : config.strategies) {
    record.selections.push_back(
        SelectCandidate(CandidateSet{record.mention_id, config.decoding,
                                     record.candidates},
                        record.scored, strategy));
  }
  if (config.strategies.empty()) return;

  // Cosine_TT: every candidate plus the reference in one batch, so the
  // request does not depend on which candidates the strategies picked and
  // a replay cache recorded under one pooling setting serves any other.
  std::vector<std::string> batch;
  for (const Candidate& c : record.candidates) batch.push_back(c.text);
  batch.push_back(record.reference_re);
  const std::vector<EmbeddingVector> text_vectors = client.EmbedTexts(batch);
  const EmbeddingVector& reference_vector = text_vectors.back();

  const ImageRef* target = corpus.FindImage(record.target_image_id);
  for (const Selection& sel : record.selections) {
    MetricRow row;
    const std::string& text = record.candidates[sel.candidate_index].text;
    AddTextMetrics(row, text, record.reference_re);
    row[metric::kCosineTT] =
        Cosine(text_vectors[sel.candidate_index], reference_vector);

    for (std::size_t r = 0; matrix && r < record.scored.size(); ++r) {
      if (record.scored[r].candidate_index != sel.candidate_index) continue;
      const RankingOutcome outcome = RankTarget(matrix->row(r), target_col);
      const TirScores tir = TirMetrics(std::span(&outcome, 1));
      row[metric::kAccuracy] = tir.accuracy;
      row[metric::kMrr] = tir.mrr;
      row[metric::kNdcg] = tir.ndcg;
      row[metric::kCosineTI] = matrix->at(r, target_col);
      if (target != nullptr && target->ground_truth_description) {
        AddDescriptionMetrics(row, *record.descriptions[sel.candidate_index],
                              *target->ground_truth_description);
      }
    }
    record.metrics[StrategyName(sel.strategy)] = std::move(row);
  }
}

void MarkFailed(SampleRecord& record, const char* what) {
  record.status = SampleStatus::kFailed;
  record.reason = what;
  record.candidates.clear();
  record.descriptions.clear();
  record.scored.clear();
  record.selections.clear();
  record.metrics.clear();
}

}  // namespace

SampleRecord RunMention(const Corpus& corpus, const Dialogue& dialogue,
                        const Mention& mention, const RunConfig& config,
                        const ModelClient& client,
                        const std::vector<IclExample>* support_pool) {
  if (mention.referent_image_ids.size() != 1) {
    throw PreconditionError("mention " + mention.mention_id +
                            " does not have a single referent");
  }
  SampleRecord record;
  record.mention_id = mention.mention_id;
  record.dialogue_id = dialogue.dialogue_id;
  record.target_image_id = mention.referent_image_ids.front();
  record.reference_re = mention.surface;

  const ImageSet* set = corpus.FindSet(dialogue.set_id);
  if (set == nullptr) throw CorpusError("unknown image set " + dialogue.set_id);
  try {
    record.visual_context =
        VisualContextAt(*set, dialogue, mention).candidate_image_ids;
  } catch (const EmptyVisualContext&) {
    record.status = SampleStatus::kExcluded;
    record.reason = "empty visual context";
    return record;
  }
  if (std::find(record.visual_context.begin(), record.visual_context.end(),
                record.target_image_id) == record.visual_context.end()) {
    record.status = SampleStatus::kExcluded;
    record.reason = "target not in candidates";
    return record;
  }

  const ContextWindow window = BuildWindow(dialogue, mention, config.window_size);
  try {
    // Step 1: candidate REs conditioned on the context and referent image.
    PromptSequence prompt;
    if (config.shots == 0) {
      prompt = AssembleGenerationPrompt(window, record.target_image_id);
    } else {
      if (support_pool == nullptr) {
        throw PreconditionError("n-shot prompting needs a support pool");
      }
      prompt = AssembleIclPrompt(config.shots, *support_pool, window,
                                 record.target_image_id);
    }
    record.candidates =
        client.GenerateCandidates(prompt, config.decoding, mention.mention_id)
            .candidates;
    ScoreSample(record, corpus, config, client, window);
  } catch (const BackendError& e) {
    MarkFailed(record, e.what());
  } catch (const DimensionMismatch& e) {
    MarkFailed(record, e.what());
  }
  return record;
}

namespace {

std::vector<SampleRecord> RunFold(const Corpus& corpus, const FoldSpec& fold,
                                  const RunConfig& config,
                                  const ModelClient& client) {
  std::vector<std::pair<const Dialogue*, Mention>> work;
  const std::set<std::string> test_ids(fold.test_dialogue_ids.begin(),
                                       fold.test_dialogue_ids.end());
  for (const Mention& m : SingleImageMentions(corpus)) {
    if (test_ids.count(m.dialogue_id)) {
      work.emplace_back(corpus.FindDialogue(m.dialogue_id), m);
    }
  }
  std::optional<std::vector<IclExample>> pool;
  if (config.shots > 0) {
    pool = BuildSupportPool(corpus, fold.train_dialogue_ids, 2,
                            config.window_size);
  }

  std::vector<SampleRecord> records(work.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      try {
        records[i] = RunMention(corpus, *work[i].first, work[i].second, config,
                                client, pool ? &*pool : nullptr);
        records[i].fold_id = fold.fold_id;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(config.parallelism, work.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool_threads;
    for (std::size_t t = 0; t < threads; ++t) pool_threads.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return records;
}

void Tally(Tallies& t, const SampleRecord& s) {
  ++t.total;
  switch (s.status) {
    case SampleStatus::kIncluded:
      ++t.included;
      if (std::any_of(s.selections.begin(), s.selections.end(),
                      [](const Selection& sel) { return sel.degraded; })) {
        ++t.degraded;
      }
      break;
    case SampleStatus::kExcluded:
      ++t.excluded;
      break;
    case SampleStatus::kFailed:
      ++t.failed;
      break;
  }
}

std::map<std::string, ScoreReport> ScoreByStrategy(
    const std::vector<const SampleRecord*>& samples,
    const std::vector<Strategy>& strategies) {
  std::map<std::string, ScoreReport> out;
  for (Strategy strategy : strategies) {
    const std::string name = StrategyName(strategy);
    std::vector<MetricRow> rows;
    for (const SampleRecord* s : samples) {
      if (s->status != SampleStatus::kIncluded) continue;
      auto it = s->metrics.find(name);
      if (it != s->metrics.end()) rows.push_back(it->second);
    }
    out[name] = Aggregate(rows);
  }
  return out;
}

}  // namespace

RunReport RunExperiment(const Corpus& corpus, const RunConfig& config,
                        const ModelClient& client) {
  config.Validate();
  const auto started = std::chrono::steady_clock::now();
  RunReport report;
  report.config = config;
  for (const FoldSpec& fold : MakeFolds(corpus)) {
    std::vector<SampleRecord> records = RunFold(corpus, fold, config, client);
    FoldReport fold_report;
    fold_report.fold = fold;
    std::vector<const SampleRecord*> pointers;
    for (const SampleRecord& r : records) {
      Tally(fold_report.tallies, r);
      Tally(report.tallies, r);
      pointers.push_back(&r);
    }
    fold_report.scores = ScoreByStrategy(pointers, config.strategies);
    report.folds.push_back(std::move(fold_report));
    for (SampleRecord& r : records) report.samples.push_back(std::move(r));
  }

  if (config.aggregation == FoldAggregation::kMacro) {
    for (Strategy strategy : config.strategies) {
      const std::string name = StrategyName(strategy);
      std::vector<ScoreReport> per_fold;
      for (const FoldReport& f : report.folds) {
        // Folds without any scored sample would drag the macro mean to 0.
        if (f.scores.at(name).samples > 0) per_fold.push_back(f.scores.at(name));
      }
      report.overall[name] = AggregateFolds(per_fold);
    }
  } else {
    std::vector<const SampleRecord*> pointers;
    for (const SampleRecord& r : report.samples) pointers.push_back(&r);
    report.overall = ScoreByStrategy(pointers, config.strategies);
  }
  if (config.record_timing) {
    report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
  }
  return report;
}

namespace {

// Visual context sizes of every included single-image mention.
std::vector<std::size_t> IncludedContextSizes(const Corpus& corpus) {
  std::vector<std::size_t> sizes;
  for (const Mention& m : SingleImageMentions(corpus)) {
    const Dialogue* d = corpus.FindDialogue(m.dialogue_id);
    const ImageSet* set = corpus.FindSet(d->set_id);
    try {
      const VisualContextState state = VisualContextAt(*set, *d, m);
      if (state.Contains(m.referent_image_ids.front())) {
        sizes.push_back(state.candidate_image_ids.size());
      }
    } catch (const EmptyVisualContext&) {
    }
  }
  return sizes;
}

}  // namespace

double RandomGuessBaseline(const Corpus& corpus, std::size_t trials,
                           std::uint64_t seed) {
  if (trials < 1) throw PreconditionError("trials must be >= 1");
  const std::vector<std::size_t> sizes = IncludedContextSizes(corpus);
  if (sizes.empty()) throw PreconditionError("no included mentions");
  std::mt19937_64 rng(seed);
  std::uint64_t correct = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t k : sizes) {
      // The target is at an arbitrary fixed position; index 0 will do.
      if (UniformBelow(rng, k) == 0) ++correct;
    }
  }
  return static_cast<double>(correct) /
         (static_cast<double>(trials) * static_cast<double>(sizes.size()));
}

double AnalyticChance(const Corpus& corpus) {
  const std::vector<std::size_t> sizes = IncludedContextSizes(corpus);
  if (sizes.empty()) throw PreconditionError("no included mentions");
  double sum = 0;
  for (std::size_t k : sizes) sum += 1.0 / static_cast<double>(k);
  return sum / static_cast<double>(sizes.size());
}

// ---------------------------------------------------------------------------
// Output.

void EmitReport(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write report " + path.string());
  out << report.ToJson().dump(2) << "\n";
  if (!out) throw DataError("failed writing report " + path.string());
}

RunReport ReadReport(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open report " + path.string());
  try {
    return RunReport::FromJson(json::parse(in));
  } catch (const json::exception& e) {
    throw DataError("malformed report " + path.string() + ": " + e.what());
  }
}

namespace {

constexpr std::pair<const char*, const char*> kTableColumns[] = {
    {metric::kBleu, "BLEU"},         {metric::kRougeL, "ROUGE-L"},
    {metric::kCosineTT, "Cosine_TT"}, {metric::kAccuracy, "Accuracy"},
    {metric::kMrr, "MRR"},           {metric::kNdcg, "NDCG"},
    {metric::kCosineTI, "Cosine_TI"}};

void RenderTable(std::ostringstream& out,
                 const std::map<std::string, ScoreReport>& scores,
                 const std::vector<Strategy>& strategies) {
  if (strategies.empty()) return;
  out << "| Strategy |";
  for (const auto& [key, label] : kTableColumns) out << " " << label << " |";
  out << " n |\n|---|";
  for (std::size_t i = 0; i < std::size(kTableColumns); ++i) out << "---:|";
  out << "---:|\n";
  for (Strategy strategy : strategies) {
    auto it = scores.find(StrategyName(strategy));
    out << "| " << StrategyLabel(strategy) << " |";
    for (const auto& [key, label] : kTableColumns) {
      if (it != scores.end() && it->second.means.count(key)) {
        out << " " << FormatHundredth(it->second.means.at(key)) << " |";
      } else {
        out << " - |";
      }
    }
    out << " " << (it != scores.end() ? it->second.samples : 0) << " |\n";
  }
}

void RenderTallies(std::ostringstream& out, const Tallies& t) {
  out << "Samples: " << t.total << " single-image mentions, " << t.included
      << " included, " << t.excluded << " excluded, " << t.failed
      << " failed, " << t.degraded << " degraded.\n";
}

}  // namespace

std::string RenderTables(const RunReport& report) {
  std::ostringstream out;
  const RunConfig& c = report.config;
  out << "# REG results\n\n";
  out << "Decoding " << c.decoding.ToString() << ", window " << c.window_size
      << ", " << (c.shots == 0 ? "fine-tuned prompt" : std::to_string(c.shots) + "-shot")
      << ", w = (" << FormatHundredth(c.pooling.w_tim) << ", "
      << FormatHundredth(c.pooling.w_itm) << "). Scores are rounded to the "
      << "nearest hundredth.\n\n";
  out << "## Overall ("
      << (c.aggregation == FoldAggregation::kMacro ? "macro over folds"
                                                   : "micro over samples")
      << ")\n\n";
  RenderTallies(out, report.tallies);
  out << "\n";
  RenderTable(out, report.overall, c.strategies);
  for (const FoldReport& f : report.folds) {
    out << "\n## " << f.fold.fold_id << " (test set " << f.fold.test_set_id
        << ")\n\n";
    RenderTallies(out, f.tallies);
    out << "\n";
    RenderTable(out, f.scores, c.strategies);
  }
  return out.str();
}

void EmitTables(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write tables " + path.string());
  out << RenderTables(report);
}

std::string RenderLengthData(const RunReport& report) {
  std::ostringstream out;
  out << "mention_id,source,tokens\n";
  for (const SampleRecord& s : report.samples) {
    if (s.status != SampleStatus::kIncluded) continue;
    out << s.mention_id << ",GroundTruth," << Tokenize(s.reference_re).size()
        << "\n";
    for (const Selection& sel : s.selections) {
      out << s.mention_id << "," << StrategyName(sel.strategy) << ","
          << Tokenize(s.candidates[sel.candidate_index].text).size() << "\n";
    }
  }
  return out.str();
}

}  // namespace regrank
