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

#include "regrank/humaneval.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>
#include <tuple>

#include "regrank/context.h"
#include "regrank/errors.h"
#include "regrank/random.h"
#include "regrank/utf8.h"

namespace regrank {

using nlohmann::json;

std::string ReSourceName(ReSource source) {
  switch (source) {
    case ReSource::kGreedy:
      return "greedy";
    case ReSource::kRerank:
      return "rerank";
    case ReSource::kGroundTruth:
      return "ground_truth";
  }
  return "ground_truth";
}

ReSource ParseReSource(const std::string& name) {
  if (name == "greedy") return ReSource::kGreedy;
  if (name == "rerank") return ReSource::kRerank;
  if (name == "ground_truth") return ReSource::kGroundTruth;
  throw PreconditionError("unknown RE source \"" + name + "\"");
}

std::vector<AttentionCheck> LoadAttentionChecks(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open attention checks " + path.string());
  std::vector<AttentionCheck> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      AttentionCheck check{j.at("check_id").get<std::string>(),
                           j.at("prompt").get<std::string>(),
                           j.at("image_ids").get<std::vector<std::string>>(),
                           j.at("answer").get<std::string>()};
      if (std::find(check.image_ids.begin(), check.image_ids.end(),
                    check.answer_image_id) == check.image_ids.end()) {
        throw DataError("answer is not among the check's images");
      }
      out.push_back(std::move(check));
    } catch (const json::exception& e) {
      throw DataError(path.string() + " line " + std::to_string(number) +
                      ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + " line " + std::to_string(number) +
                      ": " + e.what());
    }
  }
  return out;
}

json Session::ToJson() const {
  return {{"session_id", session_id}, {"participant_id", participant_id},
          {"dialogue_id", dialogue_id}, {"re_source", ReSourceName(re_source)},
          {"seed", seed},               {"cursor", cursor},
          {"served", served},           {"total", total},
          {"consent", consent}};
}

json QuestionItem::ToJson() const {
  return {{"question_index", question_index},
          {"is_attention_check", is_attention_check},
          {"task_description", task_description},
          {"dialogue_prefix", dialogue_prefix},
          {"re_start", re_start},
          {"re_end", re_end},
          {"grid", grid}};
}

std::map<std::string, std::string> SelectedResFromReport(
    const RunReport& report, Strategy strategy) {
  std::map<std::string, std::string> out;
  for (const SampleRecord& s : report.samples) {
    if (s.status != SampleStatus::kIncluded) continue;
    if (const Selection* sel = s.SelectionFor(strategy)) {
      out[s.mention_id] = s.candidates[sel->candidate_index].text;
    }
  }
  return out;
}

HumanEvalService::HumanEvalService(
    const Corpus& corpus, std::vector<AttentionCheck> checks,
    std::map<ReSource, std::map<std::string, std::string>> generated_res,
    std::filesystem::path log_path, Clock clock)
    : corpus_(corpus),
      checks_(std::move(checks)),
      generated_res_(std::move(generated_res)),
      clock_(std::move(clock)) {
  if (!clock_) {
    clock_ = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
  if (!log_path.empty()) {
    Replay(log_path);
    log_.open(log_path, std::ios::app);
    if (!log_) throw DataError("cannot open session log " + log_path.string());
  }
}

HumanEvalService::~HumanEvalService() = default;

void HumanEvalService::Append(const json& event) {
  if (replaying_ || !log_.is_open()) return;
  std::lock_guard lock(log_mutex_);
  log_ << event.dump() << "\n";
  log_.flush();
  if (!log_) throw DataError("failed to append to session log");
}

void HumanEvalService::Replay(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return;
  replaying_ = true;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      const json e = json::parse(line);
      const std::string kind = e.at("event").get<std::string>();
      const std::string id = e.at("session_id").get<std::string>();
      if (kind == "create") {
        CreateLocked(id, e.at("participant_id").get<std::string>(),
                     e.at("dialogue_id").get<std::string>(),
                     ParseReSource(e.at("re_source").get<std::string>()),
                     e.at("seed").get<std::uint64_t>());
        continue;
      }
      SessionState& state = Find(id);
      if (kind == "consent") {
        state.session.consent = true;
      } else if (kind == "serve") {
        state.session.served = std::max(
            state.session.served, e.at("question_index").get<std::size_t>() + 1);
      } else if (kind == "answer") {
        state.responses.push_back({id, e.at("question_index").get<std::size_t>(),
                                   e.at("choice").get<std::string>(),
                                   e.at("timestamp_ms").get<std::int64_t>()});
        ++state.session.cursor;
      } else {
        throw DataError("unknown event " + kind);
      }
    } catch (const json::exception& e) {
      throw DataError("session log line " + std::to_string(number) + ": " +
                      e.what());
    }
  }
  replaying_ = false;
}

std::vector<HumanEvalService::PlannedItem> HumanEvalService::PlanFor(
    const Dialogue& dialogue, ReSource source) const {
  const ImageSet* set = corpus_.FindSet(dialogue.set_id);
  std::vector<std::size_t> mentions;
  for (std::size_t i = 0; i < dialogue.mentions.size(); ++i) {
    const Mention& m = dialogue.mentions[i];
    if (m.referent_image_ids.size() != 1) continue;
    try {
      if (!VisualContextAt(*set, dialogue, m).Contains(m.referent_image_ids[0])) {
        continue;
      }
    } catch (const EmptyVisualContext&) {
      continue;
    }
    if (source != ReSource::kGroundTruth) {
      auto it = generated_res_.find(source);
      if (it == generated_res_.end() || !it->second.count(m.mention_id)) continue;
    }
    mentions.push_back(i);
  }
  std::stable_sort(mentions.begin(), mentions.end(),
                   [&](std::size_t a, std::size_t b) {
                     const Mention& x = dialogue.mentions[a];
                     const Mention& y = dialogue.mentions[b];
                     return std::tie(x.message_index, x.char_start) <
                            std::tie(y.message_index, y.char_start);
                   });
  std::vector<PlannedItem> plan;
  std::size_t checks_used = 0;
  for (std::size_t k = 0; k < mentions.size(); ++k) {
    plan.push_back({false, mentions[k]});
    if ((k + 1) % kAttentionCheckInterval == 0) {
      if (checks_.empty()) {
        throw PreconditionError("dialogue " + dialogue.dialogue_id +
                                " needs attention checks but none were loaded");
      }
      plan.push_back({true, checks_used++ % checks_.size()});
    }
  }
  return plan;
}

Session HumanEvalService::CreateLocked(const std::string& session_id,
                                       const std::string& participant_id,
                                       const std::string& dialogue_id,
                                       ReSource source, std::uint64_t seed) {
  const Dialogue* dialogue = corpus_.FindDialogue(dialogue_id);
  if (dialogue == nullptr) {
    throw PreconditionError("unknown dialogue " + dialogue_id);
  }
  for (const auto& [id, other] : sessions_) {
    const Session& s = other->session;
    if (s.participant_id != participant_id || s.dialogue_id == dialogue_id) {
      continue;
    }
    const Dialogue* other_dialogue = corpus_.FindDialogue(s.dialogue_id);
    if (other_dialogue != nullptr && other_dialogue->set_id == dialogue->set_id) {
      throw EligibilityViolation("participant " + participant_id +
                                 " already has dialogue " + s.dialogue_id +
                                 " from image set " + dialogue->set_id);
    }
  }
  auto state = std::make_unique<SessionState>();
  state->plan = PlanFor(*dialogue, source);
  state->session = {session_id, participant_id, dialogue_id, source, seed,
                    0,          0,              state->plan.size(), false};
  Session out = state->session;
  sessions_.emplace(session_id, std::move(state));
  next_id_ = std::max(next_id_, sessions_.size() + 1);
  return out;
}

Session HumanEvalService::CreateSession(const std::string& participant_id,
                                        const std::string& dialogue_id,
                                        ReSource source, std::uint64_t seed) {
  std::unique_lock lock(sessions_mutex_);
  char id[32];
  std::snprintf(id, sizeof(id), "s%06zu", next_id_);
  Session session = CreateLocked(id, participant_id, dialogue_id, source, seed);
  Append({{"event", "create"},
          {"session_id", session.session_id},
          {"participant_id", participant_id},
          {"dialogue_id", dialogue_id},
          {"re_source", ReSourceName(source)},
          {"seed", seed}});
  return session;
}

HumanEvalService::SessionState& HumanEvalService::Find(
    const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw UnknownSession("no session " + session_id);
  return *it->second;
}

Session HumanEvalService::GiveConsent(const std::string& session_id) {
  SessionState& state = Find(session_id);
  std::lock_guard lock(state.mutex);
  if (!state.session.consent) {
    Append({{"event", "consent"}, {"session_id", session_id}});
    state.session.consent = true;
  }
  return state.session;
}

Session HumanEvalService::GetSession(const std::string& session_id) const {
  SessionState& state = Find(session_id);
  std::lock_guard lock(state.mutex);
  return state.session;
}

QuestionItem HumanEvalService::BuildItem(const SessionState& state,
                                         std::size_t index) const {
  const PlannedItem& planned = state.plan[index];
  const Dialogue& dialogue = *corpus_.FindDialogue(state.session.dialogue_id);
  QuestionItem item;
  item.question_index = index;
  item.is_attention_check = planned.attention_check;
  item.task_description = dialogue.task_description;
  if (planned.attention_check) {
    const AttentionCheck& check = checks_[planned.index];
    item.dialogue_prefix = check.prompt;
    item.grid = check.image_ids;
  } else {
    const Mention& m = dialogue.mentions[planned.index];
    std::string re = m.surface;
    if (state.session.re_source != ReSource::kGroundTruth) {
      re = generated_res_.at(state.session.re_source).at(m.mention_id);
    }
    std::string prefix;
    for (std::size_t i = 0; i < m.message_index; ++i) {
      const Message& msg = dialogue.messages[i];
      prefix += SpeakerName(msg.speaker) + ": " + msg.text + "\n";
    }
    const Message& current = dialogue.messages[m.message_index];
    prefix += SpeakerName(current.speaker) + ": " +
              utf8::Slice(current.text, 0, m.char_start);
    item.re_start = utf8::Length(prefix);
    prefix += re;
    item.re_end = utf8::Length(prefix);
    item.dialogue_prefix = std::move(prefix);
    item.grid = VisualContextAt(*corpus_.FindSet(dialogue.set_id), dialogue, m)
                    .candidate_image_ids;
  }
  // The grid order depends only on (seed, question index).
  std::mt19937_64 rng(state.session.seed ^
                      (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(index) + 1)));
  FisherYatesShuffle(item.grid, rng);
  return item;
}

std::optional<QuestionItem> HumanEvalService::NextQuestion(
    const std::string& session_id) {
  SessionState& state = Find(session_id);
  std::lock_guard lock(state.mutex);
  if (!state.session.consent) {
    throw ConsentRequired("consent required before questions");
  }
  if (state.session.cursor >= state.plan.size()) return std::nullopt;
  const std::size_t index = state.session.cursor;
  if (state.session.served <= index) {
    Append({{"event", "serve"},
            {"session_id", session_id},
            {"question_index", index}});
    state.session.served = index + 1;
  }
  return BuildItem(state, index);
}

ResponseRecord HumanEvalService::SubmitAnswer(const std::string& session_id,
                                              std::size_t question_index,
                                              const std::string& choice) {
  SessionState& state = Find(session_id);
  std::lock_guard lock(state.mutex);
  Session& s = state.session;
  if (!s.consent) throw ConsentRequired("consent required before answers");
  if (question_index < s.cursor) {
    throw DuplicateAnswer("question " + std::to_string(question_index) +
                          " already answered");
  }
  if (s.cursor >= state.plan.size()) throw SessionComplete("session complete");
  if (question_index > s.cursor || question_index >= s.served) {
    throw OutOfOrder("question " + std::to_string(question_index) +
                     " has not been served");
  }
  const QuestionItem item = BuildItem(state, question_index);
  if (std::find(item.grid.begin(), item.grid.end(), choice) == item.grid.end()) {
    throw InvalidChoice("image " + choice + " is not in the grid");
  }
  ResponseRecord record{session_id, question_index, choice, clock_()};
  Append({{"event", "answer"},
          {"session_id", session_id},
          {"question_index", question_index},
          {"choice", choice},
          {"timestamp_ms", record.timestamp_ms}});
  state.responses.push_back(record);
  ++s.cursor;
  return record;
}

SessionScore HumanEvalService::Score(const std::string& session_id) const {
  SessionState& state = Find(session_id);
  std::lock_guard lock(state.mutex);
  if (state.session.cursor < state.plan.size()) {
    throw IncompleteSession("session " + session_id + " answered " +
                            std::to_string(state.session.cursor) + " of " +
                            std::to_string(state.plan.size()));
  }
  const Dialogue& dialogue = *corpus_.FindDialogue(state.session.dialogue_id);
  SessionScore score;
  std::size_t correct = 0;
  for (const ResponseRecord& r : state.responses) {
    const PlannedItem& planned = state.plan[r.question_index];
    if (planned.attention_check) {
      ++score.attention_checks;
      if (r.choice != checks_[planned.index].answer_image_id) {
        score.attention_pass = false;
      }
    } else {
      ++score.n;
      if (r.choice == dialogue.mentions[planned.index].referent_image_ids[0]) {
        ++correct;
      }
    }
  }
  score.accuracy = score.n == 0 ? 0.0 : static_cast<double>(correct) / score.n;
  return score;
}

std::vector<SourceSummary> HumanEvalService::SummarizeBySource() const {
  std::vector<std::string> ids;
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [id, state] : sessions_) ids.push_back(id);
  }
  std::map<ReSource, SourceSummary> by_source;
  for (ReSource source :
       {ReSource::kGreedy, ReSource::kRerank, ReSource::kGroundTruth}) {
    by_source[source].source = source;
  }
  for (const std::string& id : ids) {
    SessionScore score;
    try {
      score = Score(id);
    } catch (const IncompleteSession&) {
      continue;
    }
    SourceSummary& summary = by_source[GetSession(id).re_source];
    ++summary.sessions;
    summary.mean_accuracy += score.accuracy;
    if (!score.attention_pass) ++summary.failed_attention;
  }
  std::vector<SourceSummary> out;
  for (auto& [source, summary] : by_source) {
    if (summary.sessions > 0) summary.mean_accuracy /= summary.sessions;
    out.push_back(summary);
  }
  return out;
}

std::vector<ResponseRecord> HumanEvalService::Responses(
    const std::string& session_id) const {
  SessionState& state = Find(session_id);
  std::lock_guard lock(state.mutex);
  return state.responses;
}

}  // namespace regrank
