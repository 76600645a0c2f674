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

#ifndef REGRANK_HUMANEVAL_H_
#define REGRANK_HUMANEVAL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "regrank/corpus.h"
#include "regrank/harness.h"

namespace regrank {

// Task questions between consecutive attention checks.
inline constexpr std::size_t kAttentionCheckInterval = 25;

enum class ReSource { kGreedy, kRerank, kGroundTruth };

std::string ReSourceName(ReSource source);  // "greedy", "rerank", "ground_truth"
ReSource ParseReSource(const std::string& name);

// Corpus-supplied item with a known answer. One JSON object per line:
// {"check_id": ..., "prompt": ..., "image_ids": [...], "answer": ...}.
struct AttentionCheck {
  std::string check_id;
  std::string prompt;
  std::vector<std::string> image_ids;
  std::string answer_image_id;
};

std::vector<AttentionCheck> LoadAttentionChecks(
    const std::filesystem::path& path);

struct Session {
  std::string session_id;
  std::string participant_id;
  std::string dialogue_id;
  ReSource re_source = ReSource::kGroundTruth;
  std::uint64_t seed = 0;
  std::size_t cursor = 0;  // next question to answer
  std::size_t served = 0;  // questions handed out so far
  std::size_t total = 0;   // questions in the stream
  bool consent = false;

  nlohmann::json ToJson() const;
};

struct QuestionItem {
  std::size_t question_index = 0;
  bool is_attention_check = false;
  std::string task_description;
  // Full dialogue history up to the end of the current RE, one
  // "A: ..." / "B: ..." line per message. For attention checks: the check
  // prompt.
  std::string dialogue_prefix;
  // Code point offsets of the RE inside dialogue_prefix (end-exclusive).
  std::size_t re_start = 0;
  std::size_t re_end = 0;
  std::vector<std::string> grid;  // image ids in display order

  nlohmann::json ToJson() const;  // includes image URIs when known
};

struct ResponseRecord {
  std::string session_id;
  std::size_t question_index = 0;
  std::string choice;
  std::int64_t timestamp_ms = 0;
};

struct SessionScore {
  double accuracy = 0;
  std::size_t n = 0;  // task questions
  bool attention_pass = true;
  std::size_t attention_checks = 0;
};

struct SourceSummary {
  ReSource source = ReSource::kGroundTruth;
  std::size_t sessions = 0;  // completed
  double mean_accuracy = 0;  // mean over sessions
  std::size_t failed_attention = 0;
};

// Selected RE text per mention for one strategy of a run report; used to
// show generated REs in place of the human ones.
std::map<std::string, std::string> SelectedResFromReport(
    const RunReport& report, Strategy strategy);

// Sessions, question streams and responses for the human TIR study.
// Thread-safe: operations on one session are serialized, different sessions
// proceed independently. Every state change is appended to the log file
// (when one is given) before it is acknowledged; constructing the service on
// an existing log restores all sessions.
class HumanEvalService {
 public:
  using Clock = std::function<std::int64_t()>;

  HumanEvalService(const Corpus& corpus, std::vector<AttentionCheck> checks,
                   std::map<ReSource, std::map<std::string, std::string>>
                       generated_res = {},
                   std::filesystem::path log_path = {}, Clock clock = {});
  ~HumanEvalService();

  // Throws EligibilityViolation if the participant already has a session on
  // another dialogue of the same image set, PreconditionError for unknown
  // dialogues or a missing attention-check pool.
  Session CreateSession(const std::string& participant_id,
                        const std::string& dialogue_id, ReSource source,
                        std::uint64_t seed);
  Session GiveConsent(const std::string& session_id);
  Session GetSession(const std::string& session_id) const;

  // The unanswered item at the cursor (repeated until answered), or nullopt
  // once every item is answered. Throws ConsentRequired.
  std::optional<QuestionItem> NextQuestion(const std::string& session_id);

  // Throws DuplicateAnswer, OutOfOrder, InvalidChoice, SessionComplete or
  // ConsentRequired. Returns the stored record.
  ResponseRecord SubmitAnswer(const std::string& session_id,
                              std::size_t question_index,
                              const std::string& choice);

  // Throws IncompleteSession.
  SessionScore Score(const std::string& session_id) const;

  std::vector<SourceSummary> SummarizeBySource() const;

  std::vector<ResponseRecord> Responses(const std::string& session_id) const;

  const Corpus& corpus() const { return corpus_; }

 private:
  struct PlannedItem {
    bool attention_check = false;
    std::size_t index = 0;  // mention index in dialogue or check index
  };
  struct SessionState {
    Session session;
    std::vector<PlannedItem> plan;
    std::vector<ResponseRecord> responses;
    mutable std::mutex mutex;
  };

  std::vector<PlannedItem> PlanFor(const Dialogue& dialogue,
                                   ReSource source) const;
  QuestionItem BuildItem(const SessionState& state, std::size_t index) const;
  SessionState& Find(const std::string& session_id) const;
  Session CreateLocked(const std::string& session_id,
                       const std::string& participant_id,
                       const std::string& dialogue_id, ReSource source,
                       std::uint64_t seed);
  void Append(const nlohmann::json& event);
  void Replay(const std::filesystem::path& path);

  const Corpus& corpus_;
  std::vector<AttentionCheck> checks_;
  std::map<ReSource, std::map<std::string, std::string>> generated_res_;
  Clock clock_;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::unique_ptr<SessionState>> sessions_;
  std::size_t next_id_ = 1;

  std::mutex log_mutex_;
  std::ofstream log_;
  bool replaying_ = false;
};

// HTTP front end for HumanEvalService:
//   POST /session                 {participant_id, dialogue_id, re_source, seed}
//   POST /session/{id}/consent
//   GET  /session/{id}
//   GET  /session/{id}/next       item or {"done": true}
//   POST /session/{id}/answer     {question_index, choice}
//   GET  /session/{id}/score
//   GET  /summary
// Image files are served from `image_root` under /images/ when given.
class HumanEvalServer {
 public:
  HumanEvalServer(HumanEvalService& service,
                  std::filesystem::path image_root = {});
  ~HumanEvalServer();
  HumanEvalServer(const HumanEvalServer&) = delete;
  HumanEvalServer& operator=(const HumanEvalServer&) = delete;

  int Start(const std::string& host = "127.0.0.1", int port = 0);
  bool Listen(const std::string& host, int port);
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace regrank

#endif  // REGRANK_HUMANEVAL_H_
