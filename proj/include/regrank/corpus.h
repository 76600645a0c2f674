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

#ifndef REGRANK_CORPUS_H_
#define REGRANK_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace regrank {

inline constexpr std::size_t kImagesPerSet = 9;

struct ImageRef {
  std::string image_id;
  std::string set_id;
  std::string uri;
  // Hand-written description of the image, used as the reference label for
  // generated referent descriptions.
  std::optional<std::string> ground_truth_description;

  bool operator==(const ImageRef&) const = default;
};

struct ImageSet {
  std::string set_id;
  std::string category;
  std::vector<ImageRef> images;

  bool operator==(const ImageSet&) const = default;
};

enum class Speaker { kA, kB };

std::string SpeakerName(Speaker speaker);

struct Message {
  std::size_t index = 0;
  Speaker speaker = Speaker::kA;
  std::string text;
  int round = 1;

  bool operator==(const Message&) const = default;
};

// A span of a message that refers to one or more images. Offsets are in
// Unicode scalar values, end-exclusive.
struct Mention {
  std::string mention_id;
  std::string dialogue_id;
  std::size_t message_index = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::vector<std::string> referent_image_ids;
  std::string surface;

  bool operator==(const Mention&) const = default;
};

struct RankingEvent {
  std::size_t message_index = 0;
  std::string image_id;

  bool operator==(const RankingEvent&) const = default;
};

struct Dialogue {
  std::string dialogue_id;
  std::string set_id;
  std::string task_description;
  std::vector<Message> messages;
  std::vector<Mention> mentions;
  std::vector<RankingEvent> ranking_events;

  bool operator==(const Dialogue&) const = default;
};

struct Violation {
  std::string type;  // e.g. "ImageSet", "Mention"
  std::string id;
  std::string rule;

  std::string ToString() const { return type + " " + id + ": " + rule; }
  bool operator==(const Violation&) const = default;
};

// Image sets and dialogues, cross-indexed. Immutable once built.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<ImageSet> image_sets, std::vector<Dialogue> dialogues);

  const std::vector<ImageSet>& image_sets() const { return image_sets_; }
  const std::vector<Dialogue>& dialogues() const { return dialogues_; }

  // Return nullptr when the id is unknown.
  const ImageSet* FindSet(const std::string& set_id) const;
  const Dialogue* FindDialogue(const std::string& dialogue_id) const;
  const ImageRef* FindImage(const std::string& image_id) const;

  bool operator==(const Corpus& other) const {
    return image_sets_ == other.image_sets_ && dialogues_ == other.dialogues_;
  }

 private:
  std::vector<ImageSet> image_sets_;
  std::vector<Dialogue> dialogues_;
  std::map<std::string, std::size_t> set_index_;
  std::map<std::string, std::size_t> dialogue_index_;
  std::map<std::string, std::pair<std::size_t, std::size_t>> image_index_;
};

// Parses line-delimited JSON records. Throws
// CorpusError on malformed records, duplicate ids, dangling references, or
// any invariant violation.
Corpus LoadCorpus(const std::filesystem::path& path);
Corpus ParseCorpus(const std::string& jsonl);

// Same as ParseCorpus but stops after syntax, duplicate-id and reference
// checks; invariant violations are left for ValidateCorpus to report.
Corpus ParseCorpusUnchecked(const std::string& jsonl);

std::string SerializeCorpus(const Corpus& corpus);

std::vector<Violation> ValidateCorpus(const Corpus& corpus);

// Mentions with exactly one referent, ordered by (dialogue_id,
// message_index, char_start).
std::vector<Mention> SingleImageMentions(const Corpus& corpus);

}  // namespace regrank

#endif  // REGRANK_CORPUS_H_
