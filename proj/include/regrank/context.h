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

#ifndef REGRANK_CONTEXT_H_
#define REGRANK_CONTEXT_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "regrank/corpus.h"

namespace regrank {

inline constexpr std::size_t kDefaultWindowSize = 7;
inline constexpr std::string_view kReStartMarker = ">>";
inline constexpr std::string_view kReEndMarker = "<<";
inline constexpr std::string_view kTaskSpeakerPrefix = "M: ";

// Linguistic context for one mention: the task description, up to
// window_size messages before the mention's message, and the mention's own
// message cut at the start of the mention.
struct ContextWindow {
  std::string task_description;
  std::vector<Message> prior_messages;
  Speaker current_speaker = Speaker::kA;
  std::string current_prefix;

  bool operator==(const ContextWindow&) const = default;
};

// Images still unranked in the current round when the mention is produced.
struct VisualContextState {
  std::vector<std::string> candidate_image_ids;

  bool Contains(const std::string& image_id) const;
  std::size_t IndexOf(const std::string& image_id) const;
};

namespace segment {
struct Text {
  std::string value;
  bool operator==(const Text&) const = default;
};
struct ImageSlot {
  std::string image_id;
  bool operator==(const ImageSlot&) const = default;
};
struct ReStart {
  bool operator==(const ReStart&) const = default;
};
struct ReEnd {
  bool operator==(const ReEnd&) const = default;
};
}  // namespace segment

using PromptSegment = std::variant<segment::Text, segment::ImageSlot,
                                   segment::ReStart, segment::ReEnd>;

struct PromptSequence {
  std::vector<PromptSegment> segments;

  // Wire form: text as JSON strings, images as {"image": id}, markers as
  // {"marker": "re_start"} / {"marker": "re_end"}.
  nlohmann::json ToJson() const;
  static PromptSequence FromJson(const nlohmann::json& j);

  // Flat rendering with images shown as <image:ID>; used for logs and by the
  // mock backend.
  std::string Render() const;

  bool operator==(const PromptSequence&) const = default;
};

enum class ReCategory {
  kDefiniteDescription,
  kPronoun,
  kProformWithContent,
  kNoContentProform,
};

std::string ReCategoryName(ReCategory category);

struct IclExample {
  ReCategory category = ReCategory::kDefiniteDescription;
  ContextWindow segment;
  std::string referent_image_id;
  std::string re;
};

ContextWindow BuildWindow(const Dialogue& dialogue, const Mention& mention,
                          std::size_t window_size = kDefaultWindowSize);

// Throws EmptyVisualContext when every image of the set is already ranked.
VisualContextState VisualContextAt(const ImageSet& set, const Dialogue& dialogue,
                                   const Mention& mention);

// "M: task\nA: ...\nB: <current prefix>"
std::string RenderWindow(const ContextWindow& window);

PromptSequence AssembleGenerationPrompt(const ContextWindow& window,
                                        const std::string& referent_image_id);

// The rendered window with `candidate` spliced in at the generation point
// between the start and end markers. Nothing after the insertion point is
// included. Throws PreconditionError on an empty candidate.
std::string InsertCandidate(const ContextWindow& window,
                            const std::string& candidate);

// Text between the last ">> " and the following " <<", if both exist.
std::optional<std::string> ExtractCandidate(std::string_view segment);

// Number of balanced start/end marker pairs; -1 if unbalanced or nested.
int CountMarkerPairs(std::string_view text);

bool ContainsMarker(std::string_view text);

// n-shot prompt: n User/Assistant examples in category priority order
// (definite description, pronoun, proform with content, no-content proform,
// then again from the top) followed by the query as a User turn.
PromptSequence AssembleIclPrompt(std::size_t n,
                                 const std::vector<IclExample>& support_pool,
                                 const ContextWindow& window,
                                 const std::string& referent_image_id);

ReCategory ClassifyRe(std::string_view re);

// Support examples drawn from single-image mentions of the given dialogues,
// at most `per_category` per RE category, preferring mentions with a full
// window.
std::vector<IclExample> BuildSupportPool(
    const Corpus& corpus, const std::vector<std::string>& dialogue_ids,
    std::size_t per_category = 2, std::size_t window_size = kDefaultWindowSize);

}  // namespace regrank

#endif  // REGRANK_CONTEXT_H_
