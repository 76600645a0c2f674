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

#include "regrank/context.h"

#include <algorithm>
#include <array>
#include <map>
#include <set>

#include "regrank/errors.h"
#include "regrank/metrics.h"
#include "regrank/utf8.h"

namespace regrank {

using nlohmann::json;

bool VisualContextState::Contains(const std::string& image_id) const {
  return IndexOf(image_id) < candidate_image_ids.size();
}

std::size_t VisualContextState::IndexOf(const std::string& image_id) const {
  return static_cast<std::size_t>(
      std::find(candidate_image_ids.begin(), candidate_image_ids.end(),
                image_id) -
      candidate_image_ids.begin());
}

json PromptSequence::ToJson() const {
  json out = json::array();
  for (const PromptSegment& seg : segments) {
    std::visit(
        [&out](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, segment::Text>) {
            out.push_back(s.value);
          } else if constexpr (std::is_same_v<T, segment::ImageSlot>) {
            out.push_back({{"image", s.image_id}});
          } else if constexpr (std::is_same_v<T, segment::ReStart>) {
            out.push_back({{"marker", "re_start"}});
          } else {
            out.push_back({{"marker", "re_end"}});
          }
        },
        seg);
  }
  return out;
}

PromptSequence PromptSequence::FromJson(const json& j) {
  if (!j.is_array()) throw ProtocolError("prompt must be an array of segments");
  PromptSequence out;
  for (const json& item : j) {
    if (item.is_string()) {
      out.segments.emplace_back(segment::Text{item.get<std::string>()});
    } else if (item.is_object() && item.contains("image")) {
      out.segments.emplace_back(
          segment::ImageSlot{item["image"].get<std::string>()});
    } else if (item.is_object() && item.value("marker", "") == "re_start") {
      out.segments.emplace_back(segment::ReStart{});
    } else if (item.is_object() && item.value("marker", "") == "re_end") {
      out.segments.emplace_back(segment::ReEnd{});
    } else {
      throw ProtocolError("unrecognized prompt segment: " + item.dump());
    }
  }
  return out;
}

std::string PromptSequence::Render() const {
  std::string out;
  for (const PromptSegment& seg : segments) {
    std::visit(
        [&out](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, segment::Text>) {
            out += s.value;
          } else if constexpr (std::is_same_v<T, segment::ImageSlot>) {
            out += "<image:" + s.image_id + ">";
          } else if constexpr (std::is_same_v<T, segment::ReStart>) {
            out += " ";
            out += kReStartMarker;
            out += " ";
          } else {
            out += " ";
            out += kReEndMarker;
          }
        },
        seg);
  }
  return out;
}

std::string ReCategoryName(ReCategory category) {
  switch (category) {
    case ReCategory::kDefiniteDescription:
      return "definite_description";
    case ReCategory::kPronoun:
      return "pronoun";
    case ReCategory::kProformWithContent:
      return "proform_with_content";
    case ReCategory::kNoContentProform:
      return "no_content_proform";
  }
  return "unknown";
}

ContextWindow BuildWindow(const Dialogue& dialogue, const Mention& mention,
                          std::size_t window_size) {
  if (mention.message_index >= dialogue.messages.size()) {
    throw PreconditionError("mention " + mention.mention_id +
                            " does not belong to dialogue " +
                            dialogue.dialogue_id);
  }
  ContextWindow window;
  window.task_description = dialogue.task_description;
  const std::size_t first =
      mention.message_index > window_size ? mention.message_index - window_size
                                          : 0;
  window.prior_messages.assign(
      dialogue.messages.begin() + static_cast<std::ptrdiff_t>(first),
      dialogue.messages.begin() +
          static_cast<std::ptrdiff_t>(mention.message_index));
  const Message& current = dialogue.messages[mention.message_index];
  window.current_speaker = current.speaker;
  window.current_prefix = utf8::Slice(current.text, 0, mention.char_start);
  return window;
}

VisualContextState VisualContextAt(const ImageSet& set, const Dialogue& dialogue,
                                   const Mention& mention) {
  if (mention.message_index >= dialogue.messages.size()) {
    throw PreconditionError("mention " + mention.mention_id +
                            " does not belong to dialogue " +
                            dialogue.dialogue_id);
  }
  const int round = dialogue.messages[mention.message_index].round;
  std::set<std::string> ranked;
  for (const RankingEvent& e : dialogue.ranking_events) {
    if (e.message_index < mention.message_index &&
        dialogue.messages[e.message_index].round == round) {
      ranked.insert(e.image_id);
    }
  }
  VisualContextState state;
  for (const ImageRef& img : set.images) {
    if (!ranked.count(img.image_id)) {
      state.candidate_image_ids.push_back(img.image_id);
    }
  }
  if (state.candidate_image_ids.empty()) {
    throw EmptyVisualContext("all images ranked before mention " +
                             mention.mention_id);
  }
  return state;
}

std::string RenderWindow(const ContextWindow& window) {
  std::string out(kTaskSpeakerPrefix);
  out += window.task_description;
  for (const Message& m : window.prior_messages) {
    out += "\n" + SpeakerName(m.speaker) + ": " + m.text;
  }
  out += "\n" + SpeakerName(window.current_speaker) + ": " +
         window.current_prefix;
  return out;
}

PromptSequence AssembleGenerationPrompt(const ContextWindow& window,
                                        const std::string& referent_image_id) {
  PromptSequence prompt;
  prompt.segments.emplace_back(segment::Text{RenderWindow(window)});
  prompt.segments.emplace_back(segment::ImageSlot{referent_image_id});
  prompt.segments.emplace_back(segment::ReStart{});
  return prompt;
}

std::string InsertCandidate(const ContextWindow& window,
                            const std::string& candidate) {
  if (candidate.empty()) {
    throw PreconditionError("cannot insert an empty candidate");
  }
  std::string out = RenderWindow(window);
  out += kReStartMarker;
  out += " " + candidate + " ";
  out += kReEndMarker;
  return out;
}

std::optional<std::string> ExtractCandidate(std::string_view segment) {
  const std::string open = std::string(kReStartMarker) + " ";
  const std::string close = " " + std::string(kReEndMarker);
  const std::size_t start = segment.rfind(open);
  if (start == std::string_view::npos) return std::nullopt;
  const std::size_t begin = start + open.size();
  const std::size_t end = segment.find(close, begin);
  if (end == std::string_view::npos) return std::nullopt;
  return std::string(segment.substr(begin, end - begin));
}

int CountMarkerPairs(std::string_view text) {
  int depth = 0;
  int pairs = 0;
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    const std::string_view two = text.substr(i, 2);
    if (two == kReStartMarker) {
      if (++depth > 1) return -1;
      ++i;
    } else if (two == kReEndMarker) {
      if (--depth < 0) return -1;
      ++pairs;
      ++i;
    }
  }
  return depth == 0 ? pairs : -1;
}

bool ContainsMarker(std::string_view text) {
  return text.find(kReStartMarker) != std::string_view::npos ||
         text.find(kReEndMarker) != std::string_view::npos;
}

namespace {

constexpr std::array<ReCategory, 4> kPriority = {
    ReCategory::kDefiniteDescription, ReCategory::kPronoun,
    ReCategory::kProformWithContent, ReCategory::kNoContentProform};

void AppendUserTurn(PromptSequence& prompt, const ContextWindow& window,
                    const std::string& referent_image_id) {
  prompt.segments.emplace_back(segment::Text{"User: " + RenderWindow(window)});
  prompt.segments.emplace_back(segment::ImageSlot{referent_image_id});
  prompt.segments.emplace_back(segment::ReStart{});
}

}  // namespace

PromptSequence AssembleIclPrompt(std::size_t n,
                                 const std::vector<IclExample>& support_pool,
                                 const ContextWindow& window,
                                 const std::string& referent_image_id) {
  if (n < 1 || n > 8) {
    throw PreconditionError("shots must be in 1..8, got " + std::to_string(n));
  }
  PromptSequence prompt;
  for (std::size_t i = 0; i < n; ++i) {
    const ReCategory wanted = kPriority[i % kPriority.size()];
    const std::size_t occurrence = i / kPriority.size();
    std::size_t seen = 0;
    const IclExample* chosen = nullptr;
    for (const IclExample& ex : support_pool) {
      if (ex.category != wanted) continue;
      if (seen++ == occurrence) {
        chosen = &ex;
        break;
      }
    }
    if (chosen == nullptr) {
      throw InsufficientSupport("support pool lacks example " +
                                std::to_string(occurrence + 1) + " of " +
                                ReCategoryName(wanted));
    }
    AppendUserTurn(prompt, chosen->segment, chosen->referent_image_id);
    prompt.segments.emplace_back(
        segment::Text{"\nAssistant: " + chosen->re + "\n"});
  }
  AppendUserTurn(prompt, window, referent_image_id);
  prompt.segments.emplace_back(segment::Text{"\nAssistant:"});
  return prompt;
}

ReCategory ClassifyRe(std::string_view re) {
  static const std::set<std::string> kPronouns = {
      "it",  "its",  "itself", "they", "them", "this", "that",
      "these", "those", "he", "him", "his", "she", "her"};
  static const std::set<std::string> kProforms = {"one", "ones"};
  static const std::set<std::string> kFunctionWords = {
      "the",   "a",       "an",   "that", "this", "these", "those",
      "one",   "ones",    "other", "another", "same", "which", "each",
      "either", "neither", "first", "last", "next", "previous"};

  const std::vector<std::string> tokens = Tokenize(re).tokens;
  if (tokens.empty()) return ReCategory::kNoContentProform;
  const bool all_pronouns = std::all_of(
      tokens.begin(), tokens.end(),
      [](const std::string& t) { return kPronouns.count(t) > 0; });
  if (all_pronouns) return ReCategory::kPronoun;
  const bool has_proform = std::any_of(
      tokens.begin(), tokens.end(),
      [](const std::string& t) { return kProforms.count(t) > 0; });
  const bool has_content = std::any_of(
      tokens.begin(), tokens.end(),
      [](const std::string& t) { return kFunctionWords.count(t) == 0; });
  if (!has_content) return ReCategory::kNoContentProform;
  if (has_proform) return ReCategory::kProformWithContent;
  return ReCategory::kDefiniteDescription;
}

std::vector<IclExample> BuildSupportPool(
    const Corpus& corpus, const std::vector<std::string>& dialogue_ids,
    std::size_t per_category, std::size_t window_size) {
  // Full-window candidates first, then the rest, each in corpus order.
  std::map<ReCategory, std::vector<IclExample>> full, partial;
  for (const std::string& id : dialogue_ids) {
    const Dialogue* d = corpus.FindDialogue(id);
    if (d == nullptr) throw PreconditionError("unknown dialogue " + id);
    for (const Mention& m : d->mentions) {
      if (m.referent_image_ids.size() != 1) continue;
      IclExample ex;
      ex.category = ClassifyRe(m.surface);
      ex.segment = BuildWindow(*d, m, window_size);
      ex.referent_image_id = m.referent_image_ids.front();
      ex.re = m.surface;
      auto& bucket = m.message_index >= window_size ? full : partial;
      bucket[ex.category].push_back(std::move(ex));
    }
  }
  std::vector<IclExample> pool;
  for (ReCategory category : kPriority) {
    std::size_t taken = 0;
    for (auto* source : {&full, &partial}) {
      for (IclExample& ex : (*source)[category]) {
        if (taken == per_category) break;
        pool.push_back(std::move(ex));
        ++taken;
      }
    }
  }
  return pool;
}

}  // namespace regrank
