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

#include <gtest/gtest.h>

#include <random>
#include <string>
#include <variant>

#include "regrank/errors.h"
#include "regrank/synthetic.h"
#include "test_util.h"

namespace regrank {
namespace {

using testing::MakeMessages;
using testing::MakeSet;
using testing::MentionOf;

constexpr char kDogTask[] =
    "Your neighbour's cat frequently uses your garden as its own personal "
    "bathroom. You decide to adopt a dog to deal with this issue. Which of "
    "these dogs would be most effective in scaring off the neighbour's cat "
    "and why?";

Dialogue Numbered(std::size_t n) {
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < n; ++i) texts.push_back("msg " + std::to_string(i));
  return {"d1", "dogs", "task", MakeMessages(texts), {}, {}};
}

TEST(BuildWindow, MessageTenKeepsMessagesThreeToNine) {
  Dialogue d = Numbered(12);
  const Mention m = MentionOf(d, 10, "10", {"dogs-1"}, "m");
  const ContextWindow w = BuildWindow(d, m);
  ASSERT_EQ(w.prior_messages.size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(w.prior_messages[i].index, 3 + i);
  }
  EXPECT_EQ(w.current_prefix, "msg ");
  EXPECT_EQ(w.current_speaker, Speaker::kA);
  EXPECT_EQ(w.task_description, "task");
}

TEST(BuildWindow, FirstMessageHasNoHistory) {
  Dialogue d = Numbered(3);
  const ContextWindow w = BuildWindow(d, MentionOf(d, 0, "msg", {"dogs-1"}, "m"));
  EXPECT_TRUE(w.prior_messages.empty());
  EXPECT_EQ(w.current_prefix, "");
}

TEST(BuildWindow, MentionAtStartOfMessageFour) {
  Dialogue d = Numbered(6);
  const ContextWindow w = BuildWindow(d, MentionOf(d, 4, "msg", {"dogs-1"}, "m"));
  ASSERT_EQ(w.prior_messages.size(), 4u);
  EXPECT_EQ(w.prior_messages.front().index, 0u);
  EXPECT_EQ(w.prior_messages.back().index, 3u);
  EXPECT_EQ(w.current_prefix, "");
}

TEST(BuildWindow, NeverExceedsWindowOverSyntheticCorpus) {
  const Corpus c = MakeSyntheticCorpus(AgosShapedOptions());
  for (const Dialogue& d : c.dialogues()) {
    for (const Mention& m : d.mentions) {
      const ContextWindow w = BuildWindow(d, m);
      ASSERT_LE(w.prior_messages.size(), kDefaultWindowSize);
      ASSERT_EQ(w.prior_messages.size(),
                std::min<std::size_t>(kDefaultWindowSize, m.message_index));
      for (std::size_t i = 0; i < w.prior_messages.size(); ++i) {
        ASSERT_EQ(w.prior_messages[i].index,
                  m.message_index - w.prior_messages.size() + i);
      }
      ASSERT_EQ(w, BuildWindow(d, m));  // pure
    }
  }
}

TEST(BuildWindow, CustomWindowSize) {
  Dialogue d = Numbered(12);
  const Mention m = MentionOf(d, 10, "msg", {"dogs-1"}, "m");
  EXPECT_EQ(BuildWindow(d, m, 2).prior_messages.size(), 2u);
  EXPECT_EQ(BuildWindow(d, m, 0).prior_messages.size(), 0u);
}

TEST(VisualContext, RoundStartHasAllNine) {
  Dialogue d = Numbered(3);
  const auto s = VisualContextAt(MakeSet("dogs"), d,
                                 MentionOf(d, 1, "msg", {"dogs-1"}, "m"));
  EXPECT_EQ(s.candidate_image_ids.size(), 9u);
}

TEST(VisualContext, EightEventsLeaveOneImage) {
  Dialogue d = Numbered(10);
  for (std::size_t i = 1; i <= 8; ++i) {
    d.ranking_events.push_back({i - 1, "dogs-" + std::to_string(i)});
  }
  const auto s = VisualContextAt(MakeSet("dogs"), d,
                                 MentionOf(d, 9, "msg", {"dogs-9"}, "m"));
  ASSERT_EQ(s.candidate_image_ids.size(), 1u);
  EXPECT_EQ(s.candidate_image_ids[0], "dogs-9");
}

TEST(VisualContext, EventAtSameMessageDoesNotCount) {
  Dialogue d = Numbered(4);
  d.ranking_events = {{1, "dogs-1"}, {2, "dogs-2"}};
  const auto s = VisualContextAt(MakeSet("dogs"), d,
                                 MentionOf(d, 2, "msg", {"dogs-2"}, "m"));
  EXPECT_FALSE(s.Contains("dogs-1"));
  EXPECT_TRUE(s.Contains("dogs-2"));
  EXPECT_EQ(s.candidate_image_ids.size(), 8u);
}

TEST(VisualContext, RankedTargetIsExcluded) {
  Dialogue d = Numbered(4);
  d.ranking_events = {{0, "dogs-5"}};
  const auto s = VisualContextAt(MakeSet("dogs"), d,
                                 MentionOf(d, 3, "msg", {"dogs-5"}, "m"));
  EXPECT_FALSE(s.Contains("dogs-5"));
  EXPECT_EQ(s.IndexOf("dogs-5"), s.candidate_image_ids.size());
}

TEST(VisualContext, NewRoundResetsContext) {
  Dialogue d = Numbered(4);
  d.messages[2].round = 2;
  d.messages[3].round = 2;
  d.ranking_events = {{0, "dogs-1"}, {1, "dogs-2"}, {2, "dogs-3"}};
  const auto s = VisualContextAt(MakeSet("dogs"), d,
                                 MentionOf(d, 3, "msg", {"dogs-1"}, "m"));
  EXPECT_EQ(s.candidate_image_ids.size(), 8u);
  EXPECT_TRUE(s.Contains("dogs-1"));
  EXPECT_FALSE(s.Contains("dogs-3"));
}

TEST(VisualContext, AllRankedThrows) {
  Dialogue d = Numbered(11);
  for (std::size_t i = 1; i <= 9; ++i) {
    d.ranking_events.push_back({i - 1, "dogs-" + std::to_string(i)});
  }
  EXPECT_THROW(VisualContextAt(MakeSet("dogs"), d,
                               MentionOf(d, 10, "msg", {"dogs-1"}, "m")),
               EmptyVisualContext);
}

TEST(VisualContext, MonotoneOverRound) {
  const Corpus c = MakeSyntheticCorpus(AgosShapedOptions());
  for (const Dialogue& d : c.dialogues()) {
    const ImageSet& set = *c.FindSet(d.set_id);
    std::size_t last = 10;
    int round = 0;
    for (const Mention& m : SingleImageMentions(Corpus({set}, {d}))) {
      const int r = d.messages[m.message_index].round;
      if (r != round) {
        round = r;
        last = 10;
      }
      const std::size_t size = VisualContextAt(set, d, m).candidate_image_ids.size();
      ASSERT_LE(size, last);
      ASSERT_GE(size, 1u);
      last = size;
    }
  }
}

Dialogue HuskyDialogue() {
  Dialogue d{"d1", "dogs", kDogTask,
             MakeMessages({"yeah lets go for chow", "And then the husky"}), {},
             {}};
  d.mentions.push_back(MentionOf(d, 1, "the husky", {"dogs-1"}, "m1"));
  return d;
}

TEST(GenerationPrompt, HuskySample) {
  const Dialogue d = HuskyDialogue();
  const ContextWindow w = BuildWindow(d, d.mentions[0]);
  const PromptSequence p = AssembleGenerationPrompt(w, "dogs-1");
  ASSERT_EQ(p.segments.size(), 3u);
  EXPECT_EQ(std::get<segment::Text>(p.segments[0]).value,
            std::string("M: ") + kDogTask +
                "\nA: yeah lets go for chow\nB: And then ");
  EXPECT_EQ(std::get<segment::ImageSlot>(p.segments[1]).image_id, "dogs-1");
  EXPECT_TRUE(std::holds_alternative<segment::ReStart>(p.segments[2]));

  const nlohmann::json wire = p.ToJson();
  EXPECT_EQ(wire[1], nlohmann::json({{"image", "dogs-1"}}));
  EXPECT_EQ(wire[2], nlohmann::json({{"marker", "re_start"}}));
  EXPECT_EQ(PromptSequence::FromJson(wire), p);
  EXPECT_EQ(p.ToJson().dump(), wire.dump());
}

TEST(GenerationPrompt, EmptyHistory) {
  const ContextWindow w{"task", {}, Speaker::kA, "so "};
  const PromptSequence p = AssembleGenerationPrompt(w, "x");
  EXPECT_EQ(std::get<segment::Text>(p.segments[0]).value, "M: task\nA: so ");
}

TEST(GenerationPrompt, SlotImmediatelyBeforeSingleMarker) {
  const Corpus c = MakeSyntheticCorpus(SyntheticOptions{});
  for (const Dialogue& d : c.dialogues()) {
    for (const Mention& m : d.mentions) {
      const PromptSequence p = AssembleGenerationPrompt(
          BuildWindow(d, m), m.referent_image_ids[0]);
      std::size_t slots = 0, starts = 0, slot_at = 0, start_at = 0;
      for (std::size_t i = 0; i < p.segments.size(); ++i) {
        if (std::holds_alternative<segment::ImageSlot>(p.segments[i])) {
          ++slots;
          slot_at = i;
        }
        if (std::holds_alternative<segment::ReStart>(p.segments[i])) {
          ++starts;
          start_at = i;
        }
      }
      ASSERT_EQ(slots, 1u);
      ASSERT_EQ(starts, 1u);
      ASSERT_EQ(slot_at + 1, start_at);
    }
  }
}

TEST(InsertCandidate, HuskyIsIt) {
  Dialogue d{"d1", "dogs", "task", MakeMessages({"Husky is it right?"}), {}, {}};
  const Mention m = MentionOf(d, 0, "it", {"dogs-1"}, "m");
  const std::string s = InsertCandidate(BuildWindow(d, m), "it");
  EXPECT_TRUE(s.ends_with("A: Husky is >> it <<")) << s;
  EXPECT_EQ(s.find("right?"), std::string::npos);
  EXPECT_EQ(CountMarkerPairs(s), 1);
}

TEST(InsertCandidate, EmptyPrefixAppendsAfterContext) {
  const ContextWindow w{"task", {}, Speaker::kB, ""};
  EXPECT_EQ(InsertCandidate(w, "the husky"), "M: task\nB: >> the husky <<");
  EXPECT_THROW(InsertCandidate(w, ""), PreconditionError);
}

TEST(InsertCandidate, ExtractInvertsInsert) {
  std::mt19937_64 rng(7);
  const std::string alphabet = "abcdefgh XYZ.,'!?-é";
  const ContextWindow w{"task", {}, Speaker::kA, "I pick "};
  for (int trial = 0; trial < 500; ++trial) {
    std::string c;
    const std::size_t len = 1 + rng() % 20;
    for (std::size_t i = 0; i < len; ++i) c += alphabet[rng() % alphabet.size()];
    if (ContainsMarker(c)) continue;
    ASSERT_EQ(ExtractCandidate(InsertCandidate(w, c)), c) << c;
  }
  EXPECT_EQ(ExtractCandidate("no markers"), std::nullopt);
}

TEST(Markers, CountPairs) {
  EXPECT_EQ(CountMarkerPairs("a >> b << c"), 1);
  EXPECT_EQ(CountMarkerPairs(">> a << >> b <<"), 2);
  EXPECT_EQ(CountMarkerPairs("plain"), 0);
  EXPECT_EQ(CountMarkerPairs(">> a"), -1);
  EXPECT_EQ(CountMarkerPairs(">> >> a << <<"), -1);
  EXPECT_EQ(CountMarkerPairs("a << b"), -1);
}

TEST(ClassifyRe, FourCategories) {
  EXPECT_EQ(ClassifyRe("the white husky"), ReCategory::kDefiniteDescription);
  EXPECT_EQ(ClassifyRe("a big cake"), ReCategory::kDefiniteDescription);
  EXPECT_EQ(ClassifyRe("it"), ReCategory::kPronoun);
  EXPECT_EQ(ClassifyRe("that"), ReCategory::kPronoun);
  EXPECT_EQ(ClassifyRe("the black one"), ReCategory::kProformWithContent);
  EXPECT_EQ(ClassifyRe("that one"), ReCategory::kNoContentProform);
  EXPECT_EQ(ClassifyRe("the other one"), ReCategory::kNoContentProform);
}

std::vector<IclExample> FullPool() {
  std::vector<IclExample> pool;
  const std::vector<std::pair<ReCategory, std::string>> items = {
      {ReCategory::kNoContentProform, "that one"},
      {ReCategory::kPronoun, "it"},
      {ReCategory::kDefiniteDescription, "the husky"},
      {ReCategory::kProformWithContent, "the black one"},
      {ReCategory::kDefiniteDescription, "the poodle"},
      {ReCategory::kPronoun, "this"},
      {ReCategory::kProformWithContent, "the white one"},
      {ReCategory::kNoContentProform, "the other one"}};
  for (const auto& [cat, re] : items) {
    pool.push_back({cat, {"task", {}, Speaker::kA, "pick "}, "dogs-1", re});
  }
  return pool;
}

std::vector<std::string> AssistantTurns(const PromptSequence& p) {
  std::vector<std::string> out;
  for (const auto& s : p.segments) {
    if (const auto* t = std::get_if<segment::Text>(&s)) {
      if (t->value.starts_with("\nAssistant: ")) {
        out.push_back(t->value.substr(12, t->value.size() - 13));
      }
    }
  }
  return out;
}

TEST(IclPrompt, PriorityOrder) {
  const ContextWindow query{"task", {}, Speaker::kB, "and "};
  const auto pool = FullPool();
  EXPECT_EQ(AssistantTurns(AssembleIclPrompt(1, pool, query, "dogs-2")),
            std::vector<std::string>({"the husky"}));
  EXPECT_EQ(AssistantTurns(AssembleIclPrompt(2, pool, query, "dogs-2")),
            std::vector<std::string>({"the husky", "it"}));
  EXPECT_EQ(AssistantTurns(AssembleIclPrompt(4, pool, query, "dogs-2")),
            std::vector<std::string>(
                {"the husky", "it", "the black one", "that one"}));
  EXPECT_EQ(AssistantTurns(AssembleIclPrompt(8, pool, query, "dogs-2")),
            std::vector<std::string>({"the husky", "it", "the black one",
                                      "that one", "the poodle", "this",
                                      "the white one", "the other one"}));
}

TEST(IclPrompt, QueryIsFinalUserTurn) {
  const ContextWindow query{"task", {}, Speaker::kB, "and "};
  const PromptSequence p = AssembleIclPrompt(1, FullPool(), query, "dogs-2");
  // example: user text, image, marker, assistant; query: user text, image,
  // marker, open assistant turn.
  ASSERT_EQ(p.segments.size(), 8u);
  EXPECT_EQ(std::get<segment::Text>(p.segments[4]).value,
            "User: M: task\nB: and ");
  EXPECT_EQ(std::get<segment::ImageSlot>(p.segments[5]).image_id, "dogs-2");
  EXPECT_EQ(std::get<segment::Text>(p.segments[7]).value, "\nAssistant:");
}

TEST(IclPrompt, InsufficientSupport) {
  const ContextWindow query{"task", {}, Speaker::kB, "and "};
  std::vector<IclExample> pool = FullPool();
  pool.erase(pool.begin() + 1);  // first pronoun
  EXPECT_NO_THROW(AssembleIclPrompt(1, pool, query, "x"));
  EXPECT_NO_THROW(AssembleIclPrompt(2, pool, query, "x"));  // second pronoun
  EXPECT_THROW(AssembleIclPrompt(6, pool, query, "x"), InsufficientSupport);
  EXPECT_THROW(AssembleIclPrompt(0, pool, query, "x"), PreconditionError);
  EXPECT_THROW(AssembleIclPrompt(9, pool, query, "x"), PreconditionError);
}

TEST(IclPrompt, SupportPoolFromCorpus) {
  SyntheticOptions o;
  o.included_mentions = 200;
  const Corpus c = MakeSyntheticCorpus(o);
  std::vector<std::string> ids;
  for (const Dialogue& d : c.dialogues()) ids.push_back(d.dialogue_id);
  const auto pool = BuildSupportPool(c, ids);
  std::map<ReCategory, int> counts;
  for (const IclExample& ex : pool) {
    EXPECT_EQ(ClassifyRe(ex.re), ex.category);
    ++counts[ex.category];
  }
  for (const auto& [cat, n] : counts) EXPECT_LE(n, 2) << ReCategoryName(cat);
  EXPECT_GE(counts[ReCategory::kDefiniteDescription], 1);
}

}  // namespace
}  // namespace regrank
