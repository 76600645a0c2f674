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


#include "regrank/corpus.h"

#include <gtest/gtest.h>

#include <random>
#include <string>

#include "regrank/errors.h"
#include "regrank/synthetic.h"
#include "test_util.h"

namespace regrank {
namespace {

using testing::MakeMessages;
using testing::MakeSet;
using testing::MentionOf;

Corpus SmallCorpus() {
  Dialogue d{"d1", "dogs", "Rank the dogs.", {}, {}, {}};
  d.messages = MakeMessages({"hi", "the husky first", "ok placed it"});
  d.mentions.push_back(MentionOf(d, 1, "the husky", {"dogs-1"}, "m1"));
  d.ranking_events.push_back({2, "dogs-1"});
  return Corpus({MakeSet("dogs")}, {d});
}

TEST(Corpus, SerializeParseRoundTrip) {
  const Corpus c = SmallCorpus();
  EXPECT_EQ(ParseCorpus(SerializeCorpus(c)), c);
}

TEST(Corpus, RoundTripPropertyOverSyntheticCorpora) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SyntheticOptions o;
    o.seed = seed;
    o.sets = 1 + seed % 5;
    o.rounds = 1 + seed % 3;
    o.included_mentions = 5 * seed;
    o.stale_mentions = seed % 4;
    o.multi_image_mentions = seed % 3;
    const Corpus c = MakeSyntheticCorpus(o);
    const std::string text = SerializeCorpus(c);
    const Corpus back = ParseCorpus(text);
    EXPECT_EQ(back, c) << "seed " << seed;
    EXPECT_EQ(SerializeCorpus(back), text) << "seed " << seed;
    EXPECT_TRUE(ValidateCorpus(c).empty()) << "seed " << seed;
  }
}

TEST(Corpus, AgosShapedCorpusHasFifteenDialoguesAnd1319Mentions) {
  const Corpus c = MakeSyntheticCorpus(AgosShapedOptions());
  EXPECT_EQ(c.image_sets().size(), 5u);
  EXPECT_EQ(c.dialogues().size(), 15u);
  EXPECT_EQ(SingleImageMentions(c).size(), 1319u);
  EXPECT_TRUE(ValidateCorpus(c).empty());
}

TEST(Corpus, EmptyDialogueListIsValid) {
  const Corpus c = ParseCorpus(SerializeCorpus(Corpus({MakeSet("dogs")}, {})));
  EXPECT_EQ(c.image_sets().size(), 1u);
  EXPECT_TRUE(c.dialogues().empty());
}

TEST(Corpus, SpanPastMessageEndNamesTheMention) {
  Corpus c = SmallCorpus();
  std::string text = SerializeCorpus(c);
  const std::string from = "\"char_end\":9";
  ASSERT_NE(text.find(from), std::string::npos);
  text.replace(text.find(from), from.size(), "\"char_end\":40");
  try {
    ParseCorpus(text);
    FAIL() << "expected CorpusError";
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("m1"), std::string::npos) << e.what();
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Corpus, LoadErrors) {
  EXPECT_THROW(ParseCorpus("{not json}\n"), CorpusError);
  EXPECT_THROW(ParseCorpus("{\"kind\":\"widget\"}\n"), CorpusError);
  const std::string set = SerializeCorpus(Corpus({MakeSet("dogs")}, {}));
  EXPECT_THROW(ParseCorpus(set + set), CorpusError);  // duplicate set id
  EXPECT_THROW(LoadCorpus("/nonexistent/corpus.jsonl"), CorpusError);
  // Dialogue referring to an unknown set.
  const std::string dlg = SerializeCorpus(SmallCorpus());
  EXPECT_THROW(ParseCorpus(dlg.substr(dlg.find('\n') + 1)), CorpusError);
}

TEST(Corpus, ValidCorpusHasNoViolations) {
  EXPECT_TRUE(ValidateCorpus(SmallCorpus()).empty());
}

TEST(Corpus, EightImageSetViolatesNineImageRule) {
  const Corpus c({MakeSet("dogs", 8)}, {});
  const auto v = ValidateCorpus(c);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].id, "dogs");
  EXPECT_NE(v[0].rule.find("9 images"), std::string::npos);
}

TEST(Corpus, CrossSetReferenceIsOneViolation) {
  Dialogue d{"d1", "dogs", "Rank.", MakeMessages({"the cake"}), {}, {}};
  d.mentions.push_back(MentionOf(d, 0, "the cake", {"cakes-1"}, "m1"));
  const Corpus c({MakeSet("dogs"), MakeSet("cakes")}, {d});
  const auto v = ValidateCorpus(c);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].id, "m1");
  EXPECT_NE(v[0].rule.find("cross-reference"), std::string::npos);
  // The strict loader rejects the same corpus.
  EXPECT_THROW(ParseCorpus(SerializeCorpus(c)), CorpusError);
  EXPECT_EQ(ParseCorpusUnchecked(SerializeCorpus(c)), c);
}

TEST(Corpus, DoubleRankingAndOverlapAreViolations) {
  Dialogue d{"d1", "dogs", "Rank.", MakeMessages({"the white husky", "ok"}),
             {}, {}};
  d.mentions.push_back(MentionOf(d, 0, "the white husky", {"dogs-1"}, "m1"));
  d.mentions.push_back(MentionOf(d, 0, "white", {"dogs-2"}, "m2"));
  d.ranking_events = {{1, "dogs-1"}, {1, "dogs-1"}};
  const auto v = ValidateCorpus(Corpus({MakeSet("dogs")}, {d}));
  EXPECT_EQ(v.size(), 2u);
}

TEST(Corpus, SingleImageMentionsFilterAndOrder) {
  Dialogue d{"d1", "dogs", "Rank.",
             MakeMessages({"the husky and the poodle", "these two", "that one"}),
             {}, {}};
  // Inserted out of order on purpose.
  d.mentions.push_back(MentionOf(d, 2, "that one", {"dogs-3"}, "m4"));
  d.mentions.push_back(MentionOf(d, 0, "the poodle", {"dogs-2"}, "m2"));
  d.mentions.push_back(MentionOf(d, 1, "these two", {"dogs-1", "dogs-2"}, "m3"));
  d.mentions.push_back(MentionOf(d, 0, "the husky", {"dogs-1"}, "m1"));
  const auto single = SingleImageMentions(Corpus({MakeSet("dogs")}, {d}));
  ASSERT_EQ(single.size(), 3u);
  EXPECT_EQ(single[0].mention_id, "m1");
  EXPECT_EQ(single[1].mention_id, "m2");
  EXPECT_EQ(single[2].mention_id, "m4");

  Dialogue multi{"d2", "dogs", "Rank.", MakeMessages({"these two"}), {}, {}};
  multi.mentions.push_back(
      MentionOf(multi, 0, "these two", {"dogs-1", "dogs-2"}, "x"));
  EXPECT_TRUE(SingleImageMentions(Corpus({MakeSet("dogs")}, {multi})).empty());
}

TEST(Corpus, NonAsciiSpansUseCodePoints) {
  Dialogue d{"d1", "dogs", "Rank.", MakeMessages({"café: the husky"}), {}, {}};
  d.mentions.push_back({"m1", "d1", 0, 6, 15, {"dogs-1"}, "the husky"});
  const Corpus c({MakeSet("dogs")}, {d});
  EXPECT_TRUE(ValidateCorpus(c).empty());
  EXPECT_EQ(ParseCorpus(SerializeCorpus(c)), c);
}

TEST(Corpus, Lookups) {
  const Corpus c = SmallCorpus();
  ASSERT_NE(c.FindImage("dogs-3"), nullptr);
  EXPECT_EQ(c.FindImage("dogs-3")->set_id, "dogs");
  EXPECT_EQ(c.FindImage("cats-1"), nullptr);
  EXPECT_NE(c.FindDialogue("d1"), nullptr);
  EXPECT_EQ(c.FindSet("cats"), nullptr);
}

}  // namespace
}  // namespace regrank
