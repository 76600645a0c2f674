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


#include "regrank/backends.h"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>

#include "regrank/context.h"
#include "regrank/errors.h"
#include "regrank/mock_model.h"
#include "regrank/synthetic.h"
#include "test_util.h"

namespace regrank {
namespace {

using nlohmann::json;

// Answers /generate with a fixed candidate list and echoes everything else.
std::shared_ptr<Transport> ScriptedGenerator(json candidates) {
  return std::make_shared<FunctionTransport>(
      [candidates](const std::string& path, const json&) -> json {
        EXPECT_EQ(path, kGeneratePath);
        return {{"candidates", candidates}};
      });
}

ModelClient GeneratorOnly(json candidates) {
  auto g = ScriptedGenerator(std::move(candidates));
  return ModelClient(g, g, g);
}

const PromptSequence kPrompt{{segment::Text{"M: t\nA: "},
                              segment::ImageSlot{"dogs-1"}, segment::ReStart{}}};

TEST(Sanitize, StripsResidue) {
  EXPECT_EQ(SanitizeCandidate("the husky"), "the husky");
  EXPECT_EQ(SanitizeCandidate(" the husky << right?"), "the husky");
  EXPECT_EQ(SanitizeCandidate("the husky </s>"), "the husky");
  EXPECT_EQ(SanitizeCandidate(">> the husky"), "the husky");
  EXPECT_EQ(SanitizeCandidate("  "), std::nullopt);
  EXPECT_EQ(SanitizeCandidate("<<"), std::nullopt);
  EXPECT_EQ(SanitizeCandidate("a >> b"), std::nullopt);
}

TEST(Generate, DedupKeepsSmallestBeamRank) {
  const ModelClient client = GeneratorOnly(json::array(
      {{{"text", "it"}, {"score", -0.5}},
       {{"text", "the husky"}, {"score", -0.9}},
       {{"text", "it"}, {"score", -1.2}},
       {{"text", "that one <<"}, {"score", -2.0}}}));
  const CandidateSet set = client.GenerateCandidates(kPrompt, Decoding::Beam(6));
  ASSERT_EQ(set.candidates.size(), 3u);
  EXPECT_EQ(set.candidates[0], (Candidate{"it", -0.5, 0}));
  EXPECT_EQ(set.candidates[1], (Candidate{"the husky", -0.9, 1}));
  EXPECT_EQ(set.candidates[2], (Candidate{"that one", -2.0, 3}));
}

TEST(Generate, TruncatesToWidth) {
  const ModelClient client = GeneratorOnly(json::array(
      {{{"text", "a"}, {"score", -1}}, {{"text", "b"}, {"score", -2}}}));
  EXPECT_EQ(client.GenerateCandidates(kPrompt, Decoding::Greedy())
                .candidates.size(),
            1u);
}

TEST(Generate, RejectsIncreasingScores) {
  const ModelClient client = GeneratorOnly(json::array(
      {{{"text", "a"}, {"score", -2}}, {{"text", "b"}, {"score", -1}}}));
  EXPECT_THROW(client.GenerateCandidates(kPrompt, Decoding::Beam(2)),
               ProtocolError);
}

TEST(Generate, NothingUsableThrows) {
  const ModelClient client = GeneratorOnly(
      json::array({{{"text", " << "}, {"score", -1}}}));
  EXPECT_THROW(client.GenerateCandidates(kPrompt, Decoding::Beam(2)),
               EmptyGeneration);
  const ModelClient bad = GeneratorOnly(json("nope"));
  EXPECT_THROW(bad.GenerateCandidates(kPrompt, Decoding::Beam(2)),
               ProtocolError);
}

TEST(Generate, RequestCarriesProtocolAndPrompt) {
  json seen;
  auto t = std::make_shared<FunctionTransport>(
      [&seen](const std::string&, const json& request) -> json {
        seen = request;
        return {{"candidates", {{{"text", "x"}, {"score", 0}}}}};
      });
  ModelClient(t, t, t).GenerateCandidates(kPrompt, Decoding::Beam(6));
  EXPECT_EQ(seen["protocol"], 1);
  EXPECT_EQ(seen["prompt"], kPrompt.ToJson());
  EXPECT_EQ(seen["decoding"], json({{"mode", "beam"}, {"width", 6}}));
}

class MockBackend : public ::testing::Test {
 protected:
  Corpus corpus_ = MakeSyntheticCorpus(SyntheticOptions{});
  ModelClient client_ = testing::MockClient(corpus_);
};

TEST_F(MockBackend, BeamCandidatesAreUniqueAndOrdered) {
  const Dialogue& d = corpus_.dialogues()[0];
  for (const Mention& m : d.mentions) {
    const auto prompt =
        AssembleGenerationPrompt(BuildWindow(d, m), m.referent_image_ids[0]);
    const CandidateSet set = client_.GenerateCandidates(prompt, Decoding::Beam(6));
    ASSERT_LE(set.candidates.size(), 6u);
    std::set<std::string> texts;
    for (std::size_t i = 0; i < set.candidates.size(); ++i) {
      ASSERT_TRUE(texts.insert(set.candidates[i].text).second);
      if (i > 0) {
        ASSERT_LE(set.candidates[i].score, set.candidates[i - 1].score);
        ASSERT_GT(set.candidates[i].beam_rank, set.candidates[i - 1].beam_rank);
      }
    }
    ASSERT_EQ(client_.GenerateCandidates(prompt, Decoding::Greedy())
                  .candidates.size(),
              1u);
  }
}

TEST_F(MockBackend, DescriptionResolvesProformFromHistory) {
  const std::string segment =
      "M: pick a phone\nA: i like the nokia\nB: >> the black one <<";
  EXPECT_EQ(client_.DescribeReferent(segment).text, "the black nokia");
  EXPECT_THROW(client_.DescribeReferent("no markers"), PreconditionError);
  EXPECT_THROW(client_.DescribeReferent(">> a << >> b <<"), PreconditionError);
}

TEST(Describe, ScriptedAndBlank) {
  std::string reply = "the black nokia";
  auto t = std::make_shared<FunctionTransport>(
      [&reply](const std::string&, const json& request) -> json {
        EXPECT_EQ(request["protocol"], 1);
        return {{"description", reply}};
      });
  const ModelClient client(t, t, t);
  EXPECT_EQ(client.DescribeReferent("A: >> x <<", 3).text, "the black nokia");
  EXPECT_EQ(client.DescribeReferent("A: >> x <<", 3).beam_rank, 3u);
  reply = "   ";
  EXPECT_THROW(client.DescribeReferent("A: >> x <<"), EmptyDescription);
}

TEST_F(MockBackend, EmbeddingsAreUnitAndDeterministic) {
  const auto a = client_.EmbedTexts({"the white husky", "the white husky", "x"});
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0].values, a[1].values);
  double norm = 0;
  for (double v : a[2].values) norm += v * v;
  EXPECT_NEAR(norm, 1.0, 1e-12);

  std::vector<std::string> ids;
  for (const ImageRef& img : corpus_.image_sets()[0].images) ids.push_back(img.image_id);
  EXPECT_EQ(client_.EmbedImages(ids).size(), 9u);
}

TEST(Embed, DimensionMismatch) {
  std::size_t dim = 3;
  auto t = std::make_shared<FunctionTransport>(
      [&dim](const std::string&, const json& request) -> json {
        json vectors = json::array();
        for (std::size_t i = 0; i < request["texts"].size(); ++i) {
          vectors.push_back(std::vector<double>(dim, 1.0));
        }
        return {{"vectors", vectors}};
      });
  const ModelClient client(t, t, t);
  EXPECT_EQ(client.EmbedTexts({"a"})[0].values.size(), 3u);
  dim = 4;
  EXPECT_THROW(client.EmbedTexts({"a"}), DimensionMismatch);
}

TEST(Embed, RaggedBatchMismatch) {
  auto t = std::make_shared<FunctionTransport>(
      [](const std::string&, const json&) -> json {
        return {{"vectors", {{1.0, 0.0}, {1.0, 0.0, 0.0}}}};
      });
  EXPECT_THROW(ModelClient(t, t, t).EmbedTexts({"a", "b"}), DimensionMismatch);
}

TEST(Replay, DigestIsStable) {
  const json request = {{"protocol", 1}, {"texts", {"a"}}};
  const std::string d = ReplayCache::Digest(kEmbedTextPath, request);
  EXPECT_EQ(d.size(), 64u);
  EXPECT_EQ(d, ReplayCache::Digest(kEmbedTextPath, request));
  EXPECT_NE(d, ReplayCache::Digest(kEmbedImagePath, request));
}

TEST(Replay, RecordThenReplayWithoutNetwork) {
  const auto path = std::filesystem::temp_directory_path() / "regrank_replay_test.jsonl";
  std::filesystem::remove(path);
  std::atomic<int> calls{0};
  auto live = std::make_shared<FunctionTransport>(
      [&calls](const std::string&, const json& request) -> json {
        ++calls;
        return {{"echo", request["texts"]}, {"pi", 3.141592653589793}};
      });
  const json request = {{"protocol", 1}, {"texts", {"a", "b"}}};
  json recorded;
  {
    auto cache = std::make_shared<ReplayCache>(path);
    CachingTransport t(live, cache, ReplayMode::kRecord);
    recorded = t.Post(kEmbedTextPath, request);
    cache->Save();
  }
  auto cache = std::make_shared<ReplayCache>(path);
  EXPECT_EQ(cache->size(), 1u);
  CachingTransport replay(nullptr, cache, ReplayMode::kReplay);
  EXPECT_EQ(replay.Post(kEmbedTextPath, request).dump(), recorded.dump());
  EXPECT_EQ(calls.load(), 1);
  EXPECT_EQ(replay.hits(), 1u);
  EXPECT_THROW(replay.Post(kEmbedTextPath, {{"protocol", 1}, {"texts", {"c"}}}),
               BackendUnavailable);
  EXPECT_EQ(replay.misses(), 1u);
  std::filesystem::remove(path);
}

TEST(Replay, ModeNames) {
  for (ReplayMode m : {ReplayMode::kOff, ReplayMode::kRecord, ReplayMode::kReplay}) {
    EXPECT_EQ(ParseReplayMode(ReplayModeName(m)), m);
  }
  EXPECT_THROW(ParseReplayMode("sometimes"), PreconditionError);
}

TEST(Http, RoundTripAgainstServer) {
  const Corpus corpus = MakeSyntheticCorpus(SyntheticOptions{});
  const MockModel model = MockModel::FromCorpus(corpus);
  BackendServer server([&model](const std::string& path, const json& request) {
    return model.Handle(path, request);
  });
  const int port = server.Start();
  ASSERT_GT(port, 0);
  auto http = std::make_shared<HttpTransport>("http://127.0.0.1:" + std::to_string(port));
  auto local = testing::MockTransport(corpus);
  const ModelClient remote(http, http, http);
  const ModelClient direct(local, local, local);
  EXPECT_EQ(remote.EmbedTexts({"the white husky"})[0].values,
            direct.EmbedTexts({"the white husky"})[0].values);
  EXPECT_EQ(remote.GenerateCandidates(kPrompt, Decoding::Beam(6)).candidates,
            direct.GenerateCandidates(kPrompt, Decoding::Beam(6)).candidates);
  server.Stop();
}

TEST(Http, RetriesThenUnavailable) {
  std::atomic<int> calls{0};
  BackendServer server([&calls](const std::string&, const json&) -> json {
    ++calls;
    throw std::runtime_error("model crashed");
  });
  const int port = server.Start();
  HttpTransport t("http://127.0.0.1:" + std::to_string(port),
                  RetryPolicy{3, std::chrono::milliseconds(1)});
  EXPECT_THROW(t.Post(kEmbedTextPath, {{"protocol", 1}}), BackendUnavailable);
  EXPECT_EQ(calls.load(), 3);
  server.Stop();
}

TEST(Http, RecoversAfterTransientFailure) {
  std::atomic<int> calls{0};
  BackendServer server([&calls](const std::string&, const json&) -> json {
    if (++calls < 3) throw std::runtime_error("warming up");
    return {{"ok", true}};
  });
  const int port = server.Start();
  HttpTransport t("http://127.0.0.1:" + std::to_string(port),
                  RetryPolicy{3, std::chrono::milliseconds(1)});
  EXPECT_EQ(t.Post(kEmbedTextPath, {{"protocol", 1}}), json({{"ok", true}}));
  server.Stop();
}

TEST(Http, NoServerIsUnavailable) {
  HttpTransport t("http://127.0.0.1:1", RetryPolicy{2, std::chrono::milliseconds(1)},
                  std::chrono::seconds(2));
  EXPECT_THROW(t.Post(kGeneratePath, {{"protocol", 1}}), BackendUnavailable);
}

TEST(Decoding, JsonRoundTrip) {
  EXPECT_EQ(Decoding::FromJson(Decoding::Beam(6).ToJson()), Decoding::Beam(6));
  EXPECT_EQ(Decoding::FromJson(Decoding::Greedy().ToJson()), Decoding::Greedy());
  EXPECT_EQ(Decoding::Beam(6).ToString(), "beam(6)");
  EXPECT_EQ(Decoding::Greedy().ToString(), "greedy");
}

}  // namespace
}  // namespace regrank
