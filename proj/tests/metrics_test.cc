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


#include "regrank/metrics.h"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.h"
#include "regrank/errors.h"

namespace regrank {
namespace {

using Tokens = std::vector<std::string>;

TEST(Tokenize, Rules) {
  EXPECT_EQ(Tokenize("The black one.").tokens, (Tokens{"the", "black", "one"}));
  EXPECT_TRUE(Tokenize("").empty());
  EXPECT_EQ(Tokenize("Nokia E75!").tokens, (Tokens{"nokia", "e75"}));
  EXPECT_EQ(Tokenize("left-most,  chair").tokens,
            (Tokens{"left", "most", "chair"}));
  // Non-ASCII bytes are kept verbatim.
  EXPECT_EQ(Tokenize("CAFÉ crème").tokens, (Tokens{"cafÉ", "crème"}));
}

double B(const std::string& c, const std::string& r, int n = 1) {
  return Bleu(Tokenize(c), Tokenize(r), n);
}
double R(const std::string& c, const std::string& r) {
  return RougeL(Tokenize(c), Tokenize(r));
}
double J(const std::string& c, const std::string& r) {
  return Jaccard(Tokenize(c), Tokenize(r));
}

TEST(Bleu, Examples) {
  EXPECT_DOUBLE_EQ(B("the white husky", "the white husky"), 1.0);
  EXPECT_DOUBLE_EQ(B("the white husky on the left", "the white husky on the left", 4), 1.0);
  EXPECT_NEAR(B("the white dog", "the white curly dog"), std::exp(1 - 4.0 / 3),
              1e-12);
  EXPECT_NEAR(B("the white dog", "the white curly dog"), 0.7165, 1e-4);
  EXPECT_DOUBLE_EQ(B("a red car", "the blue phone"), 0.0);
  EXPECT_DOUBLE_EQ(B("", "the cat"), 0.0);
  // Clipping: three "the" against one.
  EXPECT_NEAR(B("the the the", "the cat"), 1.0 / 3, 1e-12);
  // No smoothing: a missing bigram zeroes BLEU-2.
  EXPECT_DOUBLE_EQ(B("dog white", "white dog", 2), 0.0);
  EXPECT_THROW(B("x", ""), EmptyReference);
}

TEST(RougeL, Examples) {
  EXPECT_DOUBLE_EQ(R("the white husky", "the white husky"), 1.0);
  EXPECT_NEAR(R("the white dog", "the white curly dog"), 6.0 / 7, 1e-12);
  EXPECT_NEAR(R("the white dog", "the white curly dog"), 0.8571, 1e-4);
  EXPECT_DOUBLE_EQ(R("a red car", "the blue phone"), 0.0);
  EXPECT_THROW(R("x", ""), EmptyReference);
}

TEST(Jaccard, Examples) {
  EXPECT_DOUBLE_EQ(J("the black one", "the black nokia"), 0.5);
  EXPECT_DOUBLE_EQ(J("the black one", "The black one!"), 1.0);
  EXPECT_DOUBLE_EQ(J("a red car", "the blue phone"), 0.0);
  EXPECT_DOUBLE_EQ(J("", ""), 1.0);
  EXPECT_DOUBLE_EQ(J("", "x"), 0.0);
}

TEST(Oracle, FiftyPairsAgree) {
  const auto pairs = oracle::MetricPairs();
  ASSERT_EQ(pairs.size(), 50u);
  for (const auto& [c, r] : pairs) {
    ASSERT_EQ(Tokenize(c).tokens, oracle::Tokens(c)) << c;
    for (int n = 1; n <= 4; ++n) {
      EXPECT_NEAR(B(c, r, n), oracle::Bleu(c, r, n), 1e-9) << c << " | " << r;
    }
    EXPECT_NEAR(R(c, r), oracle::RougeL(c, r), 1e-9) << c << " | " << r;
    EXPECT_NEAR(J(c, r), oracle::Jaccard(c, r), 1e-9) << c << " | " << r;
  }
}

TEST(Properties, BoundsAndSymmetry) {
  for (const auto& [c, r] : oracle::MetricPairs()) {
    for (double v : {B(c, r), B(c, r, 2), R(c, r), J(c, r)}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_DOUBLE_EQ(J(c, r), J(r, c));
    EXPECT_NEAR(R(c, r), R(r, c), 1e-12);  // F1 is symmetric
    EXPECT_DOUBLE_EQ(R(c, c), 1.0);
  }
}

TEST(Cosine, Examples) {
  const EmbeddingVector v{{0.3, -0.2, 0.9}, false};
  EXPECT_NEAR(Cosine(v, v), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(Cosine({{1, 0}, false}, {{0, 1}, false}), 0.0);
  EXPECT_NEAR(Cosine({{1, 1}, false}, {{1, 0}, false}), 0.7071, 1e-4);
  EXPECT_NEAR(Cosine({{1, 0}, false}, {{-1, 0}, false}), -1.0, 1e-15);
  EXPECT_THROW(Cosine({{0, 0}, false}, {{1, 0}, false}), ZeroVector);
  EXPECT_THROW(Cosine({{1, 0}, false}, {{1, 0, 0}, false}), DimensionMismatch);
}

TEST(Tir, RankTargetIsPessimisticOnTies) {
  const std::vector<double> scores = {0.2, 0.9, 0.5, 0.5};
  EXPECT_EQ(RankTarget(scores, 1).target_rank, 1u);
  EXPECT_EQ(RankTarget(scores, 2).target_rank, 3u);
  EXPECT_EQ(RankTarget(scores, 3).target_rank, 3u);
  EXPECT_EQ(RankTarget(scores, 0).target_rank, 4u);
  EXPECT_EQ(RankTarget(scores, 0).n_candidates, 4u);
  EXPECT_THROW(RankTarget(scores, 4), PreconditionError);
}

TEST(Tir, Examples) {
  const std::vector<RankingOutcome> all_first = {{1, 9}, {1, 3}};
  const TirScores ones = TirMetrics(all_first);
  EXPECT_DOUBLE_EQ(ones.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(ones.mrr, 1.0);
  EXPECT_DOUBLE_EQ(ones.ndcg, 1.0);

  const std::vector<RankingOutcome> mixed = {{1, 9}, {2, 9}, {4, 9}};
  const TirScores t = TirMetrics(mixed);
  EXPECT_NEAR(t.accuracy, 0.3333, 1e-4);
  EXPECT_NEAR(t.mrr, 0.5833, 1e-4);
  EXPECT_NEAR(t.ndcg, 0.6872, 1e-4);
  EXPECT_NEAR(t.ndcg, (1 + 1 / std::log2(3.0) + 1 / std::log2(5.0)) / 3, 1e-12);

  const std::vector<RankingOutcome> second = {{2, 9}};
  const TirScores s = TirMetrics(second);
  EXPECT_DOUBLE_EQ(s.accuracy, 0.0);
  EXPECT_DOUBLE_EQ(s.mrr, 0.5);
  EXPECT_NEAR(s.ndcg, 0.6309, 1e-4);

  EXPECT_THROW(TirMetrics(std::vector<RankingOutcome>{}), PreconditionError);
  EXPECT_THROW(TirMetrics(std::vector<RankingOutcome>{{5, 3}}), PreconditionError);
}

TEST(Aggregate, Means) {
  const std::vector<MetricRow> one = {{{"bleu", 0.4}}};
  EXPECT_DOUBLE_EQ(Aggregate(one).means.at("bleu"), 0.4);
  const std::vector<MetricRow> two = {{{"bleu", 0.0}, {"mrr", 1.0}},
                                      {{"bleu", 1.0}}};
  const ScoreReport r = Aggregate(two);
  EXPECT_DOUBLE_EQ(r.means.at("bleu"), 0.5);
  EXPECT_DOUBLE_EQ(r.means.at("mrr"), 1.0);
  EXPECT_EQ(r.counts.at("mrr"), 1u);
  EXPECT_EQ(r.samples, 2u);
}

TEST(Aggregate, MacroOverFolds) {
  std::vector<ScoreReport> folds;
  for (double v : {0.6, 0.7, 0.8, 0.9, 1.0}) {
    folds.push_back({{{"accuracy", v}}, {{"accuracy", 10}}, 10});
  }
  folds[4].samples = 100;  // sample counts do not weight macro means
  EXPECT_NEAR(AggregateFolds(folds).means.at("accuracy"), 0.8, 1e-12);
}

TEST(Rounding, NearestHundredth) {
  EXPECT_EQ(FormatHundredth(0.856), "0.86");
  EXPECT_EQ(FormatHundredth(0.854), "0.85");
  EXPECT_EQ(FormatHundredth(1.0), "1.00");
  EXPECT_EQ(FormatHundredth(0.125), "0.13");
  EXPECT_EQ(FormatHundredth(-0.125), "-0.13");
  EXPECT_DOUBLE_EQ(RoundHundredth(0.856), 0.86);
}

}  // namespace
}  // namespace regrank
