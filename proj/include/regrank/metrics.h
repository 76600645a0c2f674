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

#ifndef REGRANK_METRICS_H_
#define REGRANK_METRICS_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "regrank/embedding.h"

namespace regrank {

// Lowercased word tokens. ASCII punctuation separates tokens and is dropped.
struct TokenSeq {
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

TokenSeq Tokenize(std::string_view text);

// BLEU with uniform weights over n = 1..max_n, clipped counts and brevity
// penalty, no smoothing: any zero precision gives 0. Throws EmptyReference.
double Bleu(const TokenSeq& candidate, const TokenSeq& reference, int max_n);

// ROUGE-L F1 (beta = 1). Throws EmptyReference.
double RougeL(const TokenSeq& candidate, const TokenSeq& reference);

// |A ∩ B| / |A ∪ B| over token sets; two empty sets score 1.
double Jaccard(const TokenSeq& candidate, const TokenSeq& reference);

// Throws ZeroVector or DimensionMismatch. The raw value may be negative.
double Cosine(const EmbeddingVector& u, const EmbeddingVector& v);

struct RankingOutcome {
  std::size_t target_rank = 1;  // 1-based
  std::size_t n_candidates = 1;
};

// Rank of `target` when `scores` are sorted descending. Ties count against
// the target: every other entry scoring >= the target ranks above it.
RankingOutcome RankTarget(std::span<const double> scores, std::size_t target);

struct TirScores {
  double accuracy = 0;
  double mrr = 0;
  double ndcg = 0;
};

// Single-relevant-item forms: accuracy = [rank == 1], RR = 1/rank,
// NDCG = 1/log2(rank + 1). Throws PreconditionError on an empty list.
TirScores TirMetrics(std::span<const RankingOutcome> outcomes);

using MetricRow = std::map<std::string, double>;

struct ScoreReport {
  std::map<std::string, double> means;
  std::map<std::string, std::size_t> counts;  // samples contributing per metric
  std::size_t samples = 0;

  bool operator==(const ScoreReport&) const = default;
};

// Unweighted mean of each metric over the rows that carry it.
ScoreReport Aggregate(std::span<const MetricRow> rows);

// Mean of fold means (macro). Folds without a metric do not contribute to it.
ScoreReport AggregateFolds(std::span<const ScoreReport> folds);

// Nearest hundredth, halves away from zero.
double RoundHundredth(double x);
std::string FormatHundredth(double x);

}  // namespace regrank

#endif  // REGRANK_METRICS_H_
