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

#ifndef REGRANK_RERANK_H_
#define REGRANK_RERANK_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "regrank/backends.h"
#include "regrank/embedding.h"

namespace regrank {

// Weights for pooling log TIM and log ITM probabilities. The weights must be
// non-negative and sum to 1.
struct PoolingConfig {
  double w_tim = 2.0 / 3.0;
  double w_itm = 1.0 / 3.0;
  double epsilon = 1e-9;
  // Multiplies similarities before either softmax.
  double logit_scale = 100.0;

  // Throws PreconditionError.
  void Validate() const;
  bool operator==(const PoolingConfig&) const = default;
};

// Rows are candidates (through their referent descriptions), columns are the
// images of the visual context. Row-major.
class SimilarityMatrix {
 public:
  // Throws PreconditionError on a non-rectangular shape, an invalid target
  // column, or an entry outside [-1, 1] (1e-9 slack).
  SimilarityMatrix(std::size_t rows, std::size_t cols,
                   std::vector<double> values, std::size_t target_col);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t target_col() const { return target_col_; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
  std::size_t target_col_;
};

// Dot products of unit vectors. Throws DimensionMismatch or
// PreconditionError (empty input, target out of range).
SimilarityMatrix BuildSimilarityMatrix(
    std::span<const EmbeddingVector> descriptions,
    std::span<const EmbeddingVector> images, std::size_t target_index);

// Softmax over images for each candidate. Row i, column target_col is a_i.
std::vector<std::vector<double>> TimDistribution(const SimilarityMatrix& m,
                                                 const PoolingConfig& config);
std::vector<double> TimScores(const SimilarityMatrix& m,
                              const PoolingConfig& config);

// Softmax over candidates of the target column: b_i.
std::vector<double> ItmDistribution(const SimilarityMatrix& m,
                                    const PoolingConfig& config);

struct ScoredCandidate {
  std::size_t candidate_index = 0;  // position in the CandidateSet
  std::size_t beam_rank = 0;
  double a = 0;  // TIM
  double b = 0;  // ITM
  double s = 0;  // w_tim ln(a + eps) + w_itm ln(b + eps)
};

// Candidate i gets index i and beam rank i unless beam_ranks is given.
std::vector<ScoredCandidate> PooledScores(
    std::span<const double> a, std::span<const double> b,
    const PoolingConfig& config,
    std::span<const std::size_t> beam_ranks = {});

enum class Strategy { kTop1, kMaxDisc, kRerank };

std::string StrategyName(Strategy strategy);  // "Top1", "MaxDisc", "Rerank"
Strategy ParseStrategy(const std::string& name);
std::string StrategyLabel(Strategy strategy);  // "Top-1", "Max disc.", "Rerank"

struct Selection {
  Strategy strategy = Strategy::kTop1;
  std::size_t candidate_index = 0;
  std::size_t beam_rank = 0;
  // Set when a guided strategy had nothing scored and fell back to Top-1.
  bool degraded = false;
};

// Top-1 takes the best beam; Max disc. the highest a; Rerank the highest S,
// with exact ties in S broken by a. Remaining ties go to the lowest beam
// rank.
Selection SelectCandidate(const CandidateSet& candidates,
                          std::span<const ScoredCandidate> scored,
                          Strategy strategy);

}  // namespace regrank

#endif  // REGRANK_RERANK_H_
