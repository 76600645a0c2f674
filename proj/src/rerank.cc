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

#include "regrank/rerank.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "regrank/errors.h"

namespace regrank {

void PoolingConfig::Validate() const {
  if (w_tim < 0 || w_itm < 0) {
    throw PreconditionError("pooling weights must be non-negative");
  }
  if (std::abs(w_tim + w_itm - 1.0) > 1e-9) {
    throw PreconditionError("pooling weights must sum to 1");
  }
  if (!(epsilon > 0)) throw PreconditionError("epsilon must be positive");
  if (!(logit_scale > 0)) throw PreconditionError("logit scale must be positive");
}

SimilarityMatrix::SimilarityMatrix(std::size_t rows, std::size_t cols,
                                   std::vector<double> values,
                                   std::size_t target_col)
    : rows_(rows), cols_(cols), values_(std::move(values)), target_col_(target_col) {
  if (rows_ == 0 || cols_ == 0) {
    throw PreconditionError("similarity matrix needs >= 1 row and column");
  }
  if (values_.size() != rows_ * cols_) {
    throw PreconditionError("similarity matrix is not rectangular");
  }
  if (target_col_ >= cols_) throw PreconditionError("target column out of range");
  for (double v : values_) {
    if (!(v >= -1.0 - 1e-9 && v <= 1.0 + 1e-9)) {
      throw PreconditionError("similarity outside [-1, 1]: " + std::to_string(v));
    }
  }
}

SimilarityMatrix BuildSimilarityMatrix(
    std::span<const EmbeddingVector> descriptions,
    std::span<const EmbeddingVector> images, std::size_t target_index) {
  if (descriptions.empty() || images.empty()) {
    throw PreconditionError("similarity matrix needs descriptions and images");
  }
  std::vector<double> values;
  values.reserve(descriptions.size() * images.size());
  for (const EmbeddingVector& d : descriptions) {
    for (const EmbeddingVector& img : images) values.push_back(Dot(d, img));
  }
  return SimilarityMatrix(descriptions.size(), images.size(), std::move(values),
                          target_index);
}

namespace {

std::vector<double> Softmax(const std::vector<double>& logits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

}  // namespace

std::vector<std::vector<double>> TimDistribution(const SimilarityMatrix& m,
                                                 const PoolingConfig& config) {
  std::vector<std::vector<double>> out;
  out.reserve(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::vector<double> logits(m.cols());
    for (std::size_t c = 0; c < m.cols(); ++c) {
      logits[c] = config.logit_scale * m.at(r, c);
    }
    out.push_back(Softmax(logits));
  }
  return out;
}

std::vector<double> TimScores(const SimilarityMatrix& m,
                              const PoolingConfig& config) {
  std::vector<double> a;
  for (const auto& row : TimDistribution(m, config)) {
    a.push_back(row[m.target_col()]);
  }
  return a;
}

std::vector<double> ItmDistribution(const SimilarityMatrix& m,
                                    const PoolingConfig& config) {
  std::vector<double> logits(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    logits[r] = config.logit_scale * m.at(r, m.target_col());
  }
  return Softmax(logits);
}

std::vector<ScoredCandidate> PooledScores(std::span<const double> a,
                                          std::span<const double> b,
                                          const PoolingConfig& config,
                                          std::span<const std::size_t> beam_ranks) {
  if (a.size() != b.size()) {
    throw PreconditionError("TIM and ITM score counts differ");
  }
  if (!beam_ranks.empty() && beam_ranks.size() != a.size()) {
    throw PreconditionError("beam rank count differs from score count");
  }
  config.Validate();
  std::vector<ScoredCandidate> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i].candidate_index = i;
    out[i].beam_rank = beam_ranks.empty() ? i : beam_ranks[i];
    out[i].a = a[i];
    out[i].b = b[i];
    out[i].s = config.w_tim * std::log(a[i] + config.epsilon) +
               config.w_itm * std::log(b[i] + config.epsilon);
  }
  return out;
}

std::string StrategyName(Strategy strategy) {
  switch (strategy) {
    case Strategy::kTop1:
      return "Top1";
    case Strategy::kMaxDisc:
      return "MaxDisc";
    case Strategy::kRerank:
      return "Rerank";
  }
  return "Top1";
}

std::string StrategyLabel(Strategy strategy) {
  switch (strategy) {
    case Strategy::kTop1:
      return "Top-1";
    case Strategy::kMaxDisc:
      return "Max disc.";
    case Strategy::kRerank:
      return "Rerank";
  }
  return "Top-1";
}

Strategy ParseStrategy(const std::string& name) {
  if (name == "Top1" || name == "top1") return Strategy::kTop1;
  if (name == "MaxDisc" || name == "maxdisc") return Strategy::kMaxDisc;
  if (name == "Rerank" || name == "rerank") return Strategy::kRerank;
  throw PreconditionError("unknown strategy \"" + name + "\"");
}

Selection SelectCandidate(const CandidateSet& candidates,
                          std::span<const ScoredCandidate> scored,
                          Strategy strategy) {
  if (candidates.candidates.empty()) {
    throw PreconditionError("no candidates to select from");
  }
  Selection top1{strategy, 0, candidates.candidates.front().beam_rank, false};
  if (strategy == Strategy::kTop1) return top1;
  if (scored.empty()) {
    top1.degraded = true;
    return top1;
  }
  // When every a is far below epsilon, ln(a + eps) rounds to ln(eps) and S
  // ties in double precision although it is strictly ordered in exact
  // arithmetic. Comparing a after S restores that order, so TIM-only
  // weights select exactly what Max disc. selects. Remaining ties go to the
  // lowest beam rank.
  auto key = [strategy](const ScoredCandidate& c) {
    return strategy == Strategy::kMaxDisc ? std::pair(c.a, c.a)
                                          : std::pair(c.s, c.a);
  };
  const ScoredCandidate* best = &scored.front();
  for (const ScoredCandidate& c : scored) {
    if (key(c) > key(*best) ||
        (key(c) == key(*best) && c.beam_rank < best->beam_rank)) {
      best = &c;
    }
  }
  return {strategy, best->candidate_index, best->beam_rank, false};
}

}  // namespace regrank
