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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

#include "regrank/errors.h"

namespace regrank {

EmbeddingVector Normalize(EmbeddingVector v) {
  double norm = 0;
  for (double x : v.values) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0) throw ZeroVector("cannot normalize a zero vector");
  for (double& x : v.values) x /= norm;
  v.normalized = true;
  return v;
}

double Dot(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) {
    throw DimensionMismatch("dimension " + std::to_string(u.dim()) + " vs " +
                            std::to_string(v.dim()));
  }
  double sum = 0;
  for (std::size_t i = 0; i < u.dim(); ++i) sum += u.values[i] * v.values[i];
  return sum;
}

TokenSeq Tokenize(std::string_view text) {
  TokenSeq out;
  std::string current;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (uc < 0x80 && (std::isspace(uc) || std::ispunct(uc))) {
      if (!current.empty()) out.tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(uc < 0x80 ? static_cast<char>(std::tolower(uc)) : c);
    }
  }
  if (!current.empty()) out.tokens.push_back(std::move(current));
  return out;
}

namespace {

std::map<std::vector<std::string>, int> NgramCounts(const TokenSeq& seq,
                                                    int n) {
  std::map<std::vector<std::string>, int> counts;
  if (seq.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    ++counts[std::vector<std::string>(seq.tokens.begin() + i,
                                      seq.tokens.begin() + i + n)];
  }
  return counts;
}

std::size_t LcsLength(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a.tokens[i - 1] == b.tokens[j - 1]
                   ? prev[j - 1] + 1
                   : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

double Bleu(const TokenSeq& candidate, const TokenSeq& reference, int max_n) {
  if (reference.empty()) throw EmptyReference("BLEU reference is empty");
  if (max_n < 1) throw PreconditionError("BLEU max_n must be >= 1");
  if (candidate.empty()) return 0.0;
  double log_sum = 0;
  for (int n = 1; n <= max_n; ++n) {
    const auto cand = NgramCounts(candidate, n);
    const auto ref = NgramCounts(reference, n);
    int matched = 0;
    int total = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      auto it = ref.find(gram);
      if (it != ref.end()) matched += std::min(count, it->second);
    }
    if (matched == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched) / total);
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
  return brevity * std::exp(log_sum / max_n);
}

double RougeL(const TokenSeq& candidate, const TokenSeq& reference) {
  if (reference.empty()) throw EmptyReference("ROUGE-L reference is empty");
  if (candidate.empty()) return 0.0;
  const double lcs = static_cast<double>(LcsLength(candidate, reference));
  if (lcs == 0) return 0.0;
  const double precision = lcs / candidate.size();
  const double recall = lcs / reference.size();
  return 2 * precision * recall / (precision + recall);
}

double Jaccard(const TokenSeq& candidate, const TokenSeq& reference) {
  const std::set<std::string> a(candidate.tokens.begin(),
                                candidate.tokens.end());
  const std::set<std::string> b(reference.tokens.begin(),
                                reference.tokens.end());
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (const std::string& t : a) common += b.count(t);
  return static_cast<double>(common) / (a.size() + b.size() - common);
}

double Cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  const double dot = Dot(u, v);
  const double nu = std::sqrt(Dot(u, u));
  const double nv = std::sqrt(Dot(v, v));
  if (nu == 0 || nv == 0) throw ZeroVector("cosine of a zero vector");
  return dot / (nu * nv);
}

RankingOutcome RankTarget(std::span<const double> scores, std::size_t target) {
  if (target >= scores.size()) {
    throw PreconditionError("target index out of range");
  }
  RankingOutcome out;
  out.n_candidates = scores.size();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i != target && scores[i] >= scores[target]) ++out.target_rank;
  }
  return out;
}

TirScores TirMetrics(std::span<const RankingOutcome> outcomes) {
  if (outcomes.empty()) throw PreconditionError("no ranking outcomes");
  TirScores out;
  for (const RankingOutcome& o : outcomes) {
    if (o.target_rank < 1 || o.target_rank > o.n_candidates) {
      throw PreconditionError("target rank outside [1, n_candidates]");
    }
    const double rank = static_cast<double>(o.target_rank);
    out.accuracy += o.target_rank == 1 ? 1.0 : 0.0;
    out.mrr += 1.0 / rank;
    out.ndcg += 1.0 / std::log2(rank + 1.0);
  }
  const double n = static_cast<double>(outcomes.size());
  out.accuracy /= n;
  out.mrr /= n;
  out.ndcg /= n;
  return out;
}

ScoreReport Aggregate(std::span<const MetricRow> rows) {
  ScoreReport out;
  out.samples = rows.size();
  for (const MetricRow& row : rows) {
    for (const auto& [name, value] : row) {
      out.means[name] += value;
      ++out.counts[name];
    }
  }
  for (auto& [name, sum] : out.means) sum /= out.counts[name];
  return out;
}

ScoreReport AggregateFolds(std::span<const ScoreReport> folds) {
  ScoreReport out;
  std::map<std::string, std::size_t> folds_with_metric;
  for (const ScoreReport& fold : folds) {
    out.samples += fold.samples;
    for (const auto& [name, mean] : fold.means) {
      out.means[name] += mean;
      ++folds_with_metric[name];
      out.counts[name] += fold.counts.at(name);
    }
  }
  for (auto& [name, sum] : out.means) sum /= folds_with_metric[name];
  return out;
}

double RoundHundredth(double x) { return std::round(x * 100.0) / 100.0; }

std::string FormatHundredth(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", RoundHundredth(x));
  return buf;
}

}  // namespace regrank
