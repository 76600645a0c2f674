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

#ifndef REGRANK_SYNTHETIC_H_
#define REGRANK_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>

#include "regrank/corpus.h"

namespace regrank {

// Shape of a generated sorting-game corpus. Each round ranks all nine images
// one at a time; mentions are spread evenly over the eight ranking steps
// that still involve a choice (9 down to 2 unranked images). The final,
// forced placement carries no mention.
struct SyntheticOptions {
  std::size_t sets = 5;  // at most 5 image categories are available
  std::size_t dialogues_per_set = 3;
  std::size_t rounds = 3;
  // Single-image mentions whose target is still unranked.
  std::size_t included_mentions = 60;
  // Single-image mentions of an image already ranked in the current round.
  std::size_t stale_mentions = 0;
  std::size_t multi_image_mentions = 0;
  std::uint64_t seed = 1;
};

// 5 sets x 3 dialogues with 1305 included and 14 stale single-image
// mentions (1319 total), plus a few multi-image mentions.
SyntheticOptions AgosShapedOptions();

// Deterministic for a given options value. Throws PreconditionError for
// more than 5 sets.
Corpus MakeSyntheticCorpus(const SyntheticOptions& options);

}  // namespace regrank

#endif  // REGRANK_SYNTHETIC_H_
