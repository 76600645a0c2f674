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

#ifndef REGRANK_EMBEDDING_H_
#define REGRANK_EMBEDDING_H_

#include <vector>

namespace regrank {

struct EmbeddingVector {
  std::vector<double> values;
  bool normalized = false;

  std::size_t dim() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

// Returns v scaled to unit L2 norm. Throws ZeroVector for the zero vector.
EmbeddingVector Normalize(EmbeddingVector v);

double Dot(const EmbeddingVector& u, const EmbeddingVector& v);

}  // namespace regrank

#endif  // REGRANK_EMBEDDING_H_
