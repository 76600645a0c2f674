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

#ifndef REGRANK_MOCK_MODEL_H_
#define REGRANK_MOCK_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"
#include "regrank/corpus.h"
#include "regrank/embedding.h"

namespace regrank {

// Deterministic stand-in for all three model roles, speaking the wire
// protocol. Behaviour depends only on request content, never on call order.
//
//  /generate     builds candidate REs from the referent image's ground-truth
//                description (pronoun, head noun, full description, ...),
//                rotated by a hash of the prompt.
//  /describe     keeps the content words of the marked RE; for proforms it
//                borrows the closest content words before the marker.
//  /embed_text   sums per-token pseudo-random vectors (function words
//                down-weighted).
//  /embed_image  embeds the image's ground-truth description plus an
//                image-specific perturbation.
class MockModel {
 public:
  explicit MockModel(std::map<std::string, std::string> image_descriptions,
                     std::size_t dimension = 64);
  static MockModel FromCorpus(const Corpus& corpus,
                              std::size_t dimension = 64);

  nlohmann::json Handle(const std::string& path,
                        const nlohmann::json& request) const;

  EmbeddingVector EmbedText(std::string_view text) const;
  EmbeddingVector EmbedImage(const std::string& image_id) const;

 private:
  nlohmann::json Generate(const nlohmann::json& request) const;
  nlohmann::json Describe(const nlohmann::json& request) const;

  std::map<std::string, std::string> image_descriptions_;
  std::size_t dimension_;
};

// 64-bit FNV-1a.
std::uint64_t Fnv1a(std::string_view data);

}  // namespace regrank

#endif  // REGRANK_MOCK_MODEL_H_
