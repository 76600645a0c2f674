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

#include "regrank/mock_model.h"

#include <algorithm>
#include <set>
#include <vector>

#include "regrank/backends.h"
#include "regrank/context.h"
#include "regrank/errors.h"
#include "regrank/metrics.h"

namespace regrank {

using nlohmann::json;

std::uint64_t Fnv1a(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::uint64_t SplitMix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Uniform in [-1, 1), seeded by `key`.
std::vector<double> PseudoRandomVector(std::string_view key, std::size_t dim) {
  std::uint64_t state = Fnv1a(key);
  std::vector<double> v(dim);
  for (double& x : v) {
    x = static_cast<double>(SplitMix64(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  }
  return v;
}

const std::set<std::string>& FunctionWords() {
  static const std::set<std::string> words = {
      "a",     "an",   "the",  "it",    "its",   "this",  "that",  "these",
      "those", "one",  "ones", "other", "and",   "or",    "but",   "i",
      "you",   "we",   "is",   "are",   "was",   "be",    "to",    "of",
      "in",    "on",   "for",  "with",  "so",    "then",  "now",   "yes",
      "yeah",  "no",   "ok",   "okay",  "lets",  "let",   "s",     "do",
      "go",    "think", "like", "maybe", "what",  "which", "about", "how",
      "m",     "a",    "b",    "just",  "as",    "at",    "if",    "my",
      "your",  "our",  "they", "them",  "he",    "she",   "him",   "her",
      "would", "could", "should", "can", "will",  "not",   "too",   "very",
      "have",  "has",  "had",  "me",    "us",    "all",   "any",   "some",
      "more",  "most", "put",  "next",  "first", "last",  "agree", "sure",
      "right", "there", "here", "rank", "ranked", "place", "number"};
  return words;
}

bool IsContent(const std::string& token) {
  return FunctionWords().count(token) == 0;
}

std::string Join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const std::string& t : tokens) {
    if (!out.empty()) out += " ";
    out += t;
  }
  return out;
}

}  // namespace

MockModel::MockModel(std::map<std::string, std::string> image_descriptions,
                     std::size_t dimension)
    : image_descriptions_(std::move(image_descriptions)),
      dimension_(dimension) {}

MockModel MockModel::FromCorpus(const Corpus& corpus, std::size_t dimension) {
  std::map<std::string, std::string> descriptions;
  for (const ImageSet& set : corpus.image_sets()) {
    for (const ImageRef& img : set.images) {
      descriptions[img.image_id] =
          img.ground_truth_description.value_or(set.category);
    }
  }
  return MockModel(std::move(descriptions), dimension);
}

json MockModel::Handle(const std::string& path, const json& request) const {
  if (request.value("protocol", 0) != kProtocolVersion) {
    throw ProtocolError("unsupported protocol version");
  }
  if (path == kGeneratePath) return Generate(request);
  if (path == kDescribePath) return Describe(request);
  json vectors = json::array();
  if (path == kEmbedTextPath) {
    for (const json& t : request.at("texts")) {
      vectors.push_back(EmbedText(t.get<std::string>()).values);
    }
  } else if (path == kEmbedImagePath) {
    for (const json& id : request.at("image_ids")) {
      vectors.push_back(EmbedImage(id.get<std::string>()).values);
    }
  } else {
    throw ProtocolError("unknown endpoint " + path);
  }
  return {{"vectors", std::move(vectors)}};
}

EmbeddingVector MockModel::EmbedText(std::string_view text) const {
  EmbeddingVector out;
  out.values.assign(dimension_, 0.0);
  const TokenSeq tokens = Tokenize(text);
  for (const std::string& t : tokens.tokens) {
    const double weight = IsContent(t) ? 1.0 : 0.15;
    const std::vector<double> v = PseudoRandomVector("tok:" + t, dimension_);
    for (std::size_t i = 0; i < dimension_; ++i) out.values[i] += weight * v[i];
  }
  // Keeps empty or all-stopword text away from the zero vector.
  const std::vector<double> bias = PseudoRandomVector("bias", dimension_);
  for (std::size_t i = 0; i < dimension_; ++i) out.values[i] += 0.05 * bias[i];
  return Normalize(std::move(out));
}

EmbeddingVector MockModel::EmbedImage(const std::string& image_id) const {
  auto it = image_descriptions_.find(image_id);
  if (it == image_descriptions_.end()) {
    throw ProtocolError("unknown image " + image_id);
  }
  EmbeddingVector out = EmbedText(it->second);
  const std::vector<double> noise =
      PseudoRandomVector("img:" + image_id, dimension_);
  for (std::size_t i = 0; i < dimension_; ++i) out.values[i] += 0.35 * noise[i];
  return Normalize(std::move(out));
}

json MockModel::Generate(const json& request) const {
  const PromptSequence prompt = PromptSequence::FromJson(request.at("prompt"));
  const Decoding decoding = Decoding::FromJson(request.at("decoding"));
  std::string referent;
  for (const PromptSegment& seg : prompt.segments) {
    if (const auto* slot = std::get_if<segment::ImageSlot>(&seg)) {
      referent = slot->image_id;
    }
  }
  auto it = image_descriptions_.find(referent);
  if (it == image_descriptions_.end()) {
    throw ProtocolError("prompt references unknown image " + referent);
  }
  std::vector<std::string> content;
  for (const std::string& t : Tokenize(it->second).tokens) {
    if (IsContent(t)) content.push_back(t);
  }
  if (content.empty()) content.push_back("image");
  const std::string head = content.back();
  const std::string first_modifier = content.size() > 1 ? content.front() : head;
  const std::string last_modifier =
      content.size() > 1 ? content[content.size() - 2] : head;

  std::vector<std::string> pool = {
      "it",
      "the " + head,
      "the " + Join(content),
      "the " + first_modifier + " one",
      "that one",
      "the " + last_modifier + " " + head,
  };
  const std::uint64_t h = Fnv1a(prompt.Render());
  std::rotate(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(h % pool.size()),
              pool.end());
  // Realistic noise: marker residue, an end-of-sequence token, and a beam
  // that repeats an earlier hypothesis.
  pool[1] += " <<";
  pool[3] += " </s>";
  pool[4] = pool[0];

  const std::size_t width = std::min(decoding.width, pool.size());
  const double jitter = static_cast<double>((h >> 8) % 97) / 970.0;
  json candidates = json::array();
  for (std::size_t k = 0; k < width; ++k) {
    candidates.push_back({{"text", pool[k]},
                          {"score", -0.2 - jitter - 0.35 * static_cast<double>(k)}});
  }
  return {{"candidates", std::move(candidates)}};
}

json MockModel::Describe(const json& request) const {
  const std::string segment = request.at("segment").get<std::string>();
  const auto marked = ExtractCandidate(segment);
  if (!marked) throw ProtocolError("segment has no marked RE");
  std::vector<std::string> content;
  bool proform = false;
  for (const std::string& t : Tokenize(*marked).tokens) {
    if (IsContent(t)) content.push_back(t);
    if (t == "one" || t == "ones" || t == "it") proform = true;
  }
  if (content.empty() || proform) {
    // Resolve a proform to the closest content words before the marker.
    const std::size_t wanted = content.empty() ? 2 : content.size() + 1;
    const std::size_t insert_at = content.size();
    const std::string before =
        segment.substr(0, segment.rfind(std::string(kReStartMarker) + " "));
    const auto newline = before.find('\n');
    const std::vector<std::string> tokens =
        Tokenize(newline == std::string::npos ? std::string_view()
                                              : std::string_view(before).substr(newline))
            .tokens;
    for (auto t = tokens.rbegin(); t != tokens.rend() && content.size() < wanted;
         ++t) {
      if (IsContent(*t)) content.insert(content.begin() + insert_at, *t);
    }
  }
  if (content.empty()) return {{"description", ""}};
  return {{"description", "the " + Join(content)}};
}

}  // namespace regrank
