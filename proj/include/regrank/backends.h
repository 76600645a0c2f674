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

#ifndef REGRANK_BACKENDS_H_
#define REGRANK_BACKENDS_H_

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "regrank/context.h"
#include "regrank/embedding.h"

namespace regrank {

// Wire protocol version carried in every request as "protocol".
inline constexpr int kProtocolVersion = 1;

inline constexpr char kGeneratePath[] = "/generate";
inline constexpr char kDescribePath[] = "/describe";
inline constexpr char kEmbedTextPath[] = "/embed_text";
inline constexpr char kEmbedImagePath[] = "/embed_image";

// Environment variables holding the base URL for each model role.
inline constexpr char kGeneratorUrlEnv[] = "REGRANK_GENERATOR_URL";
inline constexpr char kDescriberUrlEnv[] = "REGRANK_DESCRIBER_URL";
inline constexpr char kEmbedderUrlEnv[] = "REGRANK_EMBEDDER_URL";

// Moves one JSON request to a model endpoint and returns the JSON response.
// Implementations must be safe for concurrent calls.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual nlohmann::json Post(const std::string& path,
                              const nlohmann::json& request) = 0;
};

using Handler =
    std::function<nlohmann::json(const std::string&, const nlohmann::json&)>;

// Calls a function in-process. Used for mocks and scripted test backends.
class FunctionTransport : public Transport {
 public:
  explicit FunctionTransport(Handler handler) : handler_(std::move(handler)) {}
  nlohmann::json Post(const std::string& path,
                      const nlohmann::json& request) override {
    return handler_(path, request);
  }

 private:
  Handler handler_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
};

// JSON over HTTP POST. Connection failures and 5xx responses are retried
// with exponential backoff; after the last attempt BackendUnavailable is
// thrown. 4xx responses raise ProtocolError without retrying.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(std::string base_url, RetryPolicy retry = {},
                         std::chrono::seconds timeout = std::chrono::seconds(120));
  nlohmann::json Post(const std::string& path,
                      const nlohmann::json& request) override;

  const std::string& base_url() const { return base_url_; }

 private:
  std::string base_url_;
  RetryPolicy retry_;
  std::chrono::seconds timeout_;
};

// Recorded request/response pairs keyed by a SHA-256 digest of the endpoint
// path and the canonical (key-sorted, compact) request. Stored as one JSON
// record per line, sorted by digest.
class ReplayCache {
 public:
  ReplayCache() = default;
  // Loads `path` if it exists; Save() writes back to it.
  explicit ReplayCache(std::filesystem::path path);

  static std::string Digest(const std::string& endpoint,
                            const nlohmann::json& request);

  std::optional<nlohmann::json> Lookup(const std::string& endpoint,
                                       const nlohmann::json& request) const;
  void Record(const std::string& endpoint, const nlohmann::json& request,
              nlohmann::json response);
  void Save() const;
  std::size_t size() const;

 private:
  struct Entry {
    std::string endpoint;
    nlohmann::json request;
    nlohmann::json response;
  };
  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry> entries_;
};

enum class ReplayMode { kOff, kRecord, kReplay };

ReplayMode ParseReplayMode(const std::string& name);
std::string ReplayModeName(ReplayMode mode);

// kReplay answers only from the cache (a miss is BackendUnavailable and the
// inner transport is never touched). kRecord answers from the cache when it
// can and records whatever the inner transport returns. kOff passes through.
class CachingTransport : public Transport {
 public:
  CachingTransport(std::shared_ptr<Transport> inner,
                   std::shared_ptr<ReplayCache> cache, ReplayMode mode);
  nlohmann::json Post(const std::string& path,
                      const nlohmann::json& request) override;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  std::shared_ptr<Transport> inner_;
  std::shared_ptr<ReplayCache> cache_;
  ReplayMode mode_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

struct Decoding {
  enum class Mode { kGreedy, kBeam };
  Mode mode = Mode::kGreedy;
  std::size_t width = 1;

  static Decoding Greedy() { return {Mode::kGreedy, 1}; }
  static Decoding Beam(std::size_t width) { return {Mode::kBeam, width}; }

  nlohmann::json ToJson() const;
  static Decoding FromJson(const nlohmann::json& j);
  std::string ToString() const;  // "greedy" or "beam(6)"
  bool operator==(const Decoding&) const = default;
};

struct Candidate {
  std::string text;
  double score = 0;  // sequence log-probability
  std::size_t beam_rank = 0;

  bool operator==(const Candidate&) const = default;
};

struct CandidateSet {
  std::string mention_id;
  Decoding decoding;
  std::vector<Candidate> candidates;
};

struct ReferentDescription {
  std::size_t beam_rank = 0;
  std::string text;
};

// Strips whitespace, marker residue and end-of-sequence tokens. Returns
// nullopt when nothing usable is left or a marker remains inside the text.
std::optional<std::string> SanitizeCandidate(std::string_view raw);

struct ClientOptions {
  // Forwarded as "max_length" to /generate and /describe; the backend owns
  // its meaning.
  std::size_t max_generation_length = 32;
  std::size_t max_description_length = 64;
};

// Typed access to the three model roles. Each role may sit behind a
// different transport.
class ModelClient {
 public:
  ModelClient(std::shared_ptr<Transport> generator,
              std::shared_ptr<Transport> describer,
              std::shared_ptr<Transport> embedder, ClientOptions options = {});

  // Candidates are sanitized, deduplicated on exact text (the lowest
  // beam_rank survives) and truncated to the decoding width. Throws
  // EmptyGeneration when nothing survives.
  CandidateSet GenerateCandidates(const PromptSequence& prompt,
                                  const Decoding& decoding,
                                  const std::string& mention_id = "") const;

  // `segment` must contain exactly one marker pair (PreconditionError
  // otherwise). Throws EmptyDescription on a blank response.
  ReferentDescription DescribeReferent(const std::string& segment,
                                       std::size_t beam_rank = 0) const;

  // One unit-norm vector per input, in order. Throws DimensionMismatch if
  // the dimension differs within a batch or from earlier calls.
  std::vector<EmbeddingVector> EmbedTexts(
      const std::vector<std::string>& texts) const;
  std::vector<EmbeddingVector> EmbedImages(
      const std::vector<std::string>& image_ids) const;

 private:
  std::vector<EmbeddingVector> ParseVectors(const nlohmann::json& response,
                                            std::size_t expected) const;

  std::shared_ptr<Transport> generator_;
  std::shared_ptr<Transport> describer_;
  std::shared_ptr<Transport> embedder_;
  ClientOptions options_;
  mutable std::atomic<std::size_t> dimension_{0};
};

// Serves a Handler over HTTP on the four model endpoints. Request bodies
// that fail to parse get 400; handler exceptions get 500.
class BackendServer {
 public:
  explicit BackendServer(Handler handler);
  ~BackendServer();
  BackendServer(const BackendServer&) = delete;
  BackendServer& operator=(const BackendServer&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  int Start(const std::string& host = "127.0.0.1", int port = 0);
  // Binds and serves on the calling thread until Stop().
  bool Listen(const std::string& host, int port);
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace regrank

#endif  // REGRANK_BACKENDS_H_
