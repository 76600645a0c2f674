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

#include "regrank/backends.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "regrank/errors.h"

namespace regrank {

using nlohmann::json;

HttpTransport::HttpTransport(std::string base_url, RetryPolicy retry,
                             std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), retry_(retry), timeout_(timeout) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

json HttpTransport::Post(const std::string& path, const json& request) {
  const std::string body = request.dump();
  auto backoff = retry_.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= retry_.attempts; ++attempt) {
    // One client per call keeps concurrent requests independent.
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    auto result = client.Post(path, body, "application/json");
    if (!result) {
      last_error = httplib::to_string(result.error());
    } else if (result->status >= 500) {
      last_error = "HTTP " + std::to_string(result->status);
    } else if (result->status != 200) {
      throw ProtocolError(base_url_ + path + " returned HTTP " +
                          std::to_string(result->status) + ": " +
                          result->body);
    } else {
      try {
        return json::parse(result->body);
      } catch (const json::parse_error& e) {
        throw ProtocolError(base_url_ + path + " returned invalid JSON: " +
                            e.what());
      }
    }
    if (attempt < retry_.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw BackendUnavailable(base_url_ + path + " unavailable after " +
                           std::to_string(retry_.attempts) +
                           " attempts: " + last_error);
}

ReplayCache::ReplayCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      json record = json::parse(line);
      Entry entry{record.at("endpoint").get<std::string>(),
                  std::move(record.at("request")),
                  std::move(record.at("response"))};
      entries_.emplace(record.at("digest").get<std::string>(),
                       std::move(entry));
    } catch (const json::exception& e) {
      throw DataError("replay cache " + path_.string() + " line " +
                      std::to_string(number) + ": " + e.what());
    }
  }
}

std::string ReplayCache::Digest(const std::string& endpoint,
                                const json& request) {
  const std::string canonical = endpoint + "\n" + request.dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(canonical.data(), canonical.size(), digest, &length, EVP_sha256(),
             nullptr);
  std::string hex;
  hex.reserve(length * 2);
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::optional<json> ReplayCache::Lookup(const std::string& endpoint,
                                        const json& request) const {
  const std::string digest = Digest(endpoint, request);
  std::shared_lock lock(mutex_);
  auto it = entries_.find(digest);
  if (it == entries_.end() || it->second.endpoint != endpoint ||
      it->second.request != request) {
    return std::nullopt;
  }
  return it->second.response;
}

void ReplayCache::Record(const std::string& endpoint, const json& request,
                         json response) {
  const std::string digest = Digest(endpoint, request);
  std::unique_lock lock(mutex_);
  entries_.insert_or_assign(digest,
                            Entry{endpoint, request, std::move(response)});
}

void ReplayCache::Save() const {
  if (path_.empty()) throw DataError("replay cache has no backing file");
  if (path_.has_parent_path()) {
    std::filesystem::create_directories(path_.parent_path());
  }
  std::shared_lock lock(mutex_);
  std::ofstream out(path_, std::ios::trunc);
  if (!out) throw DataError("cannot write replay cache " + path_.string());
  for (const auto& [digest, entry] : entries_) {
    json record = {{"digest", digest},
                   {"endpoint", entry.endpoint},
                   {"request", entry.request},
                   {"response", entry.response}};
    out << record.dump() << "\n";
  }
}

std::size_t ReplayCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

ReplayMode ParseReplayMode(const std::string& name) {
  if (name == "off") return ReplayMode::kOff;
  if (name == "record") return ReplayMode::kRecord;
  if (name == "replay") return ReplayMode::kReplay;
  throw PreconditionError("unknown replay mode \"" + name +
                          "\" (expected off, record or replay)");
}

std::string ReplayModeName(ReplayMode mode) {
  switch (mode) {
    case ReplayMode::kOff:
      return "off";
    case ReplayMode::kRecord:
      return "record";
    case ReplayMode::kReplay:
      return "replay";
  }
  return "off";
}

CachingTransport::CachingTransport(std::shared_ptr<Transport> inner,
                                   std::shared_ptr<ReplayCache> cache,
                                   ReplayMode mode)
    : inner_(std::move(inner)), cache_(std::move(cache)), mode_(mode) {}

json CachingTransport::Post(const std::string& path, const json& request) {
  if (mode_ != ReplayMode::kOff && cache_) {
    if (auto hit = cache_->Lookup(path, request)) {
      ++hits_;
      return *std::move(hit);
    }
  }
  ++misses_;
  if (mode_ == ReplayMode::kReplay) {
    throw BackendUnavailable("replay miss for " + path + " (digest " +
                             ReplayCache::Digest(path, request) + ")");
  }
  if (!inner_) throw BackendUnavailable("no backend configured for " + path);
  json response = inner_->Post(path, request);
  if (mode_ == ReplayMode::kRecord && cache_) {
    cache_->Record(path, request, response);
  }
  return response;
}

json Decoding::ToJson() const {
  if (mode == Mode::kGreedy) return {{"mode", "greedy"}, {"width", 1}};
  return {{"mode", "beam"}, {"width", width}};
}

Decoding Decoding::FromJson(const json& j) {
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "greedy") return Greedy();
  if (mode == "beam") {
    const auto width = j.at("width").get<std::size_t>();
    if (width < 1) throw PreconditionError("beam width must be >= 1");
    return Beam(width);
  }
  throw ProtocolError("unknown decoding mode \"" + mode + "\"");
}

std::string Decoding::ToString() const {
  return mode == Mode::kGreedy ? "greedy"
                               : "beam(" + std::to_string(width) + ")";
}

namespace {

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && IsSpace(s.front())) s.remove_prefix(1);
  while (!s.empty() && IsSpace(s.back())) s.remove_suffix(1);
  return s;
}

bool StripSuffix(std::string_view& s, std::string_view suffix) {
  if (s.size() >= suffix.size() &&
      s.substr(s.size() - suffix.size()) == suffix) {
    s.remove_suffix(suffix.size());
    s = Trim(s);
    return true;
  }
  return false;
}

bool StripPrefix(std::string_view& s, std::string_view prefix) {
  if (s.substr(0, prefix.size()) == prefix) {
    s.remove_prefix(prefix.size());
    s = Trim(s);
    return true;
  }
  return false;
}

}  // namespace

std::optional<std::string> SanitizeCandidate(std::string_view raw) {
  std::string_view s = Trim(raw);
  // Generation usually stops right after the end marker or an end-of-sequence
  // token; drop whatever follows the first of them.
  for (std::string_view stop : {kReEndMarker, std::string_view("</s>")}) {
    const std::size_t at = s.find(stop);
    if (at != std::string_view::npos) s = Trim(s.substr(0, at));
  }
  while (StripPrefix(s, kReStartMarker) || StripSuffix(s, "</s>")) {
  }
  if (s.empty() || ContainsMarker(s)) return std::nullopt;
  return std::string(s);
}

ModelClient::ModelClient(std::shared_ptr<Transport> generator,
                         std::shared_ptr<Transport> describer,
                         std::shared_ptr<Transport> embedder,
                         ClientOptions options)
    : generator_(std::move(generator)),
      describer_(std::move(describer)),
      embedder_(std::move(embedder)),
      options_(options) {}

CandidateSet ModelClient::GenerateCandidates(const PromptSequence& prompt,
                                             const Decoding& decoding,
                                             const std::string& mention_id) const {
  const json request = {{"protocol", kProtocolVersion},
                        {"prompt", prompt.ToJson()},
                        {"decoding", decoding.ToJson()},
                        {"max_length", options_.max_generation_length}};
  const json response = generator_->Post(kGeneratePath, request);
  if (!response.contains("candidates") || !response["candidates"].is_array()) {
    throw ProtocolError("/generate response lacks a candidates array");
  }
  CandidateSet out;
  out.mention_id = mention_id;
  out.decoding = decoding;
  std::set<std::string> seen;
  std::optional<double> previous_score;
  std::size_t rank = 0;
  for (const json& item : response["candidates"]) {
    const double score = item.at("score").get<double>();
    if (previous_score && score > *previous_score) {
      throw ProtocolError("/generate scores increase with beam rank");
    }
    previous_score = score;
    const std::size_t beam_rank = rank++;
    auto text = SanitizeCandidate(item.at("text").get<std::string>());
    if (!text || !seen.insert(*text).second) continue;
    out.candidates.push_back({std::move(*text), score, beam_rank});
  }
  if (out.candidates.size() > decoding.width) {
    out.candidates.resize(decoding.width);
  }
  if (out.candidates.empty()) {
    throw EmptyGeneration("no usable candidate for mention " + mention_id);
  }
  return out;
}

ReferentDescription ModelClient::DescribeReferent(const std::string& segment,
                                                  std::size_t beam_rank) const {
  if (CountMarkerPairs(segment) != 1) {
    throw PreconditionError(
        "segment must contain exactly one balanced marker pair");
  }
  const json request = {{"protocol", kProtocolVersion},
                        {"segment", segment},
                        {"max_length", options_.max_description_length}};
  const json response = describer_->Post(kDescribePath, request);
  if (!response.contains("description") ||
      !response["description"].is_string()) {
    throw ProtocolError("/describe response lacks a description string");
  }
  std::string text(Trim(response["description"].get<std::string>()));
  if (text.empty()) throw EmptyDescription("empty referent description");
  return {beam_rank, std::move(text)};
}

std::vector<EmbeddingVector> ModelClient::ParseVectors(
    const json& response, std::size_t expected) const {
  if (!response.contains("vectors") || !response["vectors"].is_array()) {
    throw ProtocolError("embedding response lacks a vectors array");
  }
  const json& vectors = response["vectors"];
  if (vectors.size() != expected) {
    throw ProtocolError("expected " + std::to_string(expected) +
                        " vectors, got " + std::to_string(vectors.size()));
  }
  std::vector<EmbeddingVector> out;
  out.reserve(expected);
  for (const json& v : vectors) {
    EmbeddingVector e;
    e.values = v.get<std::vector<double>>();
    if (!out.empty() && e.dim() != out.front().dim()) {
      throw DimensionMismatch("embedding batch mixes dimensions " +
                              std::to_string(out.front().dim()) + " and " +
                              std::to_string(e.dim()));
    }
    out.push_back(Normalize(std::move(e)));
  }
  if (!out.empty()) {
    std::size_t known = 0;
    const std::size_t dim = out.front().dim();
    if (!dimension_.compare_exchange_strong(known, dim) && known != dim) {
      throw DimensionMismatch("embedding dimension changed from " +
                              std::to_string(known) + " to " +
                              std::to_string(dim));
    }
  }
  return out;
}

std::vector<EmbeddingVector> ModelClient::EmbedTexts(
    const std::vector<std::string>& texts) const {
  if (texts.empty()) throw PreconditionError("EmbedTexts needs input");
  const json request = {{"protocol", kProtocolVersion}, {"texts", texts}};
  return ParseVectors(embedder_->Post(kEmbedTextPath, request), texts.size());
}

std::vector<EmbeddingVector> ModelClient::EmbedImages(
    const std::vector<std::string>& image_ids) const {
  if (image_ids.empty()) throw PreconditionError("EmbedImages needs input");
  const json request = {{"protocol", kProtocolVersion},
                        {"image_ids", image_ids}};
  return ParseVectors(embedder_->Post(kEmbedImagePath, request),
                      image_ids.size());
}

struct BackendServer::Impl {
  httplib::Server server;
  std::thread thread;
};

BackendServer::BackendServer(Handler handler) : impl_(std::make_unique<Impl>()) {
  for (const char* path :
       {kGeneratePath, kDescribePath, kEmbedTextPath, kEmbedImagePath}) {
    impl_->server.Post(
        path, [handler, p = std::string(path)](const httplib::Request& req,
                                               httplib::Response& res) {
          json request;
          try {
            request = json::parse(req.body);
          } catch (const json::parse_error& e) {
            res.status = 400;
            res.set_content(json{{"error", e.what()}}.dump(),
                            "application/json");
            return;
          }
          try {
            res.set_content(handler(p, request).dump(), "application/json");
          } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(json{{"error", e.what()}}.dump(),
                            "application/json");
          }
        });
  }
}

BackendServer::~BackendServer() { Stop(); }

int BackendServer::Start(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                              : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw BackendUnavailable("cannot bind " + host);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

bool BackendServer::Listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

void BackendServer::Stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace regrank
