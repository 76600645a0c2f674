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

#include <thread>

#include "httplib.h"
#include "regrank/errors.h"
#include "regrank/humaneval.h"

namespace regrank {

using nlohmann::json;

namespace {

void Reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// Maps service errors onto HTTP statuses with a machine-readable kind.
template <typename Fn>
void Guarded(httplib::Response& res, Fn&& fn) {
  auto fail = [&res](int status, const char* kind, const std::exception& e) {
    Reply(res, status, {{"error", kind}, {"message", e.what()}});
  };
  try {
    fn();
  } catch (const UnknownSession& e) {
    fail(404, "UnknownSession", e);
  } catch (const EligibilityViolation& e) {
    fail(403, "EligibilityViolation", e);
  } catch (const ConsentRequired& e) {
    fail(403, "ConsentRequired", e);
  } catch (const DuplicateAnswer& e) {
    fail(409, "DuplicateAnswer", e);
  } catch (const OutOfOrder& e) {
    fail(409, "OutOfOrder", e);
  } catch (const SessionComplete& e) {
    fail(409, "SessionComplete", e);
  } catch (const IncompleteSession& e) {
    fail(409, "IncompleteSession", e);
  } catch (const InvalidChoice& e) {
    fail(422, "InvalidChoice", e);
  } catch (const json::exception& e) {
    fail(400, "BadRequest", e);
  } catch (const PreconditionError& e) {
    fail(400, "BadRequest", e);
  } catch (const std::exception& e) {
    fail(500, "Internal", e);
  }
}

}  // namespace

struct HumanEvalServer::Impl {
  httplib::Server server;
  std::thread thread;
};

HumanEvalServer::HumanEvalServer(HumanEvalService& service,
                                 std::filesystem::path image_root)
    : impl_(std::make_unique<Impl>()) {
  httplib::Server& srv = impl_->server;
  HumanEvalService* svc = &service;

  srv.Post("/session", [svc](const httplib::Request& req, httplib::Response& res) {
    Guarded(res, [&] {
      const json body = json::parse(req.body);
      const Session s = svc->CreateSession(
          body.at("participant_id").get<std::string>(),
          body.at("dialogue_id").get<std::string>(),
          ParseReSource(body.at("re_source").get<std::string>()),
          body.value("seed", std::uint64_t{0}));
      Reply(res, 201, s.ToJson());
    });
  });
  srv.Post(R"(/session/([^/]+)/consent)",
           [svc](const httplib::Request& req, httplib::Response& res) {
             Guarded(res, [&] {
               Reply(res, 200, svc->GiveConsent(req.matches[1]).ToJson());
             });
           });
  srv.Get(R"(/session/([^/]+))",
          [svc](const httplib::Request& req, httplib::Response& res) {
            Guarded(res, [&] {
              Reply(res, 200, svc->GetSession(req.matches[1]).ToJson());
            });
          });
  srv.Get(R"(/session/([^/]+)/next)",
          [svc](const httplib::Request& req, httplib::Response& res) {
            Guarded(res, [&] {
              const auto item = svc->NextQuestion(req.matches[1]);
              if (!item) {
                Reply(res, 200, {{"done", true}});
                return;
              }
              json body = item->ToJson();
              body["done"] = false;
              json images = json::array();
              for (const std::string& id : item->grid) {
                const ImageRef* ref = svc->corpus().FindImage(id);
                images.push_back({{"image_id", id},
                                  {"uri", ref != nullptr ? ref->uri : ""}});
              }
              body["images"] = std::move(images);
              Reply(res, 200, body);
            });
          });
  srv.Post(R"(/session/([^/]+)/answer)",
           [svc](const httplib::Request& req, httplib::Response& res) {
             Guarded(res, [&] {
               const json body = json::parse(req.body);
               const ResponseRecord r = svc->SubmitAnswer(
                   req.matches[1], body.at("question_index").get<std::size_t>(),
                   body.at("choice").get<std::string>());
               Reply(res, 200,
                     {{"ack", true},
                      {"question_index", r.question_index},
                      {"cursor", svc->GetSession(req.matches[1]).cursor}});
             });
           });
  srv.Get(R"(/session/([^/]+)/score)",
          [svc](const httplib::Request& req, httplib::Response& res) {
            Guarded(res, [&] {
              const SessionScore s = svc->Score(req.matches[1]);
              Reply(res, 200,
                    {{"accuracy", s.accuracy},
                     {"n", s.n},
                     {"attention_pass", s.attention_pass},
                     {"attention_checks", s.attention_checks}});
            });
          });
  srv.Get("/summary", [svc](const httplib::Request&, httplib::Response& res) {
    Guarded(res, [&] {
      json rows = json::array();
      for (const SourceSummary& s : svc->SummarizeBySource()) {
        rows.push_back({{"source", ReSourceName(s.source)},
                        {"sessions", s.sessions},
                        {"mean_accuracy", s.mean_accuracy},
                        {"failed_attention", s.failed_attention}});
      }
      Reply(res, 200, rows);
    });
  });
  if (!image_root.empty()) srv.set_mount_point("/images", image_root.string());
}

HumanEvalServer::~HumanEvalServer() { Stop(); }

int HumanEvalServer::Start(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                              : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw DataError("cannot bind " + host);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

bool HumanEvalServer::Listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

void HumanEvalServer::Stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace regrank
