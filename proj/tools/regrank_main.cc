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

// Command-line entry point: validate, run, baseline, tables,
// serve-humaneval, plus synth and mock-backend for building offline
// fixtures.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 backend error.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "regrank/backends.h"
#include "regrank/corpus.h"
#include "regrank/errors.h"
#include "regrank/harness.h"
#include "regrank/humaneval.h"
#include "regrank/mock_model.h"
#include "regrank/synthetic.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitBackend = 3;

std::string EnvOr(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

std::vector<regrank::Strategy> ParseStrategies(const std::string& list) {
  std::vector<regrank::Strategy> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(regrank::ParseStrategy(item));
  }
  return out;
}

struct RunArgs {
  std::string corpus;
  std::string out = "report.json";
  std::string tables;
  std::string lengths_csv;
  std::string decoding = "beam";
  std::size_t beam_width = 6;
  std::string strategies = "Top1,MaxDisc,Rerank";
  double w_tim = 2.0 / 3.0;
  double w_itm = -1;  // derived from w_tim unless given
  double epsilon = 1e-9;
  double logit_scale = 100.0;
  std::size_t window = regrank::kDefaultWindowSize;
  std::size_t shots = 0;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  std::string aggregation = "macro";
  std::string replay_mode = "off";
  std::string replay_file;
  bool mock = false;
  std::size_t mock_dimension = 64;
  std::string generator_url;
  std::string describer_url;
  std::string embedder_url;
  bool timing = false;
};

int Run(const RunArgs& args) {
  using namespace regrank;
  const Corpus corpus = LoadCorpus(args.corpus);

  RunConfig config;
  config.decoding = args.decoding == "greedy" ? Decoding::Greedy()
                                              : Decoding::Beam(args.beam_width);
  if (args.decoding != "greedy" && args.decoding != "beam") {
    throw PreconditionError("decoding must be greedy or beam");
  }
  config.strategies = ParseStrategies(args.strategies);
  config.pooling = {args.w_tim, args.w_itm < 0 ? 1.0 - args.w_tim : args.w_itm,
                    args.epsilon, args.logit_scale};
  config.window_size = args.window;
  config.shots = args.shots;
  config.seed = args.seed;
  config.parallelism = args.parallelism;
  config.aggregation = args.aggregation == "micro" ? FoldAggregation::kMicro
                                                   : FoldAggregation::kMacro;
  config.replay_mode = ParseReplayMode(args.replay_mode);
  config.replay_path = args.replay_file;
  config.record_timing = args.timing;
  config.Validate();

  std::shared_ptr<ReplayCache> cache;
  if (config.replay_mode != ReplayMode::kOff) {
    if (args.replay_file.empty()) {
      throw PreconditionError("--replay-file is required with --replay-mode");
    }
    cache = std::make_shared<ReplayCache>(args.replay_file);
  }

  std::shared_ptr<Transport> mock;
  if (args.mock) {
    auto model = std::make_shared<MockModel>(
        MockModel::FromCorpus(corpus, args.mock_dimension));
    mock = std::make_shared<FunctionTransport>(
        [model](const std::string& path, const nlohmann::json& request) {
          return model->Handle(path, request);
        });
  }
  auto role = [&](const char* name, const std::string& flag,
                  const char* env) -> std::shared_ptr<Transport> {
    std::shared_ptr<Transport> inner = mock;
    std::string label = "mock";
    if (!inner) {
      const std::string url = flag.empty() ? EnvOr(env, "") : flag;
      if (!url.empty()) {
        inner = std::make_shared<HttpTransport>(url);
        label = url;
      } else if (config.replay_mode == ReplayMode::kReplay) {
        label = "replay";
      } else {
        throw PreconditionError(std::string("no endpoint for the ") + name +
                                " role: pass a URL, set " + env +
                                ", or use --mock");
      }
    }
    config.endpoints[name] = label;
    if (config.replay_mode == ReplayMode::kOff) return inner;
    return std::make_shared<CachingTransport>(inner, cache, config.replay_mode);
  };
  auto generator = role("generator", args.generator_url, kGeneratorUrlEnv);
  auto describer = role("describer", args.describer_url, kDescriberUrlEnv);
  auto embedder = role("embedder", args.embedder_url, kEmbedderUrlEnv);
  const ModelClient client(generator, describer, embedder);

  const RunReport report = RunExperiment(corpus, config, client);
  if (config.replay_mode == ReplayMode::kRecord) cache->Save();
  EmitReport(report, args.out);
  if (!args.tables.empty()) EmitTables(report, args.tables);
  if (!args.lengths_csv.empty()) {
    std::ofstream(args.lengths_csv) << RenderLengthData(report);
  }
  std::cerr << "samples: " << report.tallies.total << " total, "
            << report.tallies.included << " included, "
            << report.tallies.excluded << " excluded, "
            << report.tallies.failed << " failed\n";
  if (report.tallies.failed > 0 && report.tallies.included == 0) {
    return kExitBackend;
  }
  return 0;
}

int Validate(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw regrank::CorpusError("cannot open corpus file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const regrank::Corpus corpus = regrank::ParseCorpusUnchecked(buffer.str());
  const auto violations = regrank::ValidateCorpus(corpus);
  for (const auto& v : violations) std::cout << v.ToString() << "\n";
  const auto single = regrank::SingleImageMentions(corpus);
  std::cout << corpus.image_sets().size() << " image sets, "
            << corpus.dialogues().size() << " dialogues, " << single.size()
            << " single-image mentions, " << violations.size()
            << " violation(s)\n";
  return violations.empty() ? 0 : kExitData;
}

regrank::HumanEvalServer* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate-and-rerank REG evaluation harness"};
  app.require_subcommand(1);

  std::string corpus_path;

  auto* validate = app.add_subcommand("validate", "Check a corpus file");
  validate->add_option("--corpus", corpus_path, "Corpus JSONL")->required();

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Cross-validated evaluation run");
  run->add_option("--corpus", run_args.corpus, "Corpus JSONL")->required();
  run->add_option("--out", run_args.out, "Report JSON path");
  run->add_option("--tables", run_args.tables, "Markdown tables path");
  run->add_option("--lengths-csv", run_args.lengths_csv,
                  "RE length data for plotting");
  run->add_option("--decoding", run_args.decoding, "greedy or beam")
      ->check(CLI::IsMember({"greedy", "beam"}));
  run->add_option("--beam-width", run_args.beam_width, "Beam width");
  run->add_option("--strategies", run_args.strategies,
                  "Comma list of Top1, MaxDisc, Rerank (may be empty)");
  run->add_option("--w-tim", run_args.w_tim, "Weight on log TIM");
  run->add_option("--w-itm", run_args.w_itm,
                  "Weight on log ITM (default 1 - w-tim)");
  run->add_option("--epsilon", run_args.epsilon, "Constant inside ln");
  run->add_option("--logit-scale", run_args.logit_scale,
                  "Similarity multiplier before softmax");
  run->add_option("--window", run_args.window, "Prior messages in context");
  run->add_option("--shots", run_args.shots, "0 = plain prompt, 1..8 = n-shot");
  run->add_option("--seed", run_args.seed, "Recorded run seed");
  run->add_option("--parallelism", run_args.parallelism,
                  "Concurrent mentions per fold");
  run->add_option("--aggregation", run_args.aggregation, "macro or micro")
      ->check(CLI::IsMember({"macro", "micro"}));
  run->add_option("--replay-mode", run_args.replay_mode, "off, record or replay")
      ->check(CLI::IsMember({"off", "record", "replay"}));
  run->add_option("--replay-file", run_args.replay_file, "Replay cache JSONL");
  run->add_flag("--mock", run_args.mock, "Use the in-process mock backends");
  run->add_option("--mock-dimension", run_args.mock_dimension,
                  "Mock embedding dimension");
  run->add_option("--generator-url", run_args.generator_url,
                  std::string("Generator base URL (env ") +
                      regrank::kGeneratorUrlEnv + ")");
  run->add_option("--describer-url", run_args.describer_url,
                  std::string("Describer base URL (env ") +
                      regrank::kDescriberUrlEnv + ")");
  run->add_option("--embedder-url", run_args.embedder_url,
                  std::string("Embedder base URL (env ") +
                      regrank::kEmbedderUrlEnv + ")");
  run->add_flag("--timing", run_args.timing, "Record wall-clock time");

  std::size_t trials = 10000;
  std::uint64_t seed = 0;
  auto* baseline = app.add_subcommand("baseline", "Random-guess TIR accuracy");
  baseline->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
  baseline->add_option("--trials", trials, "Monte-Carlo trials");
  baseline->add_option("--seed", seed, "RNG seed");

  std::string report_path, tables_out;
  auto* tables = app.add_subcommand("tables", "Render tables from a report");
  tables->add_option("--report", report_path, "Report JSON")->required();
  tables->add_option("--out", tables_out, "Output path (default stdout)");

  std::string checks_path, greedy_report, rerank_report, log_path, images_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve-humaneval",
                                   "Serve the human evaluation API");
  serve->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
  serve->add_option("--attention-checks", checks_path, "Attention checks JSONL");
  serve->add_option("--greedy-report", greedy_report,
                    "Report whose Top1 selections supply greedy REs");
  serve->add_option("--rerank-report", rerank_report,
                    "Report whose Rerank selections supply reranked REs");
  serve->add_option("--log", log_path, "Append-only session log");
  serve->add_option("--images", images_dir, "Directory served at /images");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");

  std::string synth_out, preset = "small";
  regrank::SyntheticOptions synth_options;
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus");
  synth->add_option("--out", synth_out, "Corpus JSONL")->required();
  synth->add_option("--preset", preset, "agos, small or custom")
      ->check(CLI::IsMember({"agos", "small", "custom"}));
  synth->add_option("--sets", synth_options.sets);
  synth->add_option("--dialogues-per-set", synth_options.dialogues_per_set);
  synth->add_option("--rounds", synth_options.rounds);
  synth->add_option("--included", synth_options.included_mentions);
  synth->add_option("--stale", synth_options.stale_mentions);
  synth->add_option("--multi", synth_options.multi_image_mentions);
  synth->add_option("--seed", synth_options.seed);

  std::size_t mock_dimension = 64;
  auto* mock = app.add_subcommand("mock-backend",
                                  "Serve the mock model over HTTP");
  mock->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
  mock->add_option("--host", host, "Bind address");
  mock->add_option("--port", port, "Port");
  mock->add_option("--dimension", mock_dimension, "Embedding dimension");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*validate) return Validate(corpus_path);
    if (*run) return Run(run_args);
    if (*baseline) {
      const regrank::Corpus corpus = regrank::LoadCorpus(corpus_path);
      std::cout << "monte_carlo "
                << regrank::RandomGuessBaseline(corpus, trials, seed)
                << "\nanalytic " << regrank::AnalyticChance(corpus) << "\n";
      return 0;
    }
    if (*tables) {
      const regrank::RunReport report = regrank::ReadReport(report_path);
      if (tables_out.empty()) {
        std::cout << regrank::RenderTables(report);
      } else {
        regrank::EmitTables(report, tables_out);
      }
      return 0;
    }
    if (*serve) {
      const regrank::Corpus corpus = regrank::LoadCorpus(corpus_path);
      std::vector<regrank::AttentionCheck> checks;
      if (!checks_path.empty()) checks = regrank::LoadAttentionChecks(checks_path);
      std::map<regrank::ReSource, std::map<std::string, std::string>> res;
      if (!greedy_report.empty()) {
        res[regrank::ReSource::kGreedy] = regrank::SelectedResFromReport(
            regrank::ReadReport(greedy_report), regrank::Strategy::kTop1);
      }
      if (!rerank_report.empty()) {
        res[regrank::ReSource::kRerank] = regrank::SelectedResFromReport(
            regrank::ReadReport(rerank_report), regrank::Strategy::kRerank);
      }
      regrank::HumanEvalService service(corpus, std::move(checks),
                                        std::move(res), log_path);
      regrank::HumanEvalServer server(service, images_dir);
      g_server = &server;
      std::signal(SIGINT, [](int) {
        if (g_server != nullptr) g_server->Stop();
      });
      std::cerr << "serving on " << host << ":" << port << "\n";
      return server.Listen(host, port) ? 0 : kExitData;
    }
    if (*synth) {
      regrank::SyntheticOptions options = synth_options;
      if (preset == "agos") options = regrank::AgosShapedOptions();
      if (preset == "small") {
        options = regrank::SyntheticOptions{};
        options.rounds = 1;
        options.included_mentions = 60;
        options.stale_mentions = 3;
        options.multi_image_mentions = 2;
      }
      std::ofstream(synth_out) << regrank::SerializeCorpus(
          regrank::MakeSyntheticCorpus(options));
      return 0;
    }
    if (*mock) {
      const regrank::Corpus corpus = regrank::LoadCorpus(corpus_path);
      auto model = std::make_shared<regrank::MockModel>(
          regrank::MockModel::FromCorpus(corpus, mock_dimension));
      regrank::BackendServer server(
          [model](const std::string& path, const nlohmann::json& request) {
            return model->Handle(path, request);
          });
      std::cerr << "mock backend on " << host << ":" << port << "\n";
      return server.Listen(host, port) ? 0 : kExitBackend;
    }
  } catch (const regrank::BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const regrank::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const regrank::Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
