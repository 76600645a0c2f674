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

#include "regrank/corpus.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "regrank/errors.h"
#include "regrank/utf8.h"

namespace regrank {

using nlohmann::json;

std::string SpeakerName(Speaker speaker) {
  return speaker == Speaker::kA ? "A" : "B";
}

Corpus::Corpus(std::vector<ImageSet> image_sets, std::vector<Dialogue> dialogues)
    : image_sets_(std::move(image_sets)), dialogues_(std::move(dialogues)) {
  for (std::size_t s = 0; s < image_sets_.size(); ++s) {
    set_index_.emplace(image_sets_[s].set_id, s);
    for (std::size_t i = 0; i < image_sets_[s].images.size(); ++i) {
      image_index_.emplace(image_sets_[s].images[i].image_id,
                           std::make_pair(s, i));
    }
  }
  for (std::size_t d = 0; d < dialogues_.size(); ++d) {
    dialogue_index_.emplace(dialogues_[d].dialogue_id, d);
  }
}

const ImageSet* Corpus::FindSet(const std::string& set_id) const {
  auto it = set_index_.find(set_id);
  return it == set_index_.end() ? nullptr : &image_sets_[it->second];
}

const Dialogue* Corpus::FindDialogue(const std::string& dialogue_id) const {
  auto it = dialogue_index_.find(dialogue_id);
  return it == dialogue_index_.end() ? nullptr : &dialogues_[it->second];
}

const ImageRef* Corpus::FindImage(const std::string& image_id) const {
  auto it = image_index_.find(image_id);
  if (it == image_index_.end()) return nullptr;
  return &image_sets_[it->second.first].images[it->second.second];
}

namespace {

template <typename T>
T Required(const json& record, const char* key, std::size_t line) {
  auto it = record.find(key);
  if (it == record.end()) {
    throw CorpusError(std::string("missing field '") + key + "'", line);
  }
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw CorpusError(std::string("field '") + key + "': " + e.what(), line);
  }
}

Speaker ParseSpeaker(const std::string& s, std::size_t line) {
  if (s == "A") return Speaker::kA;
  if (s == "B") return Speaker::kB;
  throw CorpusError("speaker must be \"A\" or \"B\", got \"" + s + "\"", line);
}

ImageSet ParseImageSet(const json& record, std::size_t line) {
  ImageSet set;
  set.set_id = Required<std::string>(record, "set_id", line);
  set.category = Required<std::string>(record, "category", line);
  for (const json& img : Required<json>(record, "images", line)) {
    ImageRef ref;
    ref.image_id = Required<std::string>(img, "image_id", line);
    ref.set_id = set.set_id;
    ref.uri = img.value("uri", std::string());
    if (img.contains("ground_truth_description") &&
        !img["ground_truth_description"].is_null()) {
      ref.ground_truth_description =
          Required<std::string>(img, "ground_truth_description", line);
    }
    set.images.push_back(std::move(ref));
  }
  return set;
}

Dialogue ParseDialogue(const json& record, std::size_t line) {
  Dialogue d;
  d.dialogue_id = Required<std::string>(record, "dialogue_id", line);
  d.set_id = Required<std::string>(record, "set_id", line);
  d.task_description = record.value("task_description", std::string());
  for (const json& m : Required<json>(record, "messages", line)) {
    Message msg;
    msg.index = Required<std::size_t>(m, "index", line);
    msg.speaker = ParseSpeaker(Required<std::string>(m, "speaker", line), line);
    msg.text = Required<std::string>(m, "text", line);
    msg.round = Required<int>(m, "round", line);
    d.messages.push_back(std::move(msg));
  }
  if (record.contains("mentions")) {
    for (const json& m : record["mentions"]) {
      Mention mention;
      mention.mention_id = Required<std::string>(m, "mention_id", line);
      mention.dialogue_id = d.dialogue_id;
      mention.message_index = Required<std::size_t>(m, "message_index", line);
      mention.char_start = Required<std::size_t>(m, "char_start", line);
      mention.char_end = Required<std::size_t>(m, "char_end", line);
      mention.referent_image_ids =
          Required<std::vector<std::string>>(m, "referent_image_ids", line);
      if (m.contains("dialogue_id") &&
          m["dialogue_id"].get<std::string>() != d.dialogue_id) {
        throw CorpusError("mention " + mention.mention_id +
                              " names a different dialogue",
                          line);
      }
      if (mention.message_index >= d.messages.size()) {
        throw CorpusError("mention " + mention.mention_id +
                              " refers to missing message " +
                              std::to_string(mention.message_index),
                          line);
      }
      const std::string& text = d.messages[mention.message_index].text;
      const std::size_t length = utf8::Length(text);
      if (mention.char_start >= mention.char_end || mention.char_end > length) {
        throw CorpusError("mention " + mention.mention_id + " span [" +
                              std::to_string(mention.char_start) + ", " +
                              std::to_string(mention.char_end) +
                              ") invalid for message of length " +
                              std::to_string(length),
                          line);
      }
      mention.surface =
          utf8::Slice(text, mention.char_start, mention.char_end);
      if (m.contains("surface") &&
          m["surface"].get<std::string>() != mention.surface) {
        throw CorpusError("mention " + mention.mention_id +
                              " surface does not match message text",
                          line);
      }
      d.mentions.push_back(std::move(mention));
    }
  }
  if (record.contains("ranking_events")) {
    for (const json& e : record["ranking_events"]) {
      RankingEvent event;
      event.message_index = Required<std::size_t>(e, "message_index", line);
      event.image_id = Required<std::string>(e, "image_id", line);
      d.ranking_events.push_back(std::move(event));
    }
  }
  return d;
}

struct ParsedRecords {
  std::vector<ImageSet> sets;
  std::vector<Dialogue> dialogues;
};

ParsedRecords ParseRecords(const std::string& jsonl) {
  ParsedRecords out;
  std::set<std::string> set_ids, image_ids, dialogue_ids, mention_ids;
  std::vector<std::size_t> dialogue_lines;
  std::istringstream in(jsonl);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw CorpusError(std::string("malformed record: ") + e.what(), line);
    }
    if (!record.is_object()) throw CorpusError("record is not an object", line);
    const auto kind = Required<std::string>(record, "kind", line);
    if (kind == "image_set") {
      ImageSet set = ParseImageSet(record, line);
      if (!set_ids.insert(set.set_id).second) {
        throw CorpusError("duplicate set_id " + set.set_id, line);
      }
      for (const ImageRef& img : set.images) {
        if (!image_ids.insert(img.image_id).second) {
          throw CorpusError("duplicate image_id " + img.image_id, line);
        }
      }
      out.sets.push_back(std::move(set));
    } else if (kind == "dialogue") {
      Dialogue d = ParseDialogue(record, line);
      if (!dialogue_ids.insert(d.dialogue_id).second) {
        throw CorpusError("duplicate dialogue_id " + d.dialogue_id, line);
      }
      for (const Mention& m : d.mentions) {
        if (!mention_ids.insert(m.mention_id).second) {
          throw CorpusError("duplicate mention_id " + m.mention_id, line);
        }
      }
      out.dialogues.push_back(std::move(d));
      dialogue_lines.push_back(line);
    } else {
      throw CorpusError("unknown record kind \"" + kind + "\"", line);
    }
  }
  // References are resolved after all records are read so image sets may
  // appear after the dialogues that use them.
  for (std::size_t i = 0; i < out.dialogues.size(); ++i) {
    const Dialogue& d = out.dialogues[i];
    const std::size_t at = dialogue_lines[i];
    if (!set_ids.count(d.set_id)) {
      throw CorpusError("dialogue " + d.dialogue_id +
                            " references unknown image set " + d.set_id,
                        at);
    }
    for (const Mention& m : d.mentions) {
      for (const std::string& id : m.referent_image_ids) {
        if (!image_ids.count(id)) {
          throw CorpusError("mention " + m.mention_id +
                                " references unknown image " + id,
                            at);
        }
      }
    }
    for (const RankingEvent& e : d.ranking_events) {
      if (!image_ids.count(e.image_id)) {
        throw CorpusError("ranking event references unknown image " +
                              e.image_id,
                          at);
      }
    }
  }
  return out;
}

}  // namespace

Corpus ParseCorpusUnchecked(const std::string& jsonl) {
  ParsedRecords records = ParseRecords(jsonl);
  return Corpus(std::move(records.sets), std::move(records.dialogues));
}

Corpus ParseCorpus(const std::string& jsonl) {
  Corpus corpus = ParseCorpusUnchecked(jsonl);
  const std::vector<Violation> violations = ValidateCorpus(corpus);
  if (!violations.empty()) {
    std::string what = std::to_string(violations.size()) +
                       " invariant violation(s): " + violations[0].ToString();
    for (std::size_t i = 1; i < violations.size() && i < 5; ++i) {
      what += "; " + violations[i].ToString();
    }
    throw CorpusError(what);
  }
  return corpus;
}

Corpus LoadCorpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open corpus file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseCorpus(buffer.str());
}

std::string SerializeCorpus(const Corpus& corpus) {
  std::string out;
  for (const ImageSet& set : corpus.image_sets()) {
    json images = json::array();
    for (const ImageRef& img : set.images) {
      json j = {{"image_id", img.image_id}, {"uri", img.uri}};
      if (img.ground_truth_description) {
        j["ground_truth_description"] = *img.ground_truth_description;
      }
      images.push_back(std::move(j));
    }
    json record = {{"kind", "image_set"},
                   {"set_id", set.set_id},
                   {"category", set.category},
                   {"images", std::move(images)}};
    out += record.dump() + "\n";
  }
  for (const Dialogue& d : corpus.dialogues()) {
    json messages = json::array();
    for (const Message& m : d.messages) {
      messages.push_back({{"index", m.index},
                          {"speaker", SpeakerName(m.speaker)},
                          {"text", m.text},
                          {"round", m.round}});
    }
    json mentions = json::array();
    for (const Mention& m : d.mentions) {
      mentions.push_back({{"mention_id", m.mention_id},
                          {"message_index", m.message_index},
                          {"char_start", m.char_start},
                          {"char_end", m.char_end},
                          {"referent_image_ids", m.referent_image_ids},
                          {"surface", m.surface}});
    }
    json events = json::array();
    for (const RankingEvent& e : d.ranking_events) {
      events.push_back(
          {{"message_index", e.message_index}, {"image_id", e.image_id}});
    }
    json record = {{"kind", "dialogue"},
                   {"dialogue_id", d.dialogue_id},
                   {"set_id", d.set_id},
                   {"task_description", d.task_description},
                   {"messages", std::move(messages)},
                   {"mentions", std::move(mentions)},
                   {"ranking_events", std::move(events)}};
    out += record.dump() + "\n";
  }
  return out;
}

std::vector<Violation> ValidateCorpus(const Corpus& corpus) {
  std::vector<Violation> out;
  auto report = [&out](std::string type, std::string id, std::string rule) {
    out.push_back({std::move(type), std::move(id), std::move(rule)});
  };

  for (const ImageSet& set : corpus.image_sets()) {
    if (set.images.size() != kImagesPerSet) {
      report("ImageSet", set.set_id,
             "must contain exactly 9 images, has " +
                 std::to_string(set.images.size()));
    }
    if (set.category.empty()) report("ImageSet", set.set_id, "empty category");
    std::set<std::string> seen;
    for (const ImageRef& img : set.images) {
      if (!seen.insert(img.image_id).second) {
        report("ImageRef", img.image_id, "duplicate image_id within set");
      }
      if (img.set_id != set.set_id) {
        report("ImageRef", img.image_id,
               "belongs to set " + img.set_id + " but listed in " +
                   set.set_id);
      }
    }
  }

  for (const Dialogue& d : corpus.dialogues()) {
    const ImageSet* set = corpus.FindSet(d.set_id);
    if (set == nullptr) {
      report("Dialogue", d.dialogue_id, "unknown image set " + d.set_id);
    }
    auto in_set = [set](const std::string& image_id) {
      return set != nullptr &&
             std::any_of(set->images.begin(), set->images.end(),
                         [&](const ImageRef& r) { return r.image_id == image_id; });
    };

    for (std::size_t i = 0; i < d.messages.size(); ++i) {
      const Message& m = d.messages[i];
      if (m.index != i) {
        report("Message", d.dialogue_id + "#" + std::to_string(i),
               "indices must be contiguous from 0, found " +
                   std::to_string(m.index));
      }
      if (m.round < 1) {
        report("Message", d.dialogue_id + "#" + std::to_string(i),
               "round must be >= 1");
      }
      if (i > 0 && m.round < d.messages[i - 1].round) {
        report("Message", d.dialogue_id + "#" + std::to_string(i),
               "round decreases");
      }
    }

    std::map<std::size_t, std::vector<const Mention*>> by_message;
    for (const Mention& m : d.mentions) {
      if (m.dialogue_id != d.dialogue_id) {
        report("Mention", m.mention_id, "dialogue_id mismatch");
      }
      if (m.referent_image_ids.empty()) {
        report("Mention", m.mention_id, "no referent images");
      }
      for (const std::string& id : m.referent_image_ids) {
        if (!in_set(id)) {
          report("Mention", m.mention_id,
                 "cross-reference: image " + id + " is not in set " +
                     d.set_id);
        }
      }
      if (m.message_index >= d.messages.size()) {
        report("Mention", m.mention_id, "message index out of range");
        continue;
      }
      const std::string& text = d.messages[m.message_index].text;
      const std::size_t length = utf8::Length(text);
      if (!(m.char_start < m.char_end && m.char_end <= length)) {
        report("Mention", m.mention_id, "span out of bounds");
        continue;
      }
      if (utf8::Slice(text, m.char_start, m.char_end) != m.surface) {
        report("Mention", m.mention_id, "surface differs from message slice");
      }
      by_message[m.message_index].push_back(&m);
    }
    for (auto& [index, mentions] : by_message) {
      std::sort(mentions.begin(), mentions.end(),
                [](const Mention* a, const Mention* b) {
                  return a->char_start < b->char_start;
                });
      for (std::size_t i = 1; i < mentions.size(); ++i) {
        if (mentions[i]->char_start < mentions[i - 1]->char_end) {
          report("Mention", mentions[i]->mention_id,
                 "overlaps mention " + mentions[i - 1]->mention_id);
        }
      }
    }

    std::map<int, std::set<std::string>> ranked_per_round;
    std::map<int, std::size_t> events_per_round;
    for (const RankingEvent& e : d.ranking_events) {
      const std::string id =
          d.dialogue_id + "@" + std::to_string(e.message_index);
      if (e.message_index >= d.messages.size()) {
        report("RankingEvent", id, "message index out of range");
        continue;
      }
      if (!in_set(e.image_id)) {
        report("RankingEvent", id,
               "cross-reference: image " + e.image_id + " is not in set " +
                   d.set_id);
      }
      const int round = d.messages[e.message_index].round;
      ++events_per_round[round];
      if (!ranked_per_round[round].insert(e.image_id).second) {
        report("RankingEvent", id,
               "image " + e.image_id + " ranked twice in round " +
                   std::to_string(round));
      }
    }
    for (const auto& [round, count] : events_per_round) {
      if (count > kImagesPerSet) {
        report("RankingEvent", d.dialogue_id,
               "more than 9 events in round " + std::to_string(round));
      }
    }
  }
  return out;
}

std::vector<Mention> SingleImageMentions(const Corpus& corpus) {
  std::vector<Mention> out;
  for (const Dialogue& d : corpus.dialogues()) {
    for (const Mention& m : d.mentions) {
      if (m.referent_image_ids.size() == 1) out.push_back(m);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Mention& a, const Mention& b) {
    return std::tie(a.dialogue_id, a.message_index, a.char_start) <
           std::tie(b.dialogue_id, b.message_index, b.char_start);
  });
  return out;
}

}  // namespace regrank
