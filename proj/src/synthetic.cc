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

#include "regrank/synthetic.h"

#include <array>
#include <random>
#include <string>
#include <vector>

#include "regrank/errors.h"
#include "regrank/random.h"

namespace regrank {
namespace {

struct Category {
  const char* name;
  std::array<const char*, 3> attributes;
  std::array<const char*, 3> kinds;
  const char* task;
};

constexpr std::array<Category, 5> kCategories = {{
    {"dogs",
     {"white", "black", "brown"},
     {"husky", "poodle", "terrier"},
     "Rank these dogs by how well they would guard a house."},
    {"phones",
     {"silver", "black", "red"},
     {"nokia", "motorola", "blackberry"},
     "Rank these phones by how useful they would be on a camping trip."},
    {"cakes",
     {"chocolate", "strawberry", "lemon"},
     {"cupcake", "tart", "sponge"},
     "Rank these cakes by how well they would suit a birthday party."},
    {"cars",
     {"green", "blue", "yellow"},
     {"jeep", "van", "convertible"},
     "Rank these cars by how practical they are for a family holiday."},
    {"chairs",
     {"wooden", "leather", "plastic"},
     {"stool", "armchair", "rocker"},
     "Rank these chairs by how comfortable they would be for reading."},
}};

constexpr std::size_t kChoiceSteps = kImagesPerSet - 1;

const std::array<const char*, 4> kContentTemplates = {
    "what about {re}?", "{re} would be my pick", "i think {re} should go next",
    "hmm {re} is tricky"};
const std::array<const char*, 2> kProformTemplates = {
    "{re} seems good to me", "yes i agree {re} fits"};
const std::array<const char*, 4> kFillers = {
    "ok let me look again", "this is a hard one", "not sure yet",
    "let's keep going"};

struct ImageInfo {
  std::string id;
  std::string attribute;
  std::string kind;
};

class DialogueBuilder {
 public:
  DialogueBuilder(Dialogue& d) : d_(d) {}

  std::size_t AddMessage(std::string text, int round) {
    Message m;
    m.index = d_.messages.size();
    m.speaker = m.index % 2 == 0 ? Speaker::kA : Speaker::kB;
    m.text = std::move(text);
    m.round = round;
    d_.messages.push_back(std::move(m));
    return d_.messages.size() - 1;
  }

  void AddMention(const std::string& pattern, const std::string& surface,
                  std::vector<std::string> referents, int round) {
    const std::size_t at = pattern.find("{re}");
    std::string text = pattern;
    text.replace(at, 4, surface);
    const std::size_t index = AddMessage(std::move(text), round);
    Mention m;
    m.mention_id = d_.dialogue_id + "-m" + std::to_string(d_.mentions.size() + 1);
    m.dialogue_id = d_.dialogue_id;
    m.message_index = index;
    m.char_start = at;
    m.char_end = at + surface.size();
    m.referent_image_ids = std::move(referents);
    m.surface = surface;
    d_.mentions.push_back(std::move(m));
  }

  void AddRanking(const std::string& image_id, const std::string& text,
                  int round) {
    d_.ranking_events.push_back({AddMessage(text, round), image_id});
  }

 private:
  Dialogue& d_;
};

}  // namespace

SyntheticOptions AgosShapedOptions() {
  SyntheticOptions o;
  o.sets = 5;
  o.dialogues_per_set = 3;
  o.rounds = 3;
  o.included_mentions = 1305;
  o.stale_mentions = 14;
  o.multi_image_mentions = 30;
  o.seed = 2024;
  return o;
}

Corpus MakeSyntheticCorpus(const SyntheticOptions& options) {
  if (options.sets > kCategories.size()) {
    throw PreconditionError("at most " + std::to_string(kCategories.size()) +
                            " synthetic image sets");
  }
  if (options.rounds < 1 || options.dialogues_per_set < 1) {
    throw PreconditionError("need at least one round and one dialogue per set");
  }
  const std::size_t dialogues = options.sets * options.dialogues_per_set;

  // counts[dialogue][round][step]
  using Grid = std::vector<std::vector<std::vector<std::size_t>>>;
  auto empty_grid = [&] {
    return Grid(dialogues, std::vector<std::vector<std::size_t>>(
                               options.rounds,
                               std::vector<std::size_t>(kChoiceSteps, 0)));
  };
  Grid included = empty_grid(), stale = empty_grid(), multi = empty_grid();
  if (dialogues > 0) {
    for (std::size_t i = 0; i < options.included_mentions; ++i) {
      const std::size_t slot = i / kChoiceSteps;
      ++included[slot % dialogues][(slot / dialogues) % options.rounds]
                [i % kChoiceSteps];
    }
    for (std::size_t i = 0; i < options.stale_mentions; ++i) {
      const std::size_t slot = i / (kChoiceSteps - 1);
      ++stale[slot % dialogues][(slot / dialogues) % options.rounds]
             [1 + i % (kChoiceSteps - 1)];
    }
    for (std::size_t i = 0; i < options.multi_image_mentions; ++i) {
      ++multi[i % dialogues][(i / dialogues) % options.rounds][0];
    }
  }

  std::vector<ImageSet> sets;
  std::vector<Dialogue> out_dialogues;
  for (std::size_t s = 0; s < options.sets; ++s) {
    const Category& cat = kCategories[s];
    ImageSet set;
    set.set_id = cat.name;
    set.category = cat.name;
    std::vector<ImageInfo> infos;
    for (std::size_t i = 0; i < kImagesPerSet; ++i) {
      ImageInfo info{set.set_id + "-" + std::to_string(i + 1),
                     cat.attributes[i / 3], cat.kinds[i % 3]};
      ImageRef ref;
      ref.image_id = info.id;
      ref.set_id = set.set_id;
      ref.uri = "images/" + set.set_id + "/" + std::to_string(i + 1) + ".jpg";
      ref.ground_truth_description = "the " + info.attribute + " " + info.kind;
      set.images.push_back(std::move(ref));
      infos.push_back(std::move(info));
    }
    sets.push_back(std::move(set));

    for (std::size_t k = 0; k < options.dialogues_per_set; ++k) {
      const std::size_t g = s * options.dialogues_per_set + k;
      std::mt19937_64 rng(options.seed * 1000003ull + g);
      Dialogue d;
      d.dialogue_id = std::string(cat.name) + "-d" + std::to_string(k + 1);
      d.set_id = cat.name;
      d.task_description = cat.task;
      DialogueBuilder builder(d);
      auto pick = [&rng](auto& items) -> auto& {
        return items[UniformBelow(rng, items.size())];
      };

      for (std::size_t r = 0; r < options.rounds; ++r) {
        const int round = static_cast<int>(r + 1);
        std::vector<std::size_t> order(kImagesPerSet);
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        FisherYatesShuffle(order, rng);

        for (std::size_t step = 0; step < kImagesPerSet; ++step) {
          if (step < kChoiceSteps) {
            builder.AddMessage(pick(kFillers), round);
            std::vector<std::size_t> remaining(order.begin() + step, order.end());
            std::optional<std::size_t> previous;
            for (std::size_t m = 0; m < included[g][r][step]; ++m) {
              if (previous && UniformBelow(rng, 2) == 0) {
                const char* surface = UniformBelow(rng, 2) == 0 ? "it" : "that one";
                builder.AddMention(pick(kProformTemplates), surface,
                                   {infos[*previous].id}, round);
                continue;
              }
              const std::size_t target = pick(remaining);
              const ImageInfo& info = infos[target];
              std::string surface;
              switch (UniformBelow(rng, 3)) {
                case 0:
                  surface = "the " + info.attribute + " " + info.kind;
                  break;
                case 1:
                  surface = "the " + info.kind;
                  break;
                default:
                  surface = "the " + info.attribute + " one";
              }
              builder.AddMention(pick(kContentTemplates), surface, {info.id},
                                 round);
              previous = target;
            }
            for (std::size_t m = 0; m < stale[g][r][step]; ++m) {
              const ImageInfo& info = infos[order[UniformBelow(rng, step)]];
              builder.AddMention("glad we already placed {re}",
                                 "the " + info.attribute + " " + info.kind,
                                 {info.id}, round);
            }
            for (std::size_t m = 0; m < multi[g][r][step]; ++m) {
              const std::size_t first = UniformBelow(rng, remaining.size());
              const std::size_t second =
                  (first + 1 + UniformBelow(rng, remaining.size() - 1)) %
                  remaining.size();
              builder.AddMention("{re} look alike", "these two",
                                 {infos[remaining[first]].id,
                                  infos[remaining[second]].id},
                                 round);
            }
            builder.AddRanking(infos[order[step]].id,
                               "agreed, number " + std::to_string(step + 1) +
                                   " is settled",
                               round);
          } else {
            builder.AddRanking(infos[order[step]].id,
                               "and the last spot is decided", round);
          }
        }
      }
      out_dialogues.push_back(std::move(d));
    }
  }
  return Corpus(std::move(sets), std::move(out_dialogues));
}

}  // namespace regrank
