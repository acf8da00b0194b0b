#pragma once

// Synthetic corpora with planted structure, shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "augimodels/augtree.hpp"
#include "augimodels/corpus.hpp"
#include "augimodels/embed.hpp"
#include "augimodels/llmclient.hpp"
#include "augimodels/rng.hpp"
#include "helpers.hpp"

namespace planted {

inline const std::vector<std::string> kFiller = {
    "the",    "movie",  "plot",   "was",    "a",      "story",  "acting", "film",   "scene",  "cast",
    "it",     "and",    "of",     "this",   "with",   "ending", "script", "music",  "an",     "very",
    "director", "show", "we",     "saw",    "its",    "cinema", "pace",   "tone",   "set",    "role",
    "lead",   "drama",  "comedy", "frame",  "shot",   "night",  "day",    "one",    "two",    "some"};

// Lexical sets for the additive model: train and test use disjoint synonyms.
inline const std::vector<std::string> kGamPosTrain = {"good", "fine", "solid", "great", "nice"};
inline const std::vector<std::string> kGamPosTest = {"pleasing", "satisfactory", "outstanding", "worthy",
                                                     "valuable"};
inline const std::vector<std::string> kGamNegTrain = {"bad", "poor", "awful", "nasty", "vile"};
inline const std::vector<std::string> kGamNegTest = {"unpleasant", "dire", "terrible", "dreadful",
                                                     "horrible"};

// Lexical sets for trees: a frequent seed word plus rarer synonyms that the
// replayed expansions propose.
inline const std::vector<std::string> kTreePosRare = {"fine",         "solid",       "worthy",  "pleasing",
                                                      "satisfactory", "outstanding", "valuable"};
inline const std::vector<std::string> kTreeNegRare = {"unpleasant", "dire",  "terrible", "vile",
                                                      "nasty",      "poor",  "atrocious"};

inline std::string pick(aug::Rng& rng, const std::vector<std::string>& words) {
  return words[static_cast<std::size_t>(rng.below(words.size()))];
}

inline std::string make_doc(aug::Rng& rng, const std::string& marker, std::size_t filler) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < filler; ++i) words.push_back(pick(rng, kFiller));
  words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size() + 1)), marker);
  std::string doc;
  for (std::size_t i = 0; i < words.size(); ++i) doc += (i ? " " : "") + words[i];
  return doc;
}

inline aug::LabeledCorpus empty_binary() {
  aug::LabeledCorpus c;
  c.classes = {"negative", "positive"};
  return c;
}

/// Train documents carry one train-set synonym, test documents one test-set
/// synonym; the label is the synonym's polarity.
inline aug::LabeledCorpus gam_synonym_corpus(std::uint64_t seed, std::size_t n_train = 200,
                                             std::size_t n_test = 200) {
  aug::Rng rng(seed);
  auto c = empty_binary();
  auto add = [&](std::size_t n, aug::Split split, const auto& pos, const auto& neg) {
    for (std::size_t i = 0; i < n; ++i) {
      const bool positive = rng.below(2) == 1;
      c.add(make_doc(rng, pick(rng, positive ? pos : neg), 6), positive ? "positive" : "negative", split);
    }
  };
  add(n_train, aug::Split::Train, kGamPosTrain, kGamNegTrain);
  add(n_test, aug::Split::Test, kGamPosTest, kGamNegTest);
  return c;
}

/// Stub embeddings, except that every planted synonym points along +u or -u
/// (plus a little noise) for a shared direction u.
inline std::shared_ptr<aug::embed::OverlayProvider> gam_synonym_provider(std::uint64_t seed,
                                                                         std::size_t dim = 32,
                                                                         double noise = 0.3) {
  auto base = std::make_shared<aug::embed::StubProvider>(dim, seed);
  const auto u = base->vector_for("__direction__");
  std::map<std::string, aug::embed::EmbeddingVector> overrides;
  auto plant = [&](const std::vector<std::string>& words, double sign) {
    for (const auto& w : words) {
      const auto n = base->vector_for("__noise__" + w);
      aug::embed::EmbeddingVector v(dim);
      double norm = 0;
      for (std::size_t i = 0; i < dim; ++i) {
        v[i] = sign * u[i] + noise * n[i];
        norm += v[i] * v[i];
      }
      for (auto& x : v) x /= std::sqrt(norm);
      overrides[w] = v;
    }
  };
  plant(kGamPosTrain, 1.0);
  plant(kGamPosTest, 1.0);
  plant(kGamNegTrain, -1.0);
  plant(kGamNegTest, -1.0);
  return std::make_shared<aug::embed::OverlayProvider>(base, overrides);
}

/// Training documents mostly use the seed words "good"/"bad"; test documents
/// mostly use the rarer synonyms. `label_noise` flips training labels.
inline aug::LabeledCorpus tree_synonym_corpus(std::uint64_t seed, std::size_t n_train = 240,
                                              std::size_t n_test = 200, double label_noise = 0.05) {
  aug::Rng rng(seed);
  auto c = empty_binary();
  auto add = [&](std::size_t n, aug::Split split, double seed_rate, double noise) {
    for (std::size_t i = 0; i < n; ++i) {
      const bool positive = rng.below(2) == 1;
      const bool use_seed = rng.uniform() < seed_rate;
      const auto word = use_seed ? std::string(positive ? "good" : "bad")
                                 : pick(rng, positive ? kTreePosRare : kTreeNegRare);
      const bool flip = rng.uniform() < noise;
      c.add(make_doc(rng, word, 5), (positive != flip) ? "positive" : "negative", split);
    }
  };
  add(n_train, aug::Split::Train, 0.6, label_noise);
  add(n_test, aug::Split::Test, 0.2, 0.0);
  return c;
}

/// Stores every completion fixture under the key its default-template
/// request hashes to, so a replay client answers for these seeds.
inline std::vector<std::string> install_completion_fixtures(
    const std::filesystem::path& replay_dir,
    std::string_view prompt_template = aug::tree::kDefaultPromptTemplate) {
  aug::llm::ReplayStore store(replay_dir);
  std::vector<std::string> seeds;
  for (const auto& entry : std::filesystem::directory_iterator(testutil::fixture_dir() / "completions")) {
    const auto seed = entry.path().stem().string();
    aug::llm::CompletionRequest req;
    req.prompt = aug::tree::format_prompt(prompt_template, seed);
    store.put(req, testutil::slurp(entry.path()));
    seeds.push_back(seed);
  }
  std::sort(seeds.begin(), seeds.end());
  return seeds;
}

inline std::shared_ptr<aug::llm::Client> replay_client(const std::filesystem::path& replay_dir) {
  aug::llm::Client::Options opt;
  opt.mode = aug::llm::Mode::Replay;
  opt.replay_dir = replay_dir;
  return std::make_shared<aug::llm::Client>(opt);
}

}  // namespace planted
