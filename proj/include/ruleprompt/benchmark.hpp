#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ruleprompt/config.hpp"
#include "ruleprompt/corpus.hpp"
#include "ruleprompt/fixture_backend.hpp"
#include "ruleprompt/rules.hpp"

namespace ruleprompt {

// A weak pair planted in `owner`; each member also occurs alone in one other
// category, so neither word identifies the owner by itself.
struct PlantedPair {
  WordPair pair;
  CategoryId owner = 0;
  CategoryId first_shadow = 0;
  CategoryId second_shadow = 0;
};

struct BenchmarkOptions {
  std::uint64_t seed = 7;
  std::size_t texts_per_category = 200;
  // Texts per category drawn only to estimate the planted distributions.
  std::size_t reference_texts_per_category = 5000;
  std::size_t min_length = 30;
  std::size_t max_length = 45;
  double strong_rate = 0.55;      // per strong word, share of its category's texts
  double pair_rate = 0.25;        // share of owner texts carrying the planted pair
  double shadow_rate = 0.06;      // share of shadow-category texts with one lone pair word
  double off_topic_share = 0.3;  // filler tokens drawn from another category
  double background_share = 0.35;
  double filler_share = 0.1;
  double seed_share = 0.25;  // on-topic tokens that are the label name or a synonym
  // In texts carrying their category's pair, the share of strong and on-topic
  // tokens withheld, so the pair is the main evidence there.
  double pair_focus = 0.7;
  double noise_level = 0.05;
  // Copied into the fixture spec.
  double sharpen_temperature = 0.99;
  double category_affinity = 4.0;
};

// Synthetic four-topic corpus plus a fixture spec whose planted multinomials
// are per-category token frequencies of a large independent reference sample.
struct Benchmark {
  std::vector<std::string> label_names;
  FixtureSpec spec;
  std::vector<TextRecord> records;
  std::vector<std::vector<std::string>> strong_words;  // per category
  // Every word generated as on-topic for a category: label name, synonyms,
  // strong and topical words. Pair words are not included.
  std::vector<std::vector<std::string>> topic_words;
  std::vector<PlantedPair> pairs;

  Corpus corpus() const { return Corpus(records); }
};

Benchmark make_benchmark(const BenchmarkOptions& options = {});

// Default run settings with the benchmark's label names filled in.
RunConfig benchmark_config(const Benchmark& benchmark);

}  // namespace ruleprompt
