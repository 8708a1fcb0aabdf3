#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ruleprompt {

inline constexpr const char* kBackendUrlEnv = "RULEPROMPT_BACKEND_URL";

struct RunConfig {
  std::vector<std::string> label_names;
  std::string template_pattern = "A [MASK] news: {d}";

  std::size_t k0 = 10;   // verbalizer neighbourhood
  std::size_t k1 = 100;  // signal words
  std::size_t k2 = 20;   // strong signal words
  double h1 = 0.1;
  double h2 = 0.1;
  std::size_t s = 10;
  std::size_t t = 10;
  int iterations = 3;
  double finetune_proportion = 0.85;
  // Unit-1 keywords taken from the disjunctive sub-rule; floor(S/2), at least
  // one, unless set.
  std::optional<std::size_t> expansion_count;
  int epochs = 7;
  // Overrides the fixture spec's seed when set.
  std::optional<std::uint64_t> seed;

  // "fixture" or an http:// URL.
  std::string backend = "fixture";
  std::string fixture_spec;

  bool finetune = true;
  int max_retries = 3;
  bool use_conjunctive = true;
  bool use_clustering = true;
  bool use_unit1 = true;
  bool use_unit2 = true;
  bool use_unit3 = true;
  bool filter_stopwords = false;
  std::set<std::string> stopwords;  // empty with filter_stopwords: the default stoplist

  bool dump_signals = false;
  std::size_t batch_size = 64;
  std::size_t threads = 1;

  std::size_t effective_expansion_count() const {
    return expansion_count.value_or(std::max<std::size_t>(1, s / 2));
  }

  // Throws InvalidArgument on the first violated constraint.
  void validate() const;
};

// Applies one `key = value` setting. Keys are case-insensitive.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

// Flat key/value document: one `key = value` per line, `#` comments. A
// `dataset` key (agnews, 20news, nyt, imdb) loads that dataset's label names,
// template and settings first; `imbalanced = true` switches the support
// thresholds and fine-tune proportion to their imbalanced-data values.
// Explicit keys always win.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

// Round-trippable through parse_config.
std::string to_config_text(const RunConfig& config);

// Table of dataset presets: label names and template per dataset.
struct DatasetPreset {
  std::string name;
  std::vector<std::string> label_names;
  std::string template_pattern;
  bool imbalanced = false;
  std::optional<std::size_t> expansion_count;
  int epochs = 7;
};
const std::vector<DatasetPreset>& dataset_presets();
const DatasetPreset& dataset_preset(std::string_view name);

}  // namespace ruleprompt
