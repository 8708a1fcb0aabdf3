#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ruleprompt/config.hpp"
#include "ruleprompt/corpus.hpp"
#include "ruleprompt/finetune.hpp"
#include "ruleprompt/labeling.hpp"
#include "ruleprompt/lm_backend.hpp"
#include "ruleprompt/rules.hpp"

namespace ruleprompt {

struct IterationSummary {
  int iteration = 0;
  std::optional<Metrics> metrics;
  std::string finetune = "none";  // none | applied | skipped | disabled
  double entropy_loss = 0.0;
  std::uint64_t backend_version = 0;
};

// Pseudo labels and rules after `iteration` completed iterations. Rules of
// version i come from labels of version i-1; labels of version i from rules
// of version i.
struct PipelineState {
  int iteration = 0;
  std::vector<CategoryDistribution> labels;
  std::vector<LogicalRule> rules;
  std::uint64_t backend_version = 0;
  std::vector<IterationSummary> history;  // iteration 0 (initialisation) onwards
};

nlohmann::json state_to_json(const PipelineState& state, const Corpus& corpus, const CategorySet& categories);
PipelineState state_from_json(const nlohmann::json& j, const Corpus& corpus);

struct PipelineResult {
  PipelineState state;
  // Unit outputs of the final iteration, one per text.
  std::vector<UnitScores> units;
  std::optional<Metrics> metrics;
};

// Drives initialisation and the rule-mining / pseudo-labelling / fine-tuning
// loop. When an output directory is given every iteration leaves
// rules_iter{i}.json, predictions_iter{i}.jsonl, checkpoint_iter{i}.json
// (plus signals_iter{i}.jsonl if enabled) and a running metrics.json.
class Pipeline {
 public:
  Pipeline(RunConfig config, const Corpus& corpus, LanguageModel& backend,
           std::optional<std::filesystem::path> out_dir = std::nullopt);

  // Label names only: NPPrompt scoring with one keyword per category.
  PipelineState initialize();
  // One full iteration from `state`.
  void step(PipelineState& state, std::vector<UnitScores>* units = nullptr);
  // Runs to config.iterations, starting fresh or from a checkpoint.
  PipelineResult run(std::optional<PipelineState> resume = std::nullopt);

  const CategorySet& categories() const { return categories_; }

 private:
  struct SignalPass;

  SignalPass extract_signals();
  const std::vector<Embedding>& text_embeddings();
  std::optional<Metrics> metrics_for(const std::vector<CategoryDistribution>& labels) const;
  void write_iteration(const PipelineState& state, const std::vector<UnitScores>* units, const SignalPass* signals);
  void write_metrics(const PipelineState& state);

  RunConfig config_;
  const Corpus& corpus_;
  LanguageModel& backend_;
  std::optional<std::filesystem::path> out_dir_;
  CategorySet categories_;
  Template template_;
  Verbalizer verbalizer_;
  std::vector<std::string> prompts_;
  std::optional<std::uint64_t> embeddings_version_;
  std::vector<Embedding> embeddings_;
};

// Builds the backend a config describes: "fixture" (spec from
// config.fixture_spec) or an http:// URL. The RULEPROMPT_BACKEND_URL
// environment variable, when set, replaces the configured backend.
std::unique_ptr<LanguageModel> make_backend(const RunConfig& config);

// Loads the state saved by a previous run.
PipelineState load_checkpoint(const std::filesystem::path& path, const Corpus& corpus);

enum class SweepParameter { iterations, rule_size, k2 };
SweepParameter sweep_parameter_from_string(const std::string& name);
std::string to_string(SweepParameter p);

struct SweepRow {
  double value = 0.0;
  std::optional<Metrics> metrics;
};

struct SweepReport {
  SweepParameter parameter = SweepParameter::iterations;
  std::vector<SweepRow> rows;

  void print(std::ostream& os) const;
  nlohmann::json to_json() const;
};

// One fresh run per value; each run gets its own backend from `make` and,
// with an output directory, its own subdirectory <param>_<value>.
SweepReport sweep(const RunConfig& config, const Corpus& corpus, SweepParameter parameter,
                  const std::vector<double>& values, const std::function<std::unique_ptr<LanguageModel>()>& make,
                  const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace ruleprompt
