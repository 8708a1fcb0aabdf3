#pragma once

#include <span>
#include <string>
#include <vector>

#include "ruleprompt/corpus.hpp"
#include "ruleprompt/lm_backend.hpp"
#include "ruleprompt/prompting.hpp"

namespace ruleprompt {

struct FinetunePlan {
  std::vector<std::size_t> selected;  // corpus positions, highest confidence first
  double proportion = 0.85;
  int epochs = 7;
  std::vector<std::vector<double>> distributions;  // p1 of each selected text
};

// ceil(proportion * n), computed without floating-point overshoot.
std::size_t subset_size(std::size_t n, double proportion);

// Highest aggregate confidence first; ties by text id.
FinetunePlan select_subset(const Corpus& corpus, std::span<const CategoryDistribution> aggregate,
                           std::span<const std::vector<double>> p1, double proportion, int epochs);

// Sum over texts of the Shannon entropy of each distribution (0 log 0 = 0).
double entropy_loss(std::span<const std::vector<double>> distributions);

enum class FinetuneStatus { applied, skipped };

struct FinetuneResult {
  FinetuneStatus status = FinetuneStatus::skipped;
  int attempts = 0;
  double loss = 0.0;  // entropy of the shipped distributions
  std::string message;
};

// Ships prompts and p1 targets to the backend. An unsupported backend or
// exhausted retries leave the iteration rule-only.
FinetuneResult run_finetune(LanguageModel& backend, const Template& tmpl, const Corpus& corpus,
                            const FinetunePlan& plan, int max_retries = 3);

}  // namespace ruleprompt
