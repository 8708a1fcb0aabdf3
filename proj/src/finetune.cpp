#include "ruleprompt/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "ruleprompt/error.hpp"

namespace ruleprompt {

std::size_t subset_size(std::size_t n, double proportion) {
  if (!(proportion > 0.0 && proportion <= 1.0)) throw InvalidArgument("fine-tune proportion must be in (0, 1]");
  const double exact = proportion * static_cast<double>(n);
  auto size = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::clamp<std::size_t>(size, n == 0 ? 0 : 1, n);
}

FinetunePlan select_subset(const Corpus& corpus, std::span<const CategoryDistribution> aggregate,
                           std::span<const std::vector<double>> p1, double proportion, int epochs) {
  if (aggregate.size() != corpus.size() || p1.size() != corpus.size()) {
    throw InvalidArgument("select_subset: one distribution per text required");
  }
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (aggregate[a].confidence != aggregate[b].confidence) return aggregate[a].confidence > aggregate[b].confidence;
    return corpus[a].id < corpus[b].id;
  });
  order.resize(subset_size(corpus.size(), proportion));

  FinetunePlan plan;
  plan.proportion = proportion;
  plan.epochs = epochs;
  plan.selected = std::move(order);
  for (auto i : plan.selected) plan.distributions.push_back(p1[i]);
  return plan;
}

double entropy_loss(std::span<const std::vector<double>> distributions) {
  double loss = 0.0;
  for (const auto& d : distributions) {
    double total = 0.0;
    for (double p : d) {
      if (p < 0.0 || std::isnan(p)) throw InvalidArgument("entropy_loss: negative probability");
      total += p;
      if (p > 0.0) loss -= p * std::log(p);
    }
    if (std::abs(total - 1.0) > 1e-6) throw InvalidArgument("entropy_loss: distribution does not sum to 1");
  }
  return loss;
}

FinetuneResult run_finetune(LanguageModel& backend, const Template& tmpl, const Corpus& corpus,
                            const FinetunePlan& plan, int max_retries) {
  FinetuneResult result;
  result.loss = entropy_loss(plan.distributions);
  if (!backend.supports_fine_tune()) {
    result.message = "backend does not support fine-tuning";
    return result;
  }
  std::vector<std::string> prompts;
  prompts.reserve(plan.selected.size());
  for (auto i : plan.selected) prompts.push_back(tmpl.fill(corpus[i].text));

  for (int attempt = 1; attempt <= std::max(1, max_retries); ++attempt) {
    result.attempts = attempt;
    try {
      const auto status = backend.fine_tune(prompts, plan.distributions, plan.epochs);
      if (status == FineTuneStatus::unsupported) {
        result.message = "backend does not support fine-tuning";
        return result;
      }
      result.status = FinetuneStatus::applied;
      result.message = "applied";
      return result;
    } catch (const TransportError& e) {
      spdlog::warn("fine-tune attempt {}/{} failed: {}", attempt, max_retries, e.what());
      result.message = e.what();
    }
  }
  spdlog::warn("fine-tuning skipped after {} failed attempts; continuing rule-only", result.attempts);
  return result;
}

}  // namespace ruleprompt
