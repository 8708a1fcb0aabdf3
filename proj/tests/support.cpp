#include "support.hpp"

#include "ruleprompt/error.hpp"

namespace testing_support {

void ScriptedBackend::do_fine_tune(std::span<const std::string> prompts, std::span<const std::vector<double>>,
                                   int) {
  ++fine_tune_calls;
  if (fine_tune_failures > 0) {
    --fine_tune_failures;
    throw ruleprompt::TransportError("scripted failure");
  }
  last_prompts.assign(prompts.begin(), prompts.end());
  ++version_;
}

std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t k) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(k);
  double total = 0.0;
  for (auto& x : p) total += (x = e(rng));
  for (auto& x : p) x /= total;
  return p;
}

}  // namespace testing_support
