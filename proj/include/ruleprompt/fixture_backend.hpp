#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ruleprompt/lm_backend.hpp"

namespace ruleprompt {

struct FixtureCategory {
  std::string name;
  // Planted multinomial; probabilities sum to 1.
  std::vector<std::pair<std::string, double>> distribution;
};

// Deterministic stand-in for a masked LM. Logits come from the text's own
// word frequencies blended with the planted category multinomials, embeddings
// from seeded random vectors that cluster synonyms and category words.
struct FixtureSpec {
  std::uint64_t seed = 0;
  // Optional explicit vocabulary; words from categories and synonym groups
  // not listed here are appended in order of first appearance.
  std::vector<std::string> vocabulary;
  std::vector<FixtureCategory> categories;
  std::vector<std::vector<std::string>> synonym_groups;
  double noise_level = 0.0;
  double sharpen_temperature = 0.5;
  double text_weight = 0.7;  // lambda: share of the text's own word frequencies
  double epsilon = 1e-8;
  std::size_t embedding_dim = 64;
  double category_affinity = 0.5;
  double synonym_spread = 0.05;
  // Vector length of a topic-neutral word; single-category words have length
  // 1 and the rest interpolate, so sentence means follow topical words.
  double neutral_norm = 0.1;
  bool fine_tune_capable = true;

  // Throws InvalidArgument when an invariant does not hold.
  void validate() const;
};

void to_json(nlohmann::json& j, const FixtureSpec& spec);
void from_json(const nlohmann::json& j, FixtureSpec& spec);
FixtureSpec load_fixture_spec(const std::filesystem::path& path);

// Lowercased alphanumeric runs with the mask marker removed.
std::vector<std::string> fixture_tokenize(std::string_view text);

class FixtureBackend final : public LanguageModel {
 public:
  explicit FixtureBackend(FixtureSpec spec);

  const Vocabulary& vocabulary() const override { return vocab_; }
  std::uint64_t version() const override { return version_; }
  bool supports_fine_tune() const override { return spec_.fine_tune_capable; }
  bool restore_version(std::uint64_t v) override;

  const FixtureSpec& spec() const { return spec_; }
  // Planted probability of a vocabulary word under a category.
  double planted_probability(std::size_t category, std::size_t word) const {
    return planted_[category][word];
  }
  // Multiplier applied to base logits: 1 / sharpen_temperature^version.
  double logit_scale() const { return scale_; }

 protected:
  std::vector<LogitVector> do_mask_logits(std::span<const std::string> prompts) override;
  std::vector<Embedding> do_embed_words(std::span<const std::string> words) override;
  std::vector<Embedding> do_embed_sentences(std::span<const std::string> texts) override;
  void do_fine_tune(std::span<const std::string> prompts,
                    std::span<const std::vector<double>> distributions, int epochs) override;

 private:
  LogitVector logits_for(const std::string& prompt) const;
  Embedding sentence_embedding(const std::string& text) const;
  void build_embeddings();

  FixtureSpec spec_;
  Vocabulary vocab_;
  std::vector<std::vector<double>> planted_;  // [category][word]
  std::vector<Embedding> word_vectors_;       // unit length
  std::uint64_t version_ = 0;
  double scale_ = 1.0;
};

}  // namespace ruleprompt
