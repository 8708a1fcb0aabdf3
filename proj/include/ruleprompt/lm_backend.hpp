#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ruleprompt {

inline constexpr std::string_view kMaskToken = "[MASK]";

// Word-level vocabulary exposed by a backend. Never changes during the
// backend's lifetime.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  std::size_t size() const { return words_.size(); }
  const std::string& word(std::size_t i) const { return words_.at(i); }
  const std::vector<std::string>& words() const { return words_; }
  std::optional<std::size_t> find(std::string_view word) const;
  bool contains(std::string_view word) const { return find(word).has_value(); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Raw masked-position logits, one entry per vocabulary word.
using LogitVector = std::vector<double>;
using Embedding = std::vector<double>;

enum class FineTuneStatus { applied, unsupported };

std::size_t count_mask_tokens(std::string_view prompt);

// Contract every language-model provider satisfies. Public entry points check
// preconditions and forward to the do_* hooks.
//
// Reads (logits, embeddings) may run concurrently with each other. fine_tune
// must not overlap any read; the pipeline guarantees this with a phase barrier.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual const Vocabulary& vocabulary() const = 0;
  // Bumped by every applied fine-tune. Cached results are keyed on it.
  virtual std::uint64_t version() const = 0;
  virtual bool supports_fine_tune() const = 0;
  // Brings the backend to a checkpointed version. Backends that cannot
  // rewind return false unless already there.
  virtual bool restore_version(std::uint64_t v) { return v == version(); }

  // Each prompt must contain exactly one mask token.
  std::vector<LogitVector> mask_logits(std::span<const std::string> prompts);
  // Every word must be in the vocabulary.
  std::vector<Embedding> embed_words(std::span<const std::string> words);
  std::vector<Embedding> embed_sentences(std::span<const std::string> texts);
  Embedding embed_word(const std::string& word);
  Embedding embed_sentence(const std::string& text);

  // Distributions must match prompts one-to-one and each sum to 1 +- 1e-6.
  FineTuneStatus fine_tune(std::span<const std::string> prompts,
                           std::span<const std::vector<double>> distributions, int epochs);

 protected:
  virtual std::vector<LogitVector> do_mask_logits(std::span<const std::string> prompts) = 0;
  virtual std::vector<Embedding> do_embed_words(std::span<const std::string> words) = 0;
  virtual std::vector<Embedding> do_embed_sentences(std::span<const std::string> texts) = 0;
  virtual void do_fine_tune(std::span<const std::string> prompts,
                            std::span<const std::vector<double>> distributions, int epochs) = 0;
};

}  // namespace ruleprompt
