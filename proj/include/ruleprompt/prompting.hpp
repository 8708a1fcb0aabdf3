#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ruleprompt/corpus.hpp"
#include "ruleprompt/lm_backend.hpp"

namespace ruleprompt {

// Cloze template with one mask marker and one text placeholder, e.g.
// "A [MASK] news: {d}".
class Template {
 public:
  static constexpr std::string_view kTextPlaceholder = "{d}";

  explicit Template(std::string pattern);

  const std::string& pattern() const { return pattern_; }
  // Substitutes the text verbatim; the mask marker is left for the backend.
  std::string fill(std::string_view text) const;
  // The template with the text removed and the mask replaced by `word`.
  std::string fill_mask(std::string_view word) const;

 private:
  std::string pattern_;
};

std::string fill_template(const Template& t, std::string_view text);

struct Neighbor {
  std::string word;
  std::size_t index = 0;  // vocabulary position
  double similarity = 0.0;
  double weight = 0.0;
};

// Nearest-neighbour verbalizer for one keyword: top-K0 words by cosine
// similarity with softmax weights over those similarities.
struct VerbalizerEntry {
  std::string anchor;
  std::vector<Neighbor> neighbors;
};

// Unit-normalised embeddings of the whole vocabulary at one backend version.
class EmbeddingIndex {
 public:
  static EmbeddingIndex build(LanguageModel& backend);

  std::uint64_t version() const { return version_; }
  std::size_t size() const { return rows_.size(); }
  const Embedding& row(std::size_t i) const { return rows_[i]; }

 private:
  std::uint64_t version_ = 0;
  std::vector<Embedding> rows_;
};

// Ties in similarity break by vocabulary order.
VerbalizerEntry nearest_words(const EmbeddingIndex& index, const Vocabulary& vocab, const std::string& anchor,
                              const Embedding& anchor_embedding, std::size_t k0);
VerbalizerEntry nearest_words(LanguageModel& backend, const std::string& anchor, std::size_t k0);

// Q(v|d): weighted sum of masked-position logits over the entry's neighbours.
double keyword_score(const VerbalizerEntry& entry, std::span<const double> logits);
double keyword_score(LanguageModel& backend, const VerbalizerEntry& entry, const std::string& prompt);

// Q(z|d): max keyword score over the category's keyword set.
double category_score(std::span<const VerbalizerEntry> keywords, std::span<const double> logits);
double category_score(LanguageModel& backend, std::span<const VerbalizerEntry> keywords,
                      const std::string& prompt);

// Softmax over category scores with label and confidence attached.
CategoryDistribution normalize_scores(std::span<const double> q);

// Maps a keyword onto the vocabulary. Multi-word keywords that the backend
// does not know fall back to their first token with a warning.
std::string resolve_keyword(const Vocabulary& vocab, const std::string& keyword);

// Memoises verbalizer entries per backend version.
class Verbalizer {
 public:
  Verbalizer(LanguageModel& backend, std::size_t k0);

  const VerbalizerEntry& entry(const std::string& keyword);
  std::size_t k0() const { return k0_; }

 private:
  void refresh();

  LanguageModel& backend_;
  std::size_t k0_;
  EmbeddingIndex index_;
  bool built_ = false;
  std::map<std::string, VerbalizerEntry> cache_;
};

}  // namespace ruleprompt
