#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ruleprompt/lm_backend.hpp"
#include "ruleprompt/prompting.hpp"

namespace ruleprompt {

struct ScoredWord {
  std::string word;
  std::size_t index = 0;  // vocabulary position
  double score = 0.0;
};

// Top-K1 vocabulary words at the mask, ranked by logit, scored by probability.
struct SignalWords {
  std::string text_id;
  std::vector<ScoredWord> words;
};

// Top-K2 signal words re-ranked by probability over corpus-average probability.
struct StrongSignalWords {
  std::string text_id;
  std::vector<ScoredWord> words;

  std::set<std::string> word_set() const;
};

inline constexpr double kAverageFloor = 1e-12;

// Ties in logit break by vocabulary order.
SignalWords signal_words_from_logits(std::string text_id, std::span<const double> logits,
                                     const Vocabulary& vocab, std::size_t k1);
SignalWords signal_words(LanguageModel& backend, const Template& t, const std::string& text_id,
                         const std::string& text, std::size_t k1);

// Elementwise mean of masked-position probability vectors over the corpus,
// tagged with the backend version it was computed at.
class CorpusAverage {
 public:
  CorpusAverage() = default;
  CorpusAverage(std::uint64_t version, std::size_t vocab_size);

  void add(std::span<const double> probabilities);
  // Divides the running sum by the number of texts added. Requires >= 1 text.
  void finalize();

  std::uint64_t version() const { return version_; }
  std::size_t count() const { return count_; }
  const std::vector<double>& values() const { return values_; }
  // Throws when the backend has moved on since this average was computed.
  void check_current(const LanguageModel& backend) const;

 private:
  std::uint64_t version_ = 0;
  std::size_t count_ = 0;
  bool finalized_ = false;
  std::vector<double> values_;
};

CorpusAverage corpus_average(std::span<const std::vector<double>> probabilities, std::uint64_t version);

// Ties in specialised score keep the signal-word order.
StrongSignalWords strong_signal_words(const SignalWords& sw, const CorpusAverage& avg, std::size_t k2);

// Articles and bare punctuation tokens.
std::set<std::string> default_stoplist();

}  // namespace ruleprompt
