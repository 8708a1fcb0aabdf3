#include "ruleprompt/signals.hpp"

#include <algorithm>
#include <numeric>

#include "ruleprompt/error.hpp"
#include "ruleprompt/numeric.hpp"

namespace ruleprompt {

std::set<std::string> StrongSignalWords::word_set() const {
  std::set<std::string> out;
  for (const auto& w : words) out.insert(w.word);
  return out;
}

SignalWords signal_words_from_logits(std::string text_id, std::span<const double> logits,
                                     const Vocabulary& vocab, std::size_t k1) {
  if (k1 > vocab.size()) {
    throw InvalidArgument("K1 = " + std::to_string(k1) + " exceeds vocabulary size " + std::to_string(vocab.size()));
  }
  const auto probs = softmax(logits);
  std::vector<std::size_t> order(logits.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k1), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return logits[a] != logits[b] ? logits[a] > logits[b] : a < b;
                    });
  SignalWords sw;
  sw.text_id = std::move(text_id);
  sw.words.reserve(k1);
  for (std::size_t j = 0; j < k1; ++j) sw.words.push_back({vocab.word(order[j]), order[j], probs[order[j]]});
  return sw;
}

SignalWords signal_words(LanguageModel& backend, const Template& t, const std::string& text_id,
                         const std::string& text, std::size_t k1) {
  const auto prompt = t.fill(text);
  const auto logits = backend.mask_logits(std::span<const std::string>(&prompt, 1)).front();
  return signal_words_from_logits(text_id, logits, backend.vocabulary(), k1);
}

CorpusAverage::CorpusAverage(std::uint64_t version, std::size_t vocab_size)
    : version_(version), values_(vocab_size, 0.0) {}

void CorpusAverage::add(std::span<const double> probabilities) {
  if (finalized_) throw InvalidArgument("corpus average already finalized");
  if (probabilities.size() != values_.size()) throw InvalidArgument("corpus average: width mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += probabilities[i];
  ++count_;
}

void CorpusAverage::finalize() {
  if (count_ == 0) throw InvalidArgument("corpus average over zero texts");
  if (finalized_) return;
  const double n = static_cast<double>(count_);
  for (auto& v : values_) v /= n;
  finalized_ = true;
}

void CorpusAverage::check_current(const LanguageModel& backend) const {
  if (!finalized_) throw InvalidArgument("corpus average not finalized");
  if (version_ != backend.version()) {
    throw InvalidArgument("stale corpus average: computed at backend version " + std::to_string(version_) +
                          ", backend is at " + std::to_string(backend.version()));
  }
}

CorpusAverage corpus_average(std::span<const std::vector<double>> probabilities, std::uint64_t version) {
  if (probabilities.empty()) throw InvalidArgument("corpus average over zero texts");
  CorpusAverage avg(version, probabilities.front().size());
  for (const auto& p : probabilities) avg.add(p);
  avg.finalize();
  return avg;
}

StrongSignalWords strong_signal_words(const SignalWords& sw, const CorpusAverage& avg, std::size_t k2) {
  if (k2 > sw.words.size()) {
    throw InvalidArgument("K2 = " + std::to_string(k2) + " exceeds the " + std::to_string(sw.words.size()) +
                          " signal-word candidates");
  }
  const auto& mean = avg.values();
  std::vector<ScoredWord> specialised;
  specialised.reserve(sw.words.size());
  for (const auto& w : sw.words) {
    specialised.push_back({w.word, w.index, w.score / std::max(mean.at(w.index), kAverageFloor)});
  }
  std::stable_sort(specialised.begin(), specialised.end(),
                   [](const ScoredWord& a, const ScoredWord& b) { return a.score > b.score; });
  specialised.resize(k2);
  return {sw.text_id, std::move(specialised)};
}

std::set<std::string> default_stoplist() {
  return {"a",  "an", "the", ".", ",", ";", ":", "!", "?", "'", "\"", "-", "(", ")", "...", "s",
          "'s", "of", "and", "to", "in", "<s>", "</s>"};
}

}  // namespace ruleprompt
