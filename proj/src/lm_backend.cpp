#include "ruleprompt/lm_backend.hpp"

#include <cmath>

#include "ruleprompt/error.hpp"

namespace ruleprompt {

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i].empty()) throw InvalidArgument("vocabulary contains an empty word");
    if (!index_.emplace(words_[i], i).second) {
      throw InvalidArgument("duplicate vocabulary word: " + words_[i]);
    }
  }
}

std::optional<std::size_t> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t count_mask_tokens(std::string_view prompt) {
  std::size_t count = 0;
  for (auto pos = prompt.find(kMaskToken); pos != std::string_view::npos;
       pos = prompt.find(kMaskToken, pos + kMaskToken.size())) {
    ++count;
  }
  return count;
}

std::vector<LogitVector> LanguageModel::mask_logits(std::span<const std::string> prompts) {
  if (prompts.empty()) return {};
  for (const auto& p : prompts) {
    const auto n = count_mask_tokens(p);
    if (n != 1) {
      throw InvalidArgument("prompt must contain exactly one " + std::string(kMaskToken) +
                            " marker, found " + std::to_string(n) + ": \"" + p + "\"");
    }
  }
  auto out = do_mask_logits(prompts);
  if (out.size() != prompts.size()) throw TransportError("backend returned wrong number of logit rows");
  for (const auto& row : out) {
    if (row.size() != vocabulary().size()) throw TransportError("logit row width does not match vocabulary");
    for (double v : row) {
      if (!std::isfinite(v)) throw TransportError("backend returned a non-finite logit");
    }
  }
  return out;
}

std::vector<Embedding> LanguageModel::embed_words(std::span<const std::string> words) {
  if (words.empty()) return {};
  for (const auto& w : words) {
    if (!vocabulary().contains(w)) throw InvalidArgument("out-of-vocabulary word: " + w);
  }
  auto out = do_embed_words(words);
  if (out.size() != words.size()) throw TransportError("backend returned wrong number of embeddings");
  return out;
}

std::vector<Embedding> LanguageModel::embed_sentences(std::span<const std::string> texts) {
  if (texts.empty()) return {};
  for (const auto& t : texts) {
    if (t.empty()) throw InvalidArgument("cannot embed an empty sentence");
  }
  auto out = do_embed_sentences(texts);
  if (out.size() != texts.size()) throw TransportError("backend returned wrong number of embeddings");
  return out;
}

Embedding LanguageModel::embed_word(const std::string& word) {
  return embed_words(std::span<const std::string>(&word, 1)).front();
}

Embedding LanguageModel::embed_sentence(const std::string& text) {
  return embed_sentences(std::span<const std::string>(&text, 1)).front();
}

FineTuneStatus LanguageModel::fine_tune(std::span<const std::string> prompts,
                                        std::span<const std::vector<double>> distributions,
                                        int epochs) {
  if (prompts.size() != distributions.size()) {
    throw InvalidArgument("fine_tune: " + std::to_string(prompts.size()) + " prompts vs " +
                          std::to_string(distributions.size()) + " distributions");
  }
  if (prompts.empty()) throw InvalidArgument("fine_tune: no texts");
  if (epochs < 1) throw InvalidArgument("fine_tune: epochs must be >= 1");
  for (const auto& d : distributions) {
    double total = 0.0;
    for (double p : d) {
      if (!(p >= 0.0)) throw InvalidArgument("fine_tune: negative or NaN probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) throw InvalidArgument("fine_tune: distribution does not sum to 1");
  }
  if (!supports_fine_tune()) return FineTuneStatus::unsupported;
  do_fine_tune(prompts, distributions, epochs);
  return FineTuneStatus::applied;
}

}  // namespace ruleprompt
