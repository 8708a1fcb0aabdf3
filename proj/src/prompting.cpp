#include "ruleprompt/prompting.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "ruleprompt/error.hpp"
#include "ruleprompt/numeric.hpp"

namespace ruleprompt {
namespace {

std::size_t count_of(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::string replace_once(std::string s, std::string_view from, std::string_view to) {
  const auto pos = s.find(from);
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

std::string collapse_spaces(const std::string& s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t') {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

}  // namespace

Template::Template(std::string pattern) : pattern_(std::move(pattern)) {
  if (count_of(pattern_, kMaskToken) != 1) {
    throw InvalidArgument("template must contain exactly one " + std::string(kMaskToken) + ": " + pattern_);
  }
  if (count_of(pattern_, kTextPlaceholder) != 1) {
    throw InvalidArgument("template must contain exactly one {d} placeholder: " + pattern_);
  }
}

std::string Template::fill(std::string_view text) const {
  if (text.empty()) throw InvalidArgument("empty text");
  return replace_once(pattern_, kTextPlaceholder, text);
}

std::string Template::fill_mask(std::string_view word) const {
  auto s = replace_once(pattern_, kTextPlaceholder, "");
  return collapse_spaces(replace_once(std::move(s), kMaskToken, word));
}

std::string fill_template(const Template& t, std::string_view text) { return t.fill(text); }

EmbeddingIndex EmbeddingIndex::build(LanguageModel& backend) {
  EmbeddingIndex index;
  index.version_ = backend.version();
  index.rows_ = backend.embed_words(backend.vocabulary().words());
  for (auto& r : index.rows_) normalize_in_place(r);
  return index;
}

VerbalizerEntry nearest_words(const EmbeddingIndex& index, const Vocabulary& vocab, const std::string& anchor,
                              const Embedding& anchor_embedding, std::size_t k0) {
  if (k0 == 0) throw InvalidArgument("nearest_words: K0 must be >= 1");
  if (k0 > index.size()) {
    throw InvalidArgument("nearest_words: K0 = " + std::to_string(k0) + " exceeds vocabulary size " +
                          std::to_string(index.size()));
  }
  auto unit = anchor_embedding;
  normalize_in_place(unit);
  std::vector<std::pair<double, std::size_t>> scored(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) scored[i] = {dot(unit, index.row(i)), i};
  auto better = [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k0), scored.end(), better);
  scored.resize(k0);

  VerbalizerEntry entry;
  entry.anchor = anchor;
  std::vector<double> sims;
  for (const auto& [s, i] : scored) sims.push_back(s);
  const auto weights = softmax(sims);
  for (std::size_t j = 0; j < scored.size(); ++j) {
    entry.neighbors.push_back({vocab.word(scored[j].second), scored[j].second, sims[j], weights[j]});
  }
  return entry;
}

VerbalizerEntry nearest_words(LanguageModel& backend, const std::string& anchor, std::size_t k0) {
  const auto index = EmbeddingIndex::build(backend);
  return nearest_words(index, backend.vocabulary(), anchor, backend.embed_word(anchor), k0);
}

double keyword_score(const VerbalizerEntry& entry, std::span<const double> logits) {
  double q = 0.0;
  for (const auto& n : entry.neighbors) q += n.weight * logits[n.index];
  return q;
}

double keyword_score(LanguageModel& backend, const VerbalizerEntry& entry, const std::string& prompt) {
  return keyword_score(entry, backend.mask_logits(std::span<const std::string>(&prompt, 1)).front());
}

double category_score(std::span<const VerbalizerEntry> keywords, std::span<const double> logits) {
  if (keywords.empty()) throw InvalidArgument("category_score: empty keyword set");
  double best = keyword_score(keywords.front(), logits);
  for (const auto& k : keywords.subspan(1)) best = std::max(best, keyword_score(k, logits));
  return best;
}

double category_score(LanguageModel& backend, std::span<const VerbalizerEntry> keywords,
                      const std::string& prompt) {
  if (keywords.empty()) throw InvalidArgument("category_score: empty keyword set");
  return category_score(keywords, backend.mask_logits(std::span<const std::string>(&prompt, 1)).front());
}

CategoryDistribution normalize_scores(std::span<const double> q) {
  for (double v : q) {
    if (!std::isfinite(v)) throw InvalidArgument("normalize_scores: non-finite score");
  }
  return CategoryDistribution::from_scores(softmax(q));
}

std::string resolve_keyword(const Vocabulary& vocab, const std::string& keyword) {
  if (vocab.contains(keyword)) return keyword;
  const auto space = keyword.find_first_of(" \t");
  if (space != std::string::npos) {
    const auto first = keyword.substr(0, space);
    if (vocab.contains(first)) {
      spdlog::warn("keyword '{}' is not a vocabulary word; using its first token '{}'", keyword, first);
      return first;
    }
  }
  throw InvalidArgument("out-of-vocabulary word: " + keyword);
}

Verbalizer::Verbalizer(LanguageModel& backend, std::size_t k0) : backend_(backend), k0_(k0) {}

void Verbalizer::refresh() {
  if (built_ && index_.version() == backend_.version()) return;
  index_ = EmbeddingIndex::build(backend_);
  built_ = true;
  cache_.clear();
}

const VerbalizerEntry& Verbalizer::entry(const std::string& keyword) {
  refresh();
  auto it = cache_.find(keyword);
  if (it != cache_.end()) return it->second;
  const auto word = resolve_keyword(backend_.vocabulary(), keyword);
  auto e = nearest_words(index_, backend_.vocabulary(), word, backend_.embed_word(word), k0_);
  return cache_.emplace(keyword, std::move(e)).first->second;
}

}  // namespace ruleprompt
