#include "ruleprompt/labeling.hpp"

#include <algorithm>
#include <map>

#include "ruleprompt/error.hpp"
#include "ruleprompt/numeric.hpp"

namespace ruleprompt {

CategoryDistribution aggregate(std::span<const double> p1, std::span<const double> p2, std::span<const double> p3,
                               UnitSelection units) {
  if (units.count() == 0) throw InvalidArgument("aggregate: every unit is disabled");
  const auto k = units.verbalizer ? p1.size() : units.embedding ? p2.size() : p3.size();
  if ((units.verbalizer && p1.size() != k) || (units.embedding && p2.size() != k) ||
      (units.overlap && p3.size() != k)) {
    throw InvalidArgument("aggregate: unit outputs differ in length");
  }
  std::vector<double> mean(k, 0.0);
  const double n = static_cast<double>(units.count());
  for (std::size_t z = 0; z < k; ++z) {
    double s = 0.0;
    if (units.verbalizer) s += p1[z];
    if (units.embedding) s += p2[z];
    if (units.overlap) s += p3[z];
    mean[z] = s / n;
  }
  return CategoryDistribution::from_scores(std::move(mean));
}

std::vector<std::string> expanded_keywords(const LogicalRule& rule, const std::string& label_name,
                                           std::size_t expansion_count) {
  std::vector<std::string> out{label_name};
  for (const auto& term : rule.disjunctive) {
    if (out.size() > expansion_count) break;
    if (std::find(out.begin(), out.end(), term.word) == out.end()) out.push_back(term.word);
  }
  return out;
}

double weighted_similarity(const Embedding& text, std::span<const WeightedEmbedding> terms) {
  if (terms.empty()) return -1.0;
  double s = 0.0;
  for (const auto& t : terms) s += t.weight * cosine(text, t.vector);
  return s / static_cast<double>(terms.size());
}

Embedding pair_embedding(const Embedding& first, double first_support, const Embedding& second,
                         double second_support) {
  if (first.size() != second.size()) throw InvalidArgument("pair_embedding: dimension mismatch");
  const double total = first_support + second_support;
  const double a = total > 0.0 ? first_support / total : 0.5;
  const double b = total > 0.0 ? second_support / total : 0.5;
  Embedding out(first.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * first[i] + b * second[i];
  return out;
}

std::string and_sentence(std::span<const std::string> words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += " and ";
    out += w;
  }
  return out;
}

std::pair<std::vector<WordPair>, std::vector<WordPair>> alternate_split(std::span<const ConjunctiveTerm> terms) {
  std::pair<std::vector<WordPair>, std::vector<WordPair>> out;
  for (std::size_t i = 0; i < terms.size(); ++i) (i % 2 == 0 ? out.first : out.second).push_back(terms[i].pair);
  return out;
}

std::vector<std::string> flatten(std::span<const WordPair> pairs) {
  std::vector<std::string> out;
  for (const auto& p : pairs) {
    out.push_back(p.first);
    out.push_back(p.second);
  }
  return out;
}

double overlap_ratio(const std::set<std::string>& a, const std::set<std::string>& b, std::size_t k2) {
  if (k2 == 0) throw InvalidArgument("overlap_ratio: K2 must be >= 1");
  std::size_t shared = 0;
  for (const auto& w : a) shared += b.contains(w);
  return static_cast<double>(shared) / static_cast<double>(k2);
}

RuleScorer::RuleScorer(LanguageModel& backend, Verbalizer& verbalizer, const Template& tmpl,
                       const CategorySet& categories, std::span<const LogicalRule> rules,
                       const CorpusAverage& average, const LabelingOptions& options)
    : options_(options) {
  const auto k = categories.size();
  if (rules.size() != k) throw InvalidArgument("RuleScorer: need one rule per category");
  average.check_current(backend);

  // Unit 1 is always built: its output also drives fine-tuning.
  keywords_.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    for (const auto& kw : expanded_keywords(rules[c], categories[c].label_name, options_.expansion_count)) {
      keywords_[c].push_back(verbalizer.entry(kw));
    }
  }

  embeddings_.resize(k);
  if (options_.units.embedding) {
    // g(w) for every rule word, one batched request.
    std::map<std::string, Embedding> g;
    for (std::size_t c = 0; c < k; ++c) {
      g[categories[c].label_name];
      for (const auto& t : rules[c].disjunctive) g[t.word];
      for (const auto& t : rules[c].conjunctive) {
        g[t.pair.first];
        g[t.pair.second];
      }
    }
    std::vector<std::string> sentences;
    for (const auto& [w, _] : g) sentences.push_back(tmpl.fill_mask(w));
    auto vectors = backend.embed_sentences(sentences);
    std::size_t i = 0;
    for (auto& [w, v] : g) v = std::move(vectors[i++]);

    for (std::size_t c = 0; c < k; ++c) {
      auto& e = embeddings_[c];
      for (const auto& t : rules[c].disjunctive) e.disjunctive.push_back({t.support, g.at(t.word)});
      for (const auto& t : rules[c].conjunctive) {
        e.conjunctive.push_back({t.support, pair_embedding(g.at(t.pair.first), t.first_support,
                                                           g.at(t.pair.second), t.second_support)});
      }
      e.use_fallback = rules[c].empty();
      e.fallback = g.at(categories[c].label_name);
    }
  }

  sentences_.resize(k);
  if (options_.units.overlap) {
    // Rule sentences go through the template in place of the text.
    std::vector<std::string> prompts;
    std::vector<std::pair<std::size_t, int>> owner;  // (category, -1 disjunctive | group index)
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<std::string> words;
      for (const auto& t : rules[c].disjunctive) words.push_back(t.word);
      if (!words.empty()) {
        prompts.push_back(tmpl.fill(and_sentence(words)));
        owner.emplace_back(c, -1);
      }
      const auto [g1, g2] = alternate_split(rules[c].conjunctive);
      int group = 0;
      for (const auto* grp : {&g1, &g2}) {
        if (!grp->empty()) {
          prompts.push_back(tmpl.fill(and_sentence(flatten(*grp))));
          owner.emplace_back(c, group);
        }
        ++group;
      }
    }
    const auto logits = backend.mask_logits(prompts);
    for (std::size_t p = 0; p < prompts.size(); ++p) {
      const auto sw = signal_words_from_logits("", logits[p], backend.vocabulary(), options_.k1);
      auto ssw = strong_signal_words(sw, average, options_.k2).word_set();
      auto& s = sentences_[owner[p].first];
      if (owner[p].second < 0) {
        s.has_disjunctive = true;
        s.disjunctive = std::move(ssw);
      } else {
        s.conjunctive_groups.push_back(std::move(ssw));
      }
    }
  }
}

std::vector<double> RuleScorer::q_scores(std::span<const double> logits) const {
  std::vector<double> q;
  q.reserve(keywords_.size());
  for (const auto& entries : keywords_) q.push_back(category_score(entries, logits));
  return q;
}

std::vector<double> RuleScorer::unit1(std::span<const double> logits) const {
  const auto q = q_scores(logits);
  return softmax(q);
}

std::vector<double> RuleScorer::unit2(const Embedding& text_embedding) const {
  std::vector<double> p2;
  p2.reserve(embeddings_.size());
  for (const auto& e : embeddings_) {
    if (e.use_fallback) {
      p2.push_back(cosine(text_embedding, e.fallback));
      continue;
    }
    p2.push_back(std::max(weighted_similarity(text_embedding, e.disjunctive),
                          weighted_similarity(text_embedding, e.conjunctive)));
  }
  return p2;
}

std::vector<OverlapScore> RuleScorer::overlap_scores(const std::set<std::string>& text_ssw) const {
  std::vector<OverlapScore> out;
  out.reserve(sentences_.size());
  for (const auto& s : sentences_) {
    OverlapScore o;
    if (s.has_disjunctive) o.disjunctive = overlap_ratio(text_ssw, s.disjunctive, options_.k2);
    for (const auto& g : s.conjunctive_groups) {
      o.conjunctive = std::max(o.conjunctive, overlap_ratio(text_ssw, g, options_.k2));
    }
    out.push_back(o);
  }
  return out;
}

std::vector<double> RuleScorer::unit3(const std::set<std::string>& text_ssw) const {
  std::vector<double> os;
  for (const auto& o : overlap_scores(text_ssw)) os.push_back(o.total());
  return softmax(os);
}

UnitScores RuleScorer::score(std::span<const double> logits, const Embedding& text_embedding,
                             const std::set<std::string>& text_ssw) const {
  UnitScores s;
  const auto k = num_categories();
  s.p1 = unit1(logits);
  s.p2 = options_.units.embedding ? unit2(text_embedding) : std::vector<double>(k, 0.0);
  s.p3 = options_.units.overlap ? unit3(text_ssw) : std::vector<double>(k, 0.0);
  s.aggregate = aggregate(s.p1, s.p2, s.p3, options_.units).scores;
  return s;
}

}  // namespace ruleprompt
