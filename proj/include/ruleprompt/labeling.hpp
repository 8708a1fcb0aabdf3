#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "ruleprompt/corpus.hpp"
#include "ruleprompt/lm_backend.hpp"
#include "ruleprompt/prompting.hpp"
#include "ruleprompt/rules.hpp"
#include "ruleprompt/signals.hpp"

namespace ruleprompt {

struct UnitScores {
  std::vector<double> p1, p2, p3;
  std::vector<double> aggregate;
};

struct UnitSelection {
  bool verbalizer = true;  // unit 1
  bool embedding = true;   // unit 2
  bool overlap = true;     // unit 3

  std::size_t count() const {
    return static_cast<std::size_t>(verbalizer) + embedding + overlap;
  }
};

// Mean of the enabled unit outputs; (p1 + p2 + p3) / 3 with all three.
// Ties in the argmax go to the lowest category index.
CategoryDistribution aggregate(std::span<const double> p1, std::span<const double> p2,
                               std::span<const double> p3, UnitSelection units = {});

// ---- unit 1 -------------------------------------------------------------

// The label name followed by the `expansion_count` highest-support
// disjunctive words; duplicates removed.
std::vector<std::string> expanded_keywords(const LogicalRule& rule, const std::string& label_name,
                                           std::size_t expansion_count);

// ---- unit 2 -------------------------------------------------------------

struct WeightedEmbedding {
  double weight = 0.0;
  Embedding vector;
};

// Support-weighted mean cosine between the text and each term; -1 for an
// empty sub-rule.
double weighted_similarity(const Embedding& text, std::span<const WeightedEmbedding> terms);

// Member embeddings mixed in proportion to their D2 item supports.
Embedding pair_embedding(const Embedding& first, double first_support, const Embedding& second,
                         double second_support);

// ---- unit 3 -------------------------------------------------------------

// "w1 and w2 and ... and wn"
std::string and_sentence(std::span<const std::string> words);

// Pairs at odd positions (1st, 3rd, ...) and at even positions, kept intact.
std::pair<std::vector<WordPair>, std::vector<WordPair>> alternate_split(std::span<const ConjunctiveTerm> terms);

std::vector<std::string> flatten(std::span<const WordPair> pairs);

// |a intersect b| / k2
double overlap_ratio(const std::set<std::string>& a, const std::set<std::string>& b, std::size_t k2);

struct OverlapScore {
  double disjunctive = 0.0;
  double conjunctive = 0.0;
  double total() const { return disjunctive + conjunctive; }
};

// --------------------------------------------------------------------------

struct LabelingOptions {
  std::size_t k1 = 100;
  std::size_t k2 = 20;
  std::size_t expansion_count = 5;
  UnitSelection units;
};

// Everything the three units need from the frozen rules of one iteration:
// unit-1 verbalizer entries, unit-2 rule embeddings and unit-3 rule-sentence
// strong signal words. Built once, then shared read-only across texts.
class RuleScorer {
 public:
  RuleScorer(LanguageModel& backend, Verbalizer& verbalizer, const Template& tmpl, const CategorySet& categories,
             std::span<const LogicalRule> rules, const CorpusAverage& average, const LabelingOptions& options);

  std::size_t num_categories() const { return keywords_.size(); }

  std::vector<double> q_scores(std::span<const double> logits) const;
  std::vector<double> unit1(std::span<const double> logits) const;
  std::vector<double> unit2(const Embedding& text_embedding) const;
  std::vector<OverlapScore> overlap_scores(const std::set<std::string>& text_ssw) const;
  std::vector<double> unit3(const std::set<std::string>& text_ssw) const;

  UnitScores score(std::span<const double> logits, const Embedding& text_embedding,
                   const std::set<std::string>& text_ssw) const;

  const std::vector<VerbalizerEntry>& keyword_entries(CategoryId c) const { return keywords_.at(c); }
  const std::set<std::string>& disjunctive_sentence_ssw(CategoryId c) const { return sentences_.at(c).disjunctive; }

 private:
  struct CategoryEmbeddings {
    std::vector<WeightedEmbedding> disjunctive;
    std::vector<WeightedEmbedding> conjunctive;
    Embedding fallback;  // g(label name), used when both sub-rules are empty
    bool use_fallback = false;
  };
  struct RuleSentences {
    bool has_disjunctive = false;
    std::set<std::string> disjunctive;
    std::vector<std::set<std::string>> conjunctive_groups;
  };

  LabelingOptions options_;
  std::vector<std::vector<VerbalizerEntry>> keywords_;
  std::vector<CategoryEmbeddings> embeddings_;
  std::vector<RuleSentences> sentences_;
};

}  // namespace ruleprompt
