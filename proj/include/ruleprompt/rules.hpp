#pragma once

#include <compare>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ruleprompt/corpus.hpp"

namespace ruleprompt {

// One text's strong signal words, treated as an itemset.
struct Transaction {
  std::size_t text = 0;  // corpus position
  std::vector<std::string> items;
};

struct ScoredText {
  std::size_t text = 0;  // corpus position
  double confidence = 0.0;
};

// Excellent / good / poor texts of one category, each sorted by confidence
// descending.
struct Partition {
  std::vector<ScoredText> d1, d2, d3;
};

struct ItemSupport {
  std::string word;
  double support = 0.0;

  bool operator==(const ItemSupport&) const = default;
};

// Unordered word pair stored with its members in lexicographic order.
struct WordPair {
  std::string first, second;

  static WordPair of(std::string a, std::string b);
  bool contains(const std::string& w) const { return first == w || second == w; }
  auto operator<=>(const WordPair&) const = default;
};

struct PairSupport {
  WordPair pair;
  double support = 0.0;

  bool operator==(const PairSupport&) const = default;
};

struct DisjunctiveTerm {
  std::string word;
  double support = 0.0;  // in D1
};

struct ConjunctiveTerm {
  WordPair pair;
  double support = 0.0;         // pair support in D2
  double first_support = 0.0;   // item support of pair.first in D2
  double second_support = 0.0;  // item support of pair.second in D2
};

// DNF rule of a category: (a_1 or ... or a_S) or ((b_11 and b_12) or ...).
struct LogicalRule {
  CategoryId category = 0;
  std::vector<DisjunctiveTerm> disjunctive;
  std::vector<ConjunctiveTerm> conjunctive;
  // Set when mining produced nothing and the label name stands in alone.
  bool fallback = false;
  // Other categories' label names removed from this rule.
  std::vector<std::string> excluded_label_words;
  // Pairs dropped because a member is frequent in another category's D2.
  std::vector<WordPair> excluded_pairs;

  bool empty() const { return disjunctive.empty() && conjunctive.empty(); }
};

// Gap between the two largest entries. Requires at least two entries.
double confidence(std::span<const double> distribution);

// Three-way 1-D k-means on confidence scores, solved exactly. With fewer than
// three distinct scores the highest value goes to d1 and the next to d2.
Partition partition_by_confidence(std::span<const ScoredText> scores);

// Within-cluster sum of squared deviations, summed over the three sets.
double partition_sse(const Partition& p);

// Words whose support is at least `threshold`, sorted by support descending
// then word.
std::vector<ItemSupport> mine_frequent_items(std::span<const Transaction> transactions, double threshold);
// Co-occurring pairs with support at least `threshold`; nothing longer.
std::vector<PairSupport> mine_frequent_pairs(std::span<const Transaction> transactions, double threshold);

// Drops pairs with a member in `conflicting_words`.
std::vector<PairSupport> filter_conflicting_pairs(std::span<const PairSupport> pairs,
                                                  const std::set<std::string>& conflicting_words,
                                                  std::vector<WordPair>* dropped = nullptr);
// Union of the frequent words of every category except `self`.
std::set<std::string> conflicting_words(std::span<const std::vector<ItemSupport>> d2_items_by_category,
                                        CategoryId self);

// Top-S items and top-T pairs (inputs sorted as mined). `d2_items` supplies the
// member supports stored with each pair. Falls back to the label name when
// both sub-rules would be empty.
LogicalRule compose_rule(CategoryId category, const std::string& label_name, std::span<const ItemSupport> items,
                         std::span<const PairSupport> pairs, std::span<const ItemSupport> d2_items, std::size_t s,
                         std::size_t t);

struct RuleMiningOptions {
  double h1 = 0.1;
  double h2 = 0.1;
  std::size_t s = 10;
  std::size_t t = 10;
  bool use_clustering = true;   // false: mine both sub-rules from every text of the category
  bool use_conjunctive = true;  // false: conjunctive sub-rules are left empty
};

struct CategoryMining {
  Partition partition;
  std::vector<ItemSupport> d1_items;
  std::vector<ItemSupport> d2_items;
  std::vector<PairSupport> d2_pairs;
};

struct RuleSet {
  std::vector<LogicalRule> rules;        // one per category
  std::vector<CategoryMining> mining;    // diagnostics, one per category
};

// Mines one rule per category from pseudo-labelled, confidence-scored texts.
// `transactions[i]` belongs to corpus text i.
RuleSet mine_rules(const CategorySet& categories, std::span<const CategoryDistribution> labels,
                   std::span<const Transaction> transactions, const RuleMiningOptions& options);

}  // namespace ruleprompt
