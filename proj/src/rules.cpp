#include "ruleprompt/rules.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "ruleprompt/error.hpp"

namespace ruleprompt {
namespace {

void check_threshold(double h, const char* what) {
  if (!(h > 0.0 && h <= 1.0)) throw InvalidArgument(std::string(what) + " must be in (0, 1]");
}

// Weighted points sorted by value descending; segment costs from centred
// prefix sums.
class SegmentCost {
 public:
  SegmentCost(const std::vector<double>& values, const std::vector<double>& weights) {
    double mean = 0.0, total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      mean += values[i] * weights[i];
      total += weights[i];
    }
    mean /= total;
    w_.assign(values.size() + 1, 0.0);
    s1_.assign(values.size() + 1, 0.0);
    s2_.assign(values.size() + 1, 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double x = values[i] - mean;
      w_[i + 1] = w_[i] + weights[i];
      s1_[i + 1] = s1_[i] + weights[i] * x;
      s2_[i + 1] = s2_[i] + weights[i] * x * x;
    }
  }

  // SSE of points [begin, end).
  double operator()(std::size_t begin, std::size_t end) const {
    const double w = w_[end] - w_[begin];
    if (w <= 0.0) return 0.0;
    const double s1 = s1_[end] - s1_[begin];
    return std::max(0.0, (s2_[end] - s2_[begin]) - s1 * s1 / w);
  }

 private:
  std::vector<double> w_, s1_, s2_;
};

// Optimal split of m points into k non-empty contiguous segments, by dynamic
// programming with divide-and-conquer over the monotone split points.
std::vector<std::size_t> optimal_splits(const SegmentCost& cost, std::size_t m, std::size_t k) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  // best[j][e]: min cost of points [0, e) in j+1 segments; arg[j][e]: start of the last one.
  std::vector<std::vector<double>> best(k, std::vector<double>(m + 1, inf));
  std::vector<std::vector<std::size_t>> arg(k, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t e = 1; e <= m; ++e) best[0][e] = cost(0, e);

  for (std::size_t j = 1; j < k; ++j) {
    auto solve = [&](auto&& self, std::size_t lo, std::size_t hi, std::size_t opt_lo, std::size_t opt_hi) -> void {
      if (lo > hi) return;
      const std::size_t mid = lo + (hi - lo) / 2;
      double best_val = inf;
      std::size_t best_arg = opt_lo;
      const std::size_t upper = std::min(opt_hi, mid - 1);
      for (std::size_t s = opt_lo; s <= upper; ++s) {
        const double v = best[j - 1][s] + cost(s, mid);
        if (v < best_val) {
          best_val = v;
          best_arg = s;
        }
      }
      best[j][mid] = best_val;
      arg[j][mid] = best_arg;
      if (mid > lo) self(self, lo, mid - 1, opt_lo, best_arg);
      self(self, mid + 1, hi, best_arg, opt_hi);
    };
    solve(solve, j + 1, m, j, m - 1);
  }

  std::vector<std::size_t> starts(k, 0);
  std::size_t end = m;
  for (std::size_t j = k; j-- > 1;) {
    starts[j] = arg[j][end];
    end = starts[j];
  }
  return starts;
}

std::vector<std::set<std::string>> as_sets(std::span<const Transaction> transactions) {
  std::vector<std::set<std::string>> out;
  out.reserve(transactions.size());
  for (const auto& t : transactions) out.emplace_back(t.items.begin(), t.items.end());
  return out;
}

}  // namespace

WordPair WordPair::of(std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

double confidence(std::span<const double> distribution) {
  if (distribution.size() < 2) throw InvalidArgument("confidence needs at least two categories");
  double top1 = -std::numeric_limits<double>::infinity();
  double top2 = top1;
  for (double v : distribution) {
    if (v > top1) {
      top2 = top1;
      top1 = v;
    } else if (v > top2) {
      top2 = v;
    }
  }
  return top1 - top2;
}

Partition partition_by_confidence(std::span<const ScoredText> scores) {
  if (scores.empty()) throw InvalidArgument("partition_by_confidence: no texts");
  std::vector<ScoredText> sorted(scores.begin(), scores.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredText& a, const ScoredText& b) { return a.confidence > b.confidence; });

  // Distinct values with the range of sorted positions they cover.
  std::vector<double> values, weights;
  std::vector<std::size_t> first_pos;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (values.empty() || sorted[i].confidence != values.back()) {
      values.push_back(sorted[i].confidence);
      weights.push_back(0.0);
      first_pos.push_back(i);
    }
    weights.back() += 1.0;
  }
  first_pos.push_back(sorted.size());

  Partition p;
  auto take = [&](std::vector<ScoredText>& dst, std::size_t from_value, std::size_t to_value) {
    dst.assign(sorted.begin() + static_cast<std::ptrdiff_t>(first_pos[from_value]),
               sorted.begin() + static_cast<std::ptrdiff_t>(first_pos[to_value]));
  };
  const auto m = values.size();
  if (m < 3) {
    take(p.d1, 0, 1);
    if (m == 2) take(p.d2, 1, 2);
    return p;
  }
  const auto starts = optimal_splits(SegmentCost(values, weights), m, 3);
  take(p.d1, 0, starts[1]);
  take(p.d2, starts[1], starts[2]);
  take(p.d3, starts[2], m);
  return p;
}

double partition_sse(const Partition& p) {
  double total = 0.0;
  for (const auto* set : {&p.d1, &p.d2, &p.d3}) {
    if (set->empty()) continue;
    double mean = 0.0;
    for (const auto& s : *set) mean += s.confidence;
    mean /= static_cast<double>(set->size());
    for (const auto& s : *set) total += (s.confidence - mean) * (s.confidence - mean);
  }
  return total;
}

std::vector<ItemSupport> mine_frequent_items(std::span<const Transaction> transactions, double threshold) {
  check_threshold(threshold, "item support threshold");
  if (transactions.empty()) return {};
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& items : as_sets(transactions)) {
    for (const auto& w : items) ++counts[w];
  }
  const double n = static_cast<double>(transactions.size());
  std::vector<ItemSupport> out;
  for (const auto& [w, c] : counts) {
    const double support = static_cast<double>(c) / n;
    if (support >= threshold) out.push_back({w, support});
  }
  std::sort(out.begin(), out.end(), [](const ItemSupport& a, const ItemSupport& b) {
    return a.support != b.support ? a.support > b.support : a.word < b.word;
  });
  return out;
}

std::vector<PairSupport> mine_frequent_pairs(std::span<const Transaction> transactions, double threshold) {
  check_threshold(threshold, "pair support threshold");
  if (transactions.empty()) return {};
  // A pair can only be frequent if both members are.
  const auto frequent = mine_frequent_items(transactions, threshold);
  std::unordered_map<std::string, std::uint32_t> id;
  std::vector<std::string> word_of;
  std::vector<std::string> lexical;
  for (const auto& f : frequent) lexical.push_back(f.word);
  std::sort(lexical.begin(), lexical.end());
  for (const auto& w : lexical) {
    id.emplace(w, static_cast<std::uint32_t>(word_of.size()));
    word_of.push_back(w);
  }

  std::unordered_map<std::uint64_t, std::size_t> counts;
  std::vector<std::uint32_t> present;
  for (const auto& items : as_sets(transactions)) {
    present.clear();
    for (const auto& w : items) {
      if (auto it = id.find(w); it != id.end()) present.push_back(it->second);
    }
    std::sort(present.begin(), present.end());
    for (std::size_t i = 0; i < present.size(); ++i) {
      for (std::size_t j = i + 1; j < present.size(); ++j) {
        ++counts[(static_cast<std::uint64_t>(present[i]) << 32) | present[j]];
      }
    }
  }
  const double n = static_cast<double>(transactions.size());
  std::vector<PairSupport> out;
  for (const auto& [key, c] : counts) {
    const double support = static_cast<double>(c) / n;
    if (support < threshold) continue;
    out.push_back({WordPair{word_of[key >> 32], word_of[key & 0xFFFFFFFFULL]}, support});
  }
  std::sort(out.begin(), out.end(), [](const PairSupport& a, const PairSupport& b) {
    return a.support != b.support ? a.support > b.support : a.pair < b.pair;
  });
  return out;
}

std::vector<PairSupport> filter_conflicting_pairs(std::span<const PairSupport> pairs,
                                                  const std::set<std::string>& conflicting,
                                                  std::vector<WordPair>* dropped) {
  std::vector<PairSupport> out;
  for (const auto& p : pairs) {
    if (conflicting.contains(p.pair.first) || conflicting.contains(p.pair.second)) {
      if (dropped) dropped->push_back(p.pair);
    } else {
      out.push_back(p);
    }
  }
  return out;
}

std::set<std::string> conflicting_words(std::span<const std::vector<ItemSupport>> d2_items_by_category,
                                        CategoryId self) {
  std::set<std::string> out;
  for (std::size_t c = 0; c < d2_items_by_category.size(); ++c) {
    if (c == self) continue;
    for (const auto& i : d2_items_by_category[c]) out.insert(i.word);
  }
  return out;
}

LogicalRule compose_rule(CategoryId category, const std::string& label_name, std::span<const ItemSupport> items,
                         std::span<const PairSupport> pairs, std::span<const ItemSupport> d2_items, std::size_t s,
                         std::size_t t) {
  if (s < 1 || t < 1) throw InvalidArgument("rule sizes S and T must be >= 1");
  std::vector<ItemSupport> sorted_items(items.begin(), items.end());
  std::stable_sort(sorted_items.begin(), sorted_items.end(), [](const ItemSupport& a, const ItemSupport& b) {
    return a.support != b.support ? a.support > b.support : a.word < b.word;
  });
  std::vector<PairSupport> sorted_pairs(pairs.begin(), pairs.end());
  std::stable_sort(sorted_pairs.begin(), sorted_pairs.end(), [](const PairSupport& a, const PairSupport& b) {
    return a.support != b.support ? a.support > b.support : a.pair < b.pair;
  });

  LogicalRule rule;
  rule.category = category;
  std::unordered_set<std::string> seen;
  for (const auto& i : sorted_items) {
    if (rule.disjunctive.size() == s) break;
    if (seen.insert(i.word).second) rule.disjunctive.push_back({i.word, i.support});
  }
  auto d2_support = [&](const std::string& w) {
    for (const auto& i : d2_items) {
      if (i.word == w) return i.support;
    }
    return 0.0;
  };
  std::set<WordPair> seen_pairs;
  for (const auto& p : sorted_pairs) {
    if (rule.conjunctive.size() == t) break;
    if (p.pair.first == p.pair.second || !seen_pairs.insert(p.pair).second) continue;
    rule.conjunctive.push_back({p.pair, p.support, d2_support(p.pair.first), d2_support(p.pair.second)});
  }
  if (rule.empty()) {
    rule.disjunctive.push_back({label_name, 1.0});
    rule.fallback = true;
  }
  return rule;
}

RuleSet mine_rules(const CategorySet& categories, std::span<const CategoryDistribution> labels,
                   std::span<const Transaction> transactions, const RuleMiningOptions& options) {
  check_threshold(options.h1, "h1");
  check_threshold(options.h2, "h2");
  if (labels.size() != transactions.size()) throw InvalidArgument("mine_rules: labels and transactions differ in length");
  const auto k = categories.size();

  std::vector<std::vector<ScoredText>> assigned(k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    assigned.at(labels[i].pseudo_label).push_back({i, labels[i].confidence});
  }

  RuleSet out;
  out.mining.resize(k);
  auto gather = [&](const std::vector<ScoredText>& set) {
    std::vector<Transaction> ts;
    ts.reserve(set.size());
    for (const auto& s : set) ts.push_back(transactions[s.text]);
    return ts;
  };

  std::vector<std::vector<Transaction>> d1(k), d2(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto& m = out.mining[c];
    if (assigned[c].empty()) continue;
    if (options.use_clustering) {
      m.partition = partition_by_confidence(assigned[c]);
      d1[c] = gather(m.partition.d1);
      d2[c] = gather(m.partition.d2);
    } else {
      m.partition.d1 = assigned[c];
      m.partition.d2 = assigned[c];
      d1[c] = gather(assigned[c]);
      d2[c] = d1[c];
    }
    m.d1_items = mine_frequent_items(d1[c], options.h1);
    m.d2_items = mine_frequent_items(d2[c], options.h2);
    if (options.use_conjunctive) m.d2_pairs = mine_frequent_pairs(d2[c], options.h2);
  }

  std::vector<std::vector<ItemSupport>> d2_items(k);
  for (std::size_t c = 0; c < k; ++c) d2_items[c] = out.mining[c].d2_items;

  for (std::size_t c = 0; c < k; ++c) {
    const auto& m = out.mining[c];
    std::set<std::string> other_labels;
    for (std::size_t o = 0; o < k; ++o) {
      if (o != c) other_labels.insert(categories[o].label_name);
    }
    std::vector<std::string> excluded_labels;
    std::vector<ItemSupport> items;
    for (const auto& i : m.d1_items) {
      if (other_labels.contains(i.word)) {
        excluded_labels.push_back(i.word);
      } else {
        items.push_back(i);
      }
    }
    std::vector<WordPair> dropped;
    auto pairs = filter_conflicting_pairs(m.d2_pairs, conflicting_words(d2_items, c), &dropped);
    std::vector<PairSupport> kept;
    for (auto& p : pairs) {
      bool label_hit = false;
      for (const auto* w : {&p.pair.first, &p.pair.second}) {
        if (other_labels.contains(*w)) {
          label_hit = true;
          excluded_labels.push_back(*w);
        }
      }
      if (!label_hit) kept.push_back(std::move(p));
    }
    auto rule = compose_rule(c, categories[c].label_name, items, kept, m.d2_items, options.s, options.t);
    std::sort(excluded_labels.begin(), excluded_labels.end());
    excluded_labels.erase(std::unique(excluded_labels.begin(), excluded_labels.end()), excluded_labels.end());
    rule.excluded_label_words = std::move(excluded_labels);
    rule.excluded_pairs = std::move(dropped);
    out.rules.push_back(std::move(rule));
  }
  return out;
}

}  // namespace ruleprompt
