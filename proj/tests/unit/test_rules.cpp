#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "ruleprompt/error.hpp"
#include "ruleprompt/rules.hpp"

using namespace ruleprompt;

namespace {

std::vector<Transaction> txs(std::vector<std::vector<std::string>> items) {
  std::vector<Transaction> out;
  for (std::size_t i = 0; i < items.size(); ++i) out.push_back({i, items[i]});
  return out;
}

std::vector<ScoredText> scored(std::vector<double> c) {
  std::vector<ScoredText> out;
  for (std::size_t i = 0; i < c.size(); ++i) out.push_back({i, c[i]});
  return out;
}

std::vector<double> confidences(const std::vector<ScoredText>& s) {
  std::vector<double> out;
  for (const auto& x : s) out.push_back(x.confidence);
  return out;
}

CategoryDistribution labelled(CategoryId c, double conf, std::size_t k = 2) {
  std::vector<double> s(k, 0.0);
  s[c] = conf;
  return CategoryDistribution::from_scores(std::move(s));
}

bool rules_equal(const LogicalRule& a, const LogicalRule& b) {
  if (a.disjunctive.size() != b.disjunctive.size() || a.conjunctive.size() != b.conjunctive.size()) return false;
  for (std::size_t i = 0; i < a.disjunctive.size(); ++i) {
    if (a.disjunctive[i].word != b.disjunctive[i].word || a.disjunctive[i].support != b.disjunctive[i].support) return false;
  }
  for (std::size_t i = 0; i < a.conjunctive.size(); ++i) {
    if (a.conjunctive[i].pair != b.conjunctive[i].pair || a.conjunctive[i].support != b.conjunctive[i].support) return false;
  }
  return a.fallback == b.fallback && a.excluded_pairs == b.excluded_pairs;
}

}  // namespace

TEST_SUITE("rules") {
  TEST_CASE("confidence") {
    CHECK(confidence(std::vector<double>{0.7, 0.2, 0.1}) == doctest::Approx(0.5));
    CHECK(confidence(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == 0.0);
    CHECK(confidence(std::vector<double>{1.0, 0.0, 0.0}) == 1.0);
    CHECK(confidence(std::vector<double>{0.1, 0.6, 0.3}) == doctest::Approx(0.3));
    CHECK_THROWS_AS(confidence(std::vector<double>{1.0}), InvalidArgument);
  }

  TEST_CASE("partition examples") {
    const auto p = partition_by_confidence(scored({0.50, 0.10, 0.90, 0.48, 0.88}));
    CHECK(confidences(p.d1) == std::vector<double>{0.90, 0.88});
    CHECK(confidences(p.d2) == std::vector<double>{0.50, 0.48});
    CHECK(confidences(p.d3) == std::vector<double>{0.10});
    CHECK(p.d1.front().text == 2);

    const auto same = partition_by_confidence(scored({0.3, 0.3, 0.3, 0.3}));
    CHECK(same.d1.size() == 4);
    CHECK(same.d2.empty());
    CHECK(same.d3.empty());

    const auto two = partition_by_confidence(scored({0.2, 0.7}));
    CHECK(confidences(two.d1) == std::vector<double>{0.7});
    CHECK(confidences(two.d2) == std::vector<double>{0.2});
    CHECK(two.d3.empty());

    const auto one = partition_by_confidence(scored({0.4}));
    CHECK(one.d1.size() == 1);
    CHECK_THROWS_AS(partition_by_confidence(std::vector<ScoredText>{}), InvalidArgument);
  }

  TEST_CASE("partition is exhaustive, ordered and optimal on random inputs") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 1 + rng() % 30;
      std::vector<double> c(n);
      // Coarse grids produce ties.
      for (auto& x : c) x = trial % 3 == 0 ? std::round(u(rng) * 4) / 4 : u(rng);
      const auto p = partition_by_confidence(scored(c));
      CHECK(p.d1.size() + p.d2.size() + p.d3.size() == n);
      std::vector<std::size_t> ids;
      for (const auto* set : {&p.d1, &p.d2, &p.d3}) {
        for (const auto& s : *set) ids.push_back(s.text);
      }
      std::sort(ids.begin(), ids.end());
      CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
      auto lo = [](const std::vector<ScoredText>& s) { return s.empty() ? 2.0 : s.back().confidence; };
      auto hi = [](const std::vector<ScoredText>& s) { return s.empty() ? -1.0 : s.front().confidence; };
      CHECK(lo(p.d1) >= hi(p.d2));
      CHECK((p.d2.empty() ? lo(p.d1) : lo(p.d2)) >= hi(p.d3));
      CHECK(partition_sse(p) <= oracles::best_contiguous_sse(c) + 1e-9);
    }
  }

  TEST_CASE("frequent items") {
    const auto t = txs({{"a", "b"}, {"a", "c"}, {"b", "c"}, {"a"}});
    const auto items = mine_frequent_items(t, 0.6);
    REQUIRE(items.size() == 1);
    CHECK(items[0] == ItemSupport{"a", 0.75});
    const auto all = mine_frequent_items(txs({{"a", "b"}, {"a"}, {"a", "b", "c"}}), 1.0);
    REQUIRE(all.size() == 1);
    CHECK(all[0].word == "a");
    CHECK(mine_frequent_items(std::vector<Transaction>{}, 0.1).empty());
    CHECK_THROWS_AS(mine_frequent_items(t, 0.0), InvalidArgument);
    CHECK_THROWS_AS(mine_frequent_items(t, 1.5), InvalidArgument);
    // Duplicate items inside one transaction count once.
    CHECK(mine_frequent_items(txs({{"a", "a"}, {"b"}}), 0.1)[0].support == 0.5);
  }

  TEST_CASE("frequent pairs") {
    const auto pairs = mine_frequent_pairs(txs({{"a", "b", "c"}, {"a", "b"}, {"c"}}), 0.6);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].pair == WordPair::of("b", "a"));
    CHECK(pairs[0].support == doctest::Approx(2.0 / 3.0));
    CHECK(mine_frequent_pairs(txs({{"a"}, {"b"}, {"c"}}), 0.1).empty());
    CHECK(mine_frequent_pairs(std::vector<Transaction>{}, 0.1).empty());
    CHECK(WordPair::of("z", "a").first == "a");
  }

  TEST_CASE("mining agrees with brute-force counting") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 60; ++trial) {
      std::vector<std::vector<std::string>> raw(1 + rng() % 20);
      for (auto& t : raw) {
        const std::size_t m = rng() % 7;
        for (std::size_t i = 0; i < m; ++i) t.push_back(std::string(1, static_cast<char>('a' + rng() % 10)));
      }
      const double h = 0.05 + 0.9 * static_cast<double>(rng() % 1000) / 1000.0;
      const auto items = mine_frequent_items(txs(raw), h);
      std::size_t expected = 0;
      for (const auto& [w, s] : oracles::item_supports(raw)) {
        if (s < h) continue;
        ++expected;
        auto it = std::find_if(items.begin(), items.end(), [&](auto& x) { return x.word == w; });
        REQUIRE(it != items.end());
        CHECK(it->support == doctest::Approx(s).epsilon(1e-12));
      }
      CHECK(items.size() == expected);
      const auto pairs = mine_frequent_pairs(txs(raw), h);
      expected = 0;
      for (const auto& [p, s] : oracles::pair_supports(raw)) {
        if (s < h) continue;
        ++expected;
        auto it = std::find_if(pairs.begin(), pairs.end(), [&](auto& x) { return x.pair == WordPair::of(p.first, p.second); });
        REQUIRE(it != pairs.end());
        CHECK(it->support == doctest::Approx(s).epsilon(1e-12));
      }
      CHECK(pairs.size() == expected);
    }
  }

  TEST_CASE("cross-category exclusion") {
    const std::vector<PairSupport> sports{{WordPair::of("goal", "penalty"), 0.4},
                                          {WordPair::of("company", "market"), 0.3}};
    const std::vector<std::vector<ItemSupport>> business_free{{}, {{"stocks", 0.5}}};
    CHECK(filter_conflicting_pairs(sports, conflicting_words(business_free, 0)).size() == 2);
    const std::vector<std::vector<ItemSupport>> business_company{{}, {{"company", 0.5}}};
    std::vector<WordPair> dropped;
    const auto kept = filter_conflicting_pairs(sports, conflicting_words(business_company, 0), &dropped);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].pair == WordPair::of("goal", "penalty"));
    CHECK(dropped == std::vector<WordPair>{WordPair::of("company", "market")});
    const std::vector<std::vector<ItemSupport>> single{{{"company", 0.9}}};
    CHECK(conflicting_words(single, 0).empty());
  }

  TEST_CASE("rule composition") {
    std::vector<ItemSupport> items;
    for (int i = 0; i < 12; ++i) items.push_back({"w" + std::to_string(i), 0.1 + 0.05 * i});
    const auto r = compose_rule(0, "sports", items, {}, {}, 10, 10);
    REQUIRE(r.disjunctive.size() == 10);
    CHECK(r.disjunctive.front().word == "w11");
    CHECK(r.disjunctive.back().word == "w2");
    CHECK(r.conjunctive.empty());
    CHECK_FALSE(r.fallback);

    const std::vector<ItemSupport> tied{{"b", 0.5}, {"a", 0.5}, {"c", 0.7}};
    const auto t = compose_rule(0, "x", tied, {}, {}, 2, 1);
    CHECK(t.disjunctive[0].word == "c");
    CHECK(t.disjunctive[1].word == "a");

    const std::vector<PairSupport> pairs{{WordPair::of("b", "c"), 0.3}, {WordPair::of("a", "b"), 0.3},
                                         {WordPair::of("a", "b"), 0.3}, {WordPair::of("x", "y"), 0.5}};
    const std::vector<ItemSupport> d2{{"a", 0.6}, {"b", 0.4}};
    const auto c = compose_rule(1, "y", {}, pairs, d2, 10, 2);
    REQUIRE(c.conjunctive.size() == 2);
    CHECK(c.conjunctive[0].pair == WordPair::of("x", "y"));
    CHECK(c.conjunctive[1].pair == WordPair::of("a", "b"));
    CHECK(c.conjunctive[1].first_support == 0.6);
    CHECK(c.conjunctive[1].second_support == 0.4);

    const auto f = compose_rule(2, "politics", {}, {}, {}, 10, 10);
    CHECK(f.fallback);
    REQUIRE(f.disjunctive.size() == 1);
    CHECK(f.disjunctive[0].word == "politics");
    CHECK(f.disjunctive[0].support == 1.0);
    CHECK_THROWS_AS(compose_rule(0, "a", {}, {}, {}, 0, 1), InvalidArgument);
  }

  TEST_CASE("a pair planted in the good texts reaches the conjunctive sub-rule") {
    const CategorySet cats({"arts", "sports"});
    std::vector<CategoryDistribution> labels;
    std::vector<std::vector<std::string>> items;
    for (int i = 0; i < 6; ++i) {
      labels.push_back(labelled(0, 0.95 - 0.001 * i));
      items.push_back({"museum", "gallery", "w" + std::to_string(i)});
    }
    for (int i = 0; i < 6; ++i) {
      labels.push_back(labelled(0, 0.5 - 0.001 * i));
      items.push_back({"ballet", "dancing", "v" + std::to_string(i)});
    }
    for (int i = 0; i < 3; ++i) {
      labels.push_back(labelled(0, 0.05));
      items.push_back({"u" + std::to_string(i)});
    }
    for (int i = 0; i < 6; ++i) {
      labels.push_back(labelled(1, 0.9 - 0.1 * i));
      items.push_back({"goal", "match", "z" + std::to_string(i)});
    }
    const auto set = mine_rules(cats, labels, txs(items), {});
    const auto& arts = set.rules[0];
    CHECK(arts.disjunctive[0].word == "gallery");
    CHECK(arts.disjunctive[1].word == "museum");
    REQUIRE_FALSE(arts.conjunctive.empty());
    CHECK(arts.conjunctive[0].pair == WordPair::of("ballet", "dancing"));
    CHECK(arts.conjunctive[0].support == 1.0);
  }

  TEST_CASE("rule invariants on random pseudo-labelled corpora") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t k = 2 + rng() % 3;
      std::vector<std::string> names;
      for (std::size_t c = 0; c < k; ++c) names.push_back("label" + std::to_string(c));
      const CategorySet cats(names);
      std::vector<CategoryDistribution> labels;
      std::vector<std::vector<std::string>> items;
      const std::size_t n = 10 + rng() % 50;
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> s(k);
        for (auto& x : s) x = u(rng);
        labels.push_back(CategoryDistribution::from_scores(s));
        std::vector<std::string> t;
        for (int j = 0; j < 5; ++j) t.push_back(j == 0 && rng() % 4 == 0 ? names[rng() % k] : "w" + std::to_string(rng() % 15));
        items.push_back(t);
      }
      RuleMiningOptions opt;
      opt.s = 1 + rng() % 6;
      opt.t = 1 + rng() % 6;
      opt.h1 = opt.h2 = 0.1 + 0.2 * u(rng);
      opt.use_clustering = rng() % 2;
      const auto a = mine_rules(cats, labels, txs(items), opt);
      const auto b = mine_rules(cats, labels, txs(items), opt);
      REQUIRE(a.rules.size() == k);
      for (std::size_t c = 0; c < k; ++c) {
        const auto& r = a.rules[c];
        CHECK(r.disjunctive.size() <= opt.s);
        CHECK(r.conjunctive.size() <= opt.t);
        for (std::size_t j = 1; j < r.disjunctive.size(); ++j) CHECK(r.disjunctive[j - 1].support >= r.disjunctive[j].support);
        for (std::size_t j = 1; j < r.conjunctive.size(); ++j) CHECK(r.conjunctive[j - 1].support >= r.conjunctive[j].support);
        if (!r.fallback) {
          for (const auto& d : r.disjunctive) CHECK(d.support >= opt.h1);
        }
        for (const auto& p : r.conjunctive) {
          CHECK(p.support >= opt.h2);
          for (std::size_t o = 0; o < k; ++o) {
            if (o == c) continue;
            for (const auto& i : a.mining[o].d2_items) CHECK_FALSE(p.pair.contains(i.word));
            CHECK_FALSE(p.pair.contains(names[o]));
          }
        }
        for (const auto& d : r.disjunctive) {
          for (std::size_t o = 0; o < k; ++o) {
            if (o != c) CHECK(d.word != names[o]);
          }
        }
        CHECK(rules_equal(r, b.rules[c]));
      }
    }
  }

  TEST_CASE("ablation switches") {
    const CategorySet cats({"a", "b"});
    std::vector<CategoryDistribution> labels{labelled(0, 0.9), labelled(0, 0.5), labelled(0, 0.1), labelled(1, 0.7)};
    const auto t = txs({{"x", "y"}, {"x", "y"}, {"x", "z"}, {"q"}});
    RuleMiningOptions opt;
    opt.use_conjunctive = false;
    auto set = mine_rules(cats, labels, t, opt);
    CHECK(set.rules[0].conjunctive.empty());
    CHECK(set.mining[0].d2_pairs.empty());
    opt = {};
    opt.use_clustering = false;
    set = mine_rules(cats, labels, t, opt);
    CHECK(set.mining[0].partition.d1.size() == 3);
    // x occurs in all three texts, the pair (x, y) in two of them.
    CHECK(set.rules[0].disjunctive[0].word == "x");
    CHECK(set.rules[0].conjunctive[0].support == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(mine_rules(cats, labels, txs({{"x"}}), {}), InvalidArgument);
  }
}
