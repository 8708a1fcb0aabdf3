#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "ruleprompt/benchmark.hpp"
#include "ruleprompt/error.hpp"

using namespace ruleprompt;

namespace {

std::set<std::string> token_set(const std::string& text) {
  std::set<std::string> out;
  for (const auto& t : fixture_tokenize(text)) out.insert(t);
  return out;
}

std::size_t count(const std::vector<std::string>& words, const std::string& w) {
  return static_cast<std::size_t>(std::count(words.begin(), words.end(), w));
}

}  // namespace

TEST_SUITE("benchmark") {
  TEST_CASE("shape") {
    const auto b = make_benchmark();
    CHECK(b.label_names == std::vector<std::string>{"sports", "business", "politics", "technology"});
    CHECK(b.records.size() == 800);
    CHECK(b.pairs.size() == 2);
    std::set<std::string> ids;
    std::vector<std::size_t> per(4, 0);
    for (const auto& r : b.records) {
      ids.insert(r.id);
      ++per.at(*r.gold_label);
    }
    CHECK(ids.size() == 800);
    CHECK(per == std::vector<std::size_t>(4, 200));
    for (const auto& s : b.strong_words) CHECK(s.size() == 2);
    // Topic vocabularies are disjoint, lead with the label name and hold the
    // strong words but no pair word.
    REQUIRE(b.topic_words.size() == 4);
    std::set<std::string> all;
    std::size_t total = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(b.topic_words[c].front() == b.label_names[c]);
      for (const auto& w : b.strong_words[c]) CHECK(count(b.topic_words[c], w) == 1);
      for (const auto& p : b.pairs) {
        CHECK(count(b.topic_words[c], p.pair.first) == 0);
        CHECK(count(b.topic_words[c], p.pair.second) == 0);
      }
      all.insert(b.topic_words[c].begin(), b.topic_words[c].end());
      total += b.topic_words[c].size();
    }
    CHECK(all.size() == total);
    CHECK_NOTHROW(b.spec.validate());
  }

  TEST_CASE("planted structure") {
    const auto b = make_benchmark();
    std::vector<std::map<std::string, std::size_t>> df(4);
    for (const auto& r : b.records) {
      for (const auto& w : token_set(r.text)) ++df[*r.gold_label][w];
    }
    for (std::size_t c = 0; c < 4; ++c) {
      for (const auto& w : b.strong_words[c]) {
        for (std::size_t o = 0; o < 4; ++o) {
          if (o != c) CHECK(df[c][w] > 4 * df[o][w]);
        }
      }
    }
    for (const auto& p : b.pairs) {
      std::vector<std::size_t> together(4, 0);
      for (const auto& r : b.records) {
        const auto s = token_set(r.text);
        together[*r.gold_label] += s.contains(p.pair.first) && s.contains(p.pair.second);
      }
      for (std::size_t o = 0; o < 4; ++o) {
        if (o == p.owner) CHECK(together[o] > 20);
        else CHECK(together[o] == 0);
      }
      // Each member also turns up alone in a second category.
      CHECK(df[p.first_shadow][p.pair.first] > 0);
      CHECK(df[p.second_shadow][p.pair.second] > 0);
      CHECK(p.first_shadow != p.owner);
      CHECK(p.second_shadow != p.owner);
    }
  }

  TEST_CASE("planted distributions come from the generator, not the corpus sample") {
    for (std::uint64_t seed : {1, 2, 3, 1008}) {
      BenchmarkOptions o;
      o.seed = seed;
      const auto full = make_benchmark(o);
      o.texts_per_category = 40;
      const auto small = make_benchmark(o);
      CHECK(nlohmann::json(full.spec) == nlohmann::json(small.spec));

      std::vector<std::map<std::string, double>> planted(4);
      for (std::size_t c = 0; c < 4; ++c) {
        for (const auto& [w, p] : full.spec.categories[c].distribution) planted[c][w] = p;
      }
      // Label names, synonyms and strong words are each planted most by their
      // own category. Topical words are mixed off-topic into the other
      // categories, so only their total leans toward the owner.
      for (std::size_t c = 0; c < 4; ++c) {
        std::set<std::string> distinct(full.spec.synonym_groups[c].begin(), full.spec.synonym_groups[c].end());
        distinct.insert(full.strong_words[c].begin(), full.strong_words[c].end());
        std::vector<double> topical(4, 0.0);
        for (const auto& w : full.topic_words[c]) {
          if (!distinct.contains(w)) {
            for (std::size_t o2 = 0; o2 < 4; ++o2) topical[o2] += planted[o2][w];
          }
        }
        for (std::size_t o2 = 0; o2 < 4; ++o2) {
          if (o2 == c) continue;
          INFO("seed " << seed << " category " << c << " vs " << o2);
          CHECK(topical[c] > topical[o2]);
          for (const auto& w : distinct) CHECK(planted[c][w] > 2.0 * planted[o2][w]);
        }
      }
    }
  }

  TEST_CASE("determinism and seeding") {
    const auto a = make_benchmark();
    const auto b = make_benchmark();
    BenchmarkOptions o;
    o.seed = 8;
    const auto c = make_benchmark(o);
    REQUIRE(a.records.size() == b.records.size());
    bool all_same = true, any_diff = false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      all_same = all_same && a.records[i].text == b.records[i].text;
      any_diff = any_diff || a.records[i].text != c.records[i].text;
    }
    CHECK(all_same);
    CHECK(any_diff);
    CHECK(nlohmann::json(a.spec) == nlohmann::json(b.spec));
  }

  TEST_CASE("option validation") {
    BenchmarkOptions o;
    o.pair_focus = 1.5;
    CHECK_THROWS_AS(make_benchmark(o), InvalidArgument);
    o = {};
    o.min_length = 50;
    CHECK_THROWS_AS(make_benchmark(o), InvalidArgument);
    o = {};
    o.texts_per_category = 0;
    CHECK_THROWS_AS(make_benchmark(o), InvalidArgument);
    o = {};
    o.reference_texts_per_category = 0;
    CHECK_THROWS_AS(make_benchmark(o), InvalidArgument);
  }
}
