#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "ruleprompt/error.hpp"
#include "ruleprompt/fixture_backend.hpp"
#include "ruleprompt/numeric.hpp"
#include "ruleprompt/signals.hpp"

using namespace ruleprompt;

namespace {

FixtureSpec market_spec() {
  FixtureSpec s;
  s.seed = 2;
  s.categories = {{"business", {{"business", 0.2}, {"shares", 0.3}, {"market", 0.5}}},
                  {"sports", {{"sports", 0.3}, {"goal", 0.4}, {"market", 0.3}}},
                  {"politics", {{"politics", 0.4}, {"senate", 0.6}}}};
  return s;
}

const Template kNews("A [MASK] news: {d}");

}  // namespace

TEST_SUITE("signals") {
  TEST_CASE("K1 = |V| returns the whole vocabulary sorted") {
    FixtureBackend be(market_spec());
    const auto n = be.vocabulary().size();
    const auto sw = signal_words(be, kNews, "t", "shares market", n);
    REQUIRE(sw.words.size() == n);
    std::set<std::string> unique;
    for (std::size_t i = 0; i < n; ++i) {
      unique.insert(sw.words[i].word);
      if (i > 0) CHECK(sw.words[i - 1].score >= sw.words[i].score);
    }
    CHECK(unique.size() == n);
    CHECK_THROWS_AS(signal_words(be, kNews, "t", "x", n + 1), InvalidArgument);
  }

  TEST_CASE("top signal word of a business text is planted for business") {
    FixtureBackend be(market_spec());
    const auto sw = signal_words(be, kNews, "t", "business shares shares", 3);
    const auto idx = *be.vocabulary().find(sw.words.front().word);
    CHECK(be.planted_probability(0, idx) > 0.0);
  }

  TEST_CASE("ranking by logit breaks ties by vocabulary order") {
    const Vocabulary v({"a", "b", "c", "d"});
    const std::vector<double> logits{1.0, 3.0, 3.0, 0.0};
    const auto sw = signal_words_from_logits("x", logits, v, 3);
    CHECK(sw.words[0].word == "b");
    CHECK(sw.words[1].word == "c");
    CHECK(sw.words[2].word == "a");
    CHECK(sw.words[0].score == doctest::Approx(softmax(logits)[1]));
  }

  TEST_CASE("corpus average") {
    const std::vector<std::vector<double>> two{{0.2, 0.8}, {0.6, 0.4}};
    const auto avg = corpus_average(two, 0);
    CHECK(avg.values()[0] == doctest::Approx(0.4));
    CHECK(avg.values()[1] == doctest::Approx(0.6));
    CHECK_THROWS_AS(corpus_average(std::vector<std::vector<double>>{}, 0), InvalidArgument);

    CorpusAverage partial(0, 2);
    CHECK_THROWS_AS(partial.finalize(), InvalidArgument);
    CHECK_THROWS_AS(partial.add(std::vector<double>{1.0}), InvalidArgument);
  }

  TEST_CASE("single text: every specialised score is one") {
    FixtureBackend be(market_spec());
    const auto sw = signal_words(be, kNews, "t", "market goal", 5);
    const auto p = softmax(be.mask_logits(std::vector<std::string>{kNews.fill("market goal")}).front());
    const auto avg = corpus_average(std::vector<std::vector<double>>{p}, be.version());
    const auto ssw = strong_signal_words(sw, avg, 5);
    for (const auto& w : ssw.words) CHECK(w.score == doctest::Approx(1.0));
  }

  TEST_CASE("specialised score is probability over corpus average") {
    SignalWords sw{"t", {{"a", 0, 0.3}, {"b", 1, 0.2}}};
    CorpusAverage avg(0, 2);
    avg.add(std::vector<double>{0.1, 0.0});
    avg.finalize();
    const auto ssw = strong_signal_words(sw, avg, 2);
    // b never appears elsewhere: its divisor is the floor.
    CHECK(ssw.words[0].word == "b");
    CHECK(ssw.words[0].score == doctest::Approx(0.2 / kAverageFloor));
    CHECK(ssw.words[1].score == doctest::Approx(3.0));
    CHECK_THROWS_AS(strong_signal_words(sw, avg, 3), InvalidArgument);
  }

  TEST_CASE("a ubiquitous top word drops below a rarer one") {
    FixtureBackend be(market_spec());
    const std::vector<std::string> texts{"market market market market shares", "market market market market goal",
                                         "market market market market senate"};
    std::vector<std::vector<double>> probs;
    for (const auto& t : texts) probs.push_back(softmax(be.mask_logits(std::vector<std::string>{kNews.fill(t)}).front()));
    const auto avg = corpus_average(probs, be.version());
    const auto sw = signal_words(be, kNews, "t0", texts[0], 5);
    REQUIRE(sw.words.front().word == "market");
    const auto ssw = strong_signal_words(sw, avg, 5);
    auto rank = [&](const std::string& w) {
      return std::find_if(ssw.words.begin(), ssw.words.end(), [&](auto& s) { return s.word == w; }) - ssw.words.begin();
    };
    CHECK(rank("shares") < rank("market"));
  }

  TEST_CASE("strong signal words are a K2 subset of the candidates and scale-invariant") {
    std::mt19937_64 rng(21);
    std::vector<std::string> words;
    for (int i = 0; i < 40; ++i) words.push_back("w" + std::to_string(i));
    const Vocabulary vocab(words);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<std::vector<double>> logits(5, std::vector<double>(40));
      std::vector<std::vector<double>> probs;
      for (auto& l : logits) {
        for (auto& x : l) x = n(rng);
        probs.push_back(softmax(l));
      }
      const auto avg = corpus_average(probs, 0);
      auto scaled = probs;
      for (auto& p : scaled) {
        for (auto& x : p) x *= 3.5;
      }
      const auto avg_scaled = corpus_average(scaled, 0);
      const auto sw = signal_words_from_logits("x", logits[0], vocab, 15);
      const auto ssw = strong_signal_words(sw, avg, 6);
      REQUIRE(ssw.words.size() == 6);
      std::set<std::string> pool;
      for (const auto& w : sw.words) pool.insert(w.word);
      for (std::size_t i = 0; i < ssw.words.size(); ++i) {
        CHECK(pool.count(ssw.words[i].word) == 1);
        if (i > 0) CHECK(ssw.words[i - 1].score >= ssw.words[i].score);
      }
      SignalWords sw_scaled = sw;
      for (auto& w : sw_scaled.words) w.score *= 3.5;
      const auto ssw_scaled = strong_signal_words(sw_scaled, avg_scaled, 6);
      for (std::size_t i = 0; i < 6; ++i) {
        CHECK(ssw_scaled.words[i].word == ssw.words[i].word);
        CHECK(ssw_scaled.words[i].score == doctest::Approx(ssw.words[i].score).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("a stale average is rejected after fine-tuning") {
    FixtureBackend be(market_spec());
    const auto p = softmax(be.mask_logits(std::vector<std::string>{kNews.fill("goal")}).front());
    const auto avg = corpus_average(std::vector<std::vector<double>>{p}, be.version());
    CHECK_NOTHROW(avg.check_current(be));
    be.fine_tune(std::vector<std::string>{kNews.fill("goal")}, std::vector<std::vector<double>>{{1.0, 0.0, 0.0}}, 1);
    CHECK_THROWS_WITH_AS(avg.check_current(be), doctest::Contains("stale"), InvalidArgument);
  }

  TEST_CASE("stoplist") {
    const auto s = default_stoplist();
    CHECK(s.count("the") == 1);
    CHECK(s.count(".") == 1);
    CHECK(s.count("market") == 0);
  }
}
