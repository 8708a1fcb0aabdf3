#include <algorithm>
#include <random>

#include "doctest.h"
#include "ruleprompt/corpus.hpp"
#include "ruleprompt/error.hpp"
#include "support.hpp"

using namespace ruleprompt;
using testing_support::TempDir;
using testing_support::write_file;

namespace {

// Independent F1 route: per-class precision and recall, then harmonic mean.
double class_f1(const std::vector<CategoryId>& pred, const std::vector<CategoryId>& gold, CategoryId c) {
  double tp = 0, predicted = 0, actual = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    tp += (pred[i] == c && gold[i] == c);
    predicted += pred[i] == c;
    actual += gold[i] == c;
  }
  if (tp == 0) return 0.0;
  const double p = tp / predicted, r = tp / actual;
  return 2 * p * r / (p + r);
}

const CategorySet kAgNews({"politics", "sports", "business", "technology"});

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("two-line jsonl without labels") {
    TempDir dir;
    write_file(dir / "c.jsonl", "{\"id\": \"a\", \"text\": \"stocks fell\"}\n{\"id\": \"b\", \"text\": \"  team won \"}\n");
    const auto corpus = load_corpus(dir / "c.jsonl", CorpusFormat::jsonl, kAgNews);
    REQUIRE(corpus.size() == 2);
    CHECK(corpus[0].id == "a");
    CHECK(corpus[1].text == "team won");
    CHECK_FALSE(corpus[0].gold_label.has_value());
    CHECK_FALSE(corpus.has_gold_labels());
  }

  TEST_CASE("label strings map onto configured categories") {
    TempDir dir;
    write_file(dir / "c.jsonl",
               "{\"id\":\"1\",\"text\":\"x\",\"label\":\"Sports\"}\n"
               "{\"id\":\"2\",\"text\":\"y\",\"label\":\"politics\"}\n"
               "{\"id\":\"3\",\"text\":\"z\",\"label\":\"technology\"}\n"
               "{\"id\":4,\"text\":\"w\",\"label\":\"business\"}\n");
    const auto corpus = load_corpus(dir / "c.jsonl", CorpusFormat::jsonl, kAgNews);
    CHECK(corpus.gold_labels() == std::vector<CategoryId>{1, 0, 3, 2});
    CHECK(corpus[3].id == "4");
  }

  TEST_CASE("empty file") {
    TempDir dir;
    write_file(dir / "c.jsonl", "\n\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir / "c.jsonl", CorpusFormat::jsonl, kAgNews), "empty corpus", ParseError);
  }

  TEST_CASE("errors name the line or the label") {
    TempDir dir;
    write_file(dir / "bad.jsonl", "{\"id\":\"1\",\"text\":\"x\"}\n{not json\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir / "bad.jsonl", CorpusFormat::jsonl, kAgNews),
                         doctest::Contains("line 2"), ParseError);
    write_file(dir / "label.jsonl", "{\"id\":\"1\",\"text\":\"x\",\"label\":\"weather\"}\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir / "label.jsonl", CorpusFormat::jsonl, kAgNews),
                         doctest::Contains("weather"), ParseError);
    write_file(dir / "dup.jsonl", "{\"id\":\"1\",\"text\":\"x\"}\n{\"id\":\"1\",\"text\":\"y\"}\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir / "dup.jsonl", CorpusFormat::jsonl, kAgNews),
                         doctest::Contains("duplicate"), ParseError);
    write_file(dir / "blank.jsonl", "{\"id\":\"1\",\"text\":\"   \"}\n");
    CHECK_THROWS_AS(load_corpus(dir / "blank.jsonl", CorpusFormat::jsonl, kAgNews), ParseError);
    CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl", CorpusFormat::jsonl, kAgNews), ParseError);
  }

  TEST_CASE("csv with quoting") {
    TempDir dir;
    write_file(dir / "c.csv", "id,text,label\r\n1,\"shares, bonds\",business\r\n2,\"said \"\"hi\"\"\nagain\",\r\n");
    const auto corpus = load_corpus(dir / "c.csv", format_from_path(dir / "c.csv"), kAgNews);
    REQUIRE(corpus.size() == 2);
    CHECK(corpus[0].text == "shares, bonds");
    CHECK(corpus[0].gold_label == CategoryId{2});
    CHECK(corpus[1].text == "said \"hi\"\nagain");
    CHECK_FALSE(corpus[1].gold_label.has_value());

    write_file(dir / "short.csv", "id,text\n1\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir / "short.csv", CorpusFormat::csv, kAgNews), doctest::Contains("line 2"),
                         ParseError);
    write_file(dir / "header.csv", "name,body\n1,x\n");
    CHECK_THROWS_AS(load_corpus(dir / "header.csv", CorpusFormat::csv, kAgNews), ParseError);
  }

  TEST_CASE("category set rejects empty and duplicate names") {
    CHECK_THROWS_AS(CategorySet({"a", ""}), InvalidArgument);
    CHECK_THROWS_AS(CategorySet({"Sports", "sports"}), InvalidArgument);
    CHECK(kAgNews.find("SPORTS") == CategoryId{1});
    CHECK_FALSE(kAgNews.find("weather").has_value());
  }

  TEST_CASE("distribution label and confidence") {
    auto d = CategoryDistribution::from_scores({0.2, 0.5, 0.5, 0.1});
    CHECK(d.pseudo_label == 1);
    CHECK(d.confidence == doctest::Approx(0.0));
    d = CategoryDistribution::from_scores({0.1, 0.7, 0.2});
    CHECK(d.pseudo_label == 1);
    CHECK(d.confidence == doctest::Approx(0.5));
  }

  TEST_CASE("evaluate examples") {
    const std::vector<CategoryId> gold{0, 0, 1, 2}, pred{0, 1, 1, 1};
    const auto m = evaluate(pred, gold);
    CHECK(m.micro_f1 == doctest::Approx(0.5));
    // Hand confusion matrix: class 0 P=1 R=1/2, class 1 P=1/3 R=1, class 2 nothing right.
    CHECK(m.macro_f1 == doctest::Approx((2.0 / 3.0 + 0.5 + 0.0) / 3.0));

    const std::vector<CategoryId> g2{0, 0, 1, 1}, p2{1, 1, 0, 0};
    CHECK(evaluate(p2, g2).micro_f1 == 0.0);
    const auto perfect = evaluate(g2, g2);
    CHECK(perfect.micro_f1 == 1.0);
    CHECK(perfect.macro_f1 == 1.0);

    CHECK_THROWS_AS(evaluate(std::vector<CategoryId>{0}, g2), InvalidArgument);
    CHECK_THROWS_AS(evaluate(g2, g2, 1), InvalidArgument);
  }

  TEST_CASE("class absent from both lists counts as zero in the macro average") {
    const std::vector<CategoryId> g{0, 1}, p{0, 1};
    const auto m = evaluate(p, g, 3);
    CHECK(m.micro_f1 == 1.0);
    CHECK(m.macro_f1 == doctest::Approx(2.0 / 3.0));
  }

  TEST_CASE("evaluate matches the per-class oracle and is permutation-equivariant") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t k = 2 + rng() % 5, n = 1 + rng() % 40;
      std::vector<CategoryId> gold(n), pred(n);
      for (std::size_t i = 0; i < n; ++i) {
        gold[i] = rng() % k;
        pred[i] = rng() % 3 == 0 ? rng() % k : gold[i];
      }
      const auto m = evaluate(pred, gold, k);
      double macro = 0, correct = 0;
      for (CategoryId c = 0; c < k; ++c) macro += class_f1(pred, gold, c);
      for (std::size_t i = 0; i < n; ++i) correct += pred[i] == gold[i];
      CHECK(m.macro_f1 == doctest::Approx(macro / static_cast<double>(k)).epsilon(1e-12));
      // Single-label multi-class: micro F1 equals accuracy.
      CHECK(m.micro_f1 == doctest::Approx(correct / static_cast<double>(n)).epsilon(1e-12));

      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<CategoryId> g2, p2;
      for (auto i : order) {
        g2.push_back(gold[i]);
        p2.push_back(pred[i]);
      }
      const auto m2 = evaluate(p2, g2, k);
      CHECK(m2.micro_f1 == m.micro_f1);
      CHECK(m2.macro_f1 == doctest::Approx(m.macro_f1).epsilon(1e-15));
    }
  }
}
