#include "ruleprompt/benchmark.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <random>

#include "ruleprompt/error.hpp"

namespace ruleprompt {
namespace {

struct Topic {
  std::string label;
  std::vector<std::string> synonyms;
  std::vector<std::string> strong;
  std::vector<std::string> topical;
};

const std::vector<Topic>& topics() {
  static const std::vector<Topic> t{
      {"sports",
       {"football", "soccer", "athletics"},
       {"goal", "championship"},
       {"team",     "coach",    "league",   "match",  "season",  "player",     "stadium",  "tournament",
        "victory",  "fans",     "score",    "striker", "defender", "referee",  "penalty",  "medal",
        "olympic",  "athlete",  "race",     "pitch",  "innings", "cricket",    "tennis",   "basketball",
        "hockey",   "playoff",  "captain",  "midfielder", "trophy", "quarterback"}},
      {"business",
       {"commerce", "finance", "corporate"},
       {"profit", "shares"},
       {"market",   "company",  "investors", "revenue", "quarterly", "stocks",   "bank",      "earnings",
        "economy",  "retail",   "merger",    "acquisition", "dividend", "inflation", "consumer", "sales",
        "billion",  "percent",  "firm",      "ceo",     "bonds",     "trading",  "exports",   "prices",
        "growth",   "forecast", "oil",       "wall",    "street",    "credit"}},
      {"politics",
       {"government", "election", "political"},
       {"senate", "minister"},
       {"vote",      "parliament", "policy",   "president", "party",    "lawmakers",  "reform",  "diplomat",
        "treaty",    "congress",   "senator",  "opposition", "ballot",  "voters",     "coalition", "cabinet",
        "legislation", "bill",     "prime",    "democracy", "governor", "embassy",    "sanctions", "protest",
        "constitution", "referendum", "mayor", "republican", "democrat", "candidate"}},
      {"technology",
       {"software", "computing", "tech"},
       {"processor", "algorithm"},
       {"internet", "device",   "data",     "network",  "users",    "computer", "digital",  "mobile",
        "research", "engineers", "smartphone", "app",   "browser",  "server",   "online",   "wireless",
        "robot",    "satellite", "laptop",  "hardware", "cloud",    "cyber",    "web",      "code",
        "silicon",  "battery",  "gadget",   "virtual",  "download", "startup"}},
  };
  return t;
}

const std::vector<std::string>& background_words() {
  static const std::vector<std::string> w{"the",   "a",     "of",    "to",    "in",    "on",      "for",
                                          "with",  "said",  "new",   "year",  "after", "report",  "week",
                                          "people", "first", "last", "over",  "more",  "officials"};
  return w;
}

// Topic-neutral words that each occur rarely; they widen the vocabulary and
// compete for strong-signal slots without being frequent anywhere.
const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> w{
      "city",     "country", "world",   "state",   "group",   "plan",     "part",    "home",    "region",
      "local",    "national", "global", "major",   "early",   "late",     "public",  "private", "source",
      "statement", "move",   "deal",    "issue",   "case",    "level",    "number",  "system",  "program",
      "service",  "center",  "area",    "family",  "school",  "health",   "water",   "energy",  "film",
      "music",    "art",     "weather", "travel",  "food",    "police",   "court",   "union",   "board",
      "agency",   "council", "member",  "leader",  "chief",   "director", "staff",   "worker",  "student",
      "border",   "island",  "river",   "morning", "evening", "history"};
  return w;
}

// Uniform double in [0, 1) from raw engine bits; independent of the standard
// library's distribution implementations.
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(uniform(rng) * n); }

const std::vector<PlantedPair>& planted_pairs() {
  static const std::vector<PlantedPair> p{{WordPair::of("transfer", "window"), 0, 1, 3},
                                          {WordPair::of("campaign", "rally"), 2, 1, 0}};
  return p;
}

// One text's tokens for category c, in generation order.
std::vector<std::string> draw_tokens(const BenchmarkOptions& o, std::size_t c, std::mt19937_64& rng) {
  const auto& tp = topics();
  const auto& bg = background_words();
  const auto& filler = filler_words();
  const std::size_t k = tp.size();
  const auto& topic = tp[c];
  std::vector<std::string> tokens;
  bool carries_pair = false;
  for (const auto& p : planted_pairs()) {
    if (p.owner == c && uniform(rng) < o.pair_rate) {
      tokens.push_back(p.pair.first);
      tokens.push_back(p.pair.second);
      carries_pair = true;
    }
    if (p.first_shadow == c && uniform(rng) < o.shadow_rate) tokens.push_back(p.pair.first);
    if (p.second_shadow == c && uniform(rng) < o.shadow_rate) tokens.push_back(p.pair.second);
  }
  const double keep = carries_pair ? 1.0 - o.pair_focus : 1.0;
  for (const auto& w : topic.strong) {
    if (uniform(rng) < o.strong_rate * keep) tokens.push_back(w);
  }
  const std::size_t length = o.min_length + pick(rng, o.max_length - o.min_length + 1);
  while (tokens.size() < length) {
    const double r = uniform(rng);
    if (r < o.off_topic_share) {
      const auto other = (c + 1 + pick(rng, k - 1)) % k;
      tokens.push_back(tp[other].topical[pick(rng, tp[other].topical.size())]);
    } else if (r < o.off_topic_share + o.background_share) {
      tokens.push_back(bg[pick(rng, bg.size())]);
    } else if (r < o.off_topic_share + o.background_share + o.filler_share) {
      tokens.push_back(filler[pick(rng, filler.size())]);
    } else if (uniform(rng) >= keep) {
      tokens.push_back(bg[pick(rng, bg.size())]);
    } else if (uniform(rng) < o.seed_share) {
      const auto j = pick(rng, topic.synonyms.size() + 1);
      tokens.push_back(j == 0 ? topic.label : topic.synonyms[j - 1]);
    } else {
      tokens.push_back(topic.topical[pick(rng, topic.topical.size())]);
    }
  }
  return tokens;
}

}  // namespace

Benchmark make_benchmark(const BenchmarkOptions& o) {
  if (o.texts_per_category == 0) throw InvalidArgument("texts_per_category must be positive");
  if (o.reference_texts_per_category == 0) throw InvalidArgument("reference_texts_per_category must be positive");
  if (o.min_length == 0 || o.min_length > o.max_length) throw InvalidArgument("invalid text length range");
  if (o.pair_focus < 0.0 || o.pair_focus > 1.0) throw InvalidArgument("pair_focus outside [0,1]");

  const auto& tp = topics();
  const auto& bg = background_words();
  const auto& filler = filler_words();
  const std::size_t k = tp.size();

  Benchmark b;
  for (const auto& t : tp) {
    b.label_names.push_back(t.label);
    b.strong_words.push_back(t.strong);
    std::vector<std::string> words{t.label};
    for (const auto* group : {&t.synonyms, &t.strong, &t.topical}) words.insert(words.end(), group->begin(), group->end());
    b.topic_words.push_back(std::move(words));
  }
  b.pairs = planted_pairs();

  std::mt19937_64 rng(o.seed);
  std::size_t next_id = 0;
  for (std::size_t round = 0; round < o.texts_per_category; ++round) {
    for (std::size_t c = 0; c < k; ++c) {
      auto tokens = draw_tokens(o, c, rng);
      // Fisher-Yates with the engine directly, for the same reason as uniform().
      for (std::size_t i = tokens.size(); i > 1; --i) std::swap(tokens[i - 1], tokens[pick(rng, i)]);

      std::string text;
      for (const auto& w : tokens) text += (text.empty() ? "" : " ") + w;
      text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
      text += ".";

      char id[16];
      std::snprintf(id, sizeof id, "t%04zu", next_id++);
      b.records.push_back({id, text, c});
    }
  }

  // The planted multinomials estimate the generator's own distributions from a
  // separate large sample, so chance skews of the corpus are not baked into
  // the model.
  std::mt19937_64 reference_rng(o.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::map<std::string, double>> counts(k);
  for (std::size_t round = 0; round < o.reference_texts_per_category; ++round) {
    for (std::size_t c = 0; c < k; ++c) {
      for (const auto& w : draw_tokens(o, c, reference_rng)) counts[c][w] += 1.0;
    }
  }

  FixtureSpec& spec = b.spec;
  spec.seed = o.seed;
  spec.noise_level = o.noise_level;
  spec.sharpen_temperature = o.sharpen_temperature;
  spec.category_affinity = o.category_affinity;
  for (const auto& t : tp) {
    spec.vocabulary.push_back(t.label);
    for (const auto& w : t.synonyms) spec.vocabulary.push_back(w);
    for (const auto& w : t.strong) spec.vocabulary.push_back(w);
    for (const auto& w : t.topical) spec.vocabulary.push_back(w);
  }
  for (const auto& p : b.pairs) {
    spec.vocabulary.push_back(p.pair.first);
    spec.vocabulary.push_back(p.pair.second);
  }
  for (const auto& w : bg) spec.vocabulary.push_back(w);
  for (const auto& w : filler) spec.vocabulary.push_back(w);
  for (std::size_t c = 0; c < k; ++c) {
    FixtureCategory fc;
    fc.name = tp[c].label;
    double total = 0.0;
    for (const auto& [w, n] : counts[c]) total += n;
    for (const auto& [w, n] : counts[c]) fc.distribution.emplace_back(w, n / total);
    spec.categories.push_back(std::move(fc));
    std::vector<std::string> group{tp[c].label};
    group.insert(group.end(), tp[c].synonyms.begin(), tp[c].synonyms.end());
    spec.synonym_groups.push_back(std::move(group));
  }
  spec.validate();
  return b;
}

RunConfig benchmark_config(const Benchmark& benchmark) {
  RunConfig c;
  c.label_names = benchmark.label_names;
  return c;
}

}  // namespace ruleprompt
