#include "ruleprompt/fixture_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "ruleprompt/error.hpp"
#include "ruleprompt/numeric.hpp"

namespace ruleprompt {
namespace {

// FNV-1a; std::hash is not stable across standard libraries.
std::uint64_t stable_hash(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// Box-Muller over mt19937_64, whose output sequence is fixed by the standard.
std::vector<double> gaussian_vector(std::uint64_t key, std::size_t dim) {
  std::mt19937_64 gen(key);
  std::vector<double> v(dim);
  for (std::size_t i = 0; i < dim; i += 2) {
    const double u1 = std::max(unit_uniform(gen()), 1e-300);
    const double u2 = unit_uniform(gen());
    const double r = std::sqrt(-2.0 * std::log(u1));
    v[i] = r * std::cos(2.0 * std::numbers::pi * u2);
    if (i + 1 < dim) v[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
  }
  return v;
}

}  // namespace

void FixtureSpec::validate() const {
  if (categories.empty()) throw InvalidArgument("fixture spec: no categories");
  for (const auto& c : categories) {
    double total = 0.0;
    for (const auto& [w, p] : c.distribution) {
      if (p < 0.0) throw InvalidArgument("fixture spec: negative probability for " + w);
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) {
      throw InvalidArgument("fixture spec: distribution of '" + c.name + "' sums to " +
                            std::to_string(total));
    }
  }
  std::unordered_set<std::string> grouped;
  for (const auto& g : synonym_groups) {
    for (const auto& w : g) {
      if (!grouped.insert(w).second) throw InvalidArgument("fixture spec: synonym groups overlap on " + w);
    }
  }
  if (noise_level < 0.0 || noise_level > 1.0) throw InvalidArgument("fixture spec: noise_level outside [0,1]");
  if (!(sharpen_temperature > 0.0 && sharpen_temperature <= 1.0)) {
    throw InvalidArgument("fixture spec: sharpen_temperature outside (0,1]");
  }
  if (text_weight < 0.0 || text_weight > 1.0) throw InvalidArgument("fixture spec: text_weight outside [0,1]");
  if (!(epsilon > 0.0)) throw InvalidArgument("fixture spec: epsilon must be positive");
  if (embedding_dim == 0) throw InvalidArgument("fixture spec: embedding_dim must be positive");
  if (!(neutral_norm > 0.0 && neutral_norm <= 1.0)) throw InvalidArgument("fixture spec: neutral_norm outside (0,1]");
}

void to_json(nlohmann::json& j, const FixtureSpec& spec) {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& c : spec.categories) {
    nlohmann::json dist = nlohmann::json::array();
    for (const auto& [w, p] : c.distribution) dist.push_back({w, p});
    cats.push_back({{"name", c.name}, {"distribution", dist}});
  }
  j = nlohmann::json{{"seed", spec.seed},
                     {"vocabulary", spec.vocabulary},
                     {"categories", cats},
                     {"synonym_groups", spec.synonym_groups},
                     {"noise_level", spec.noise_level},
                     {"sharpen_temperature", spec.sharpen_temperature},
                     {"text_weight", spec.text_weight},
                     {"epsilon", spec.epsilon},
                     {"embedding_dim", spec.embedding_dim},
                     {"category_affinity", spec.category_affinity},
                     {"synonym_spread", spec.synonym_spread},
                     {"neutral_norm", spec.neutral_norm},
                     {"fine_tune_capable", spec.fine_tune_capable}};
}

void from_json(const nlohmann::json& j, FixtureSpec& spec) {
  spec = FixtureSpec{};
  spec.seed = j.value("seed", spec.seed);
  spec.vocabulary = j.value("vocabulary", spec.vocabulary);
  for (const auto& c : j.at("categories")) {
    FixtureCategory cat;
    cat.name = c.at("name").get<std::string>();
    const auto& dist = c.at("distribution");
    if (dist.is_object()) {
      for (const auto& [w, p] : dist.items()) cat.distribution.emplace_back(w, p.get<double>());
    } else {
      for (const auto& e : dist) cat.distribution.emplace_back(e.at(0).get<std::string>(), e.at(1).get<double>());
    }
    spec.categories.push_back(std::move(cat));
  }
  spec.synonym_groups = j.value("synonym_groups", spec.synonym_groups);
  spec.noise_level = j.value("noise_level", spec.noise_level);
  spec.sharpen_temperature = j.value("sharpen_temperature", spec.sharpen_temperature);
  spec.text_weight = j.value("text_weight", spec.text_weight);
  spec.epsilon = j.value("epsilon", spec.epsilon);
  spec.embedding_dim = j.value("embedding_dim", spec.embedding_dim);
  spec.category_affinity = j.value("category_affinity", spec.category_affinity);
  spec.synonym_spread = j.value("synonym_spread", spec.synonym_spread);
  spec.neutral_norm = j.value("neutral_norm", spec.neutral_norm);
  spec.fine_tune_capable = j.value("fine_tune_capable", spec.fine_tune_capable);
}

FixtureSpec load_fixture_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open fixture spec: " + path.string());
  try {
    return nlohmann::json::parse(in).get<FixtureSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("fixture spec " + path.string() + ": " + e.what());
  }
}

std::vector<std::string> fixture_tokenize(std::string_view text) {
  std::string cleaned(text);
  for (auto pos = cleaned.find(kMaskToken); pos != std::string::npos; pos = cleaned.find(kMaskToken)) {
    cleaned.replace(pos, kMaskToken.size(), " ");
  }
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : cleaned) {
    if (std::isalnum(c)) {
      current += static_cast<char>(std::tolower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

FixtureBackend::FixtureBackend(FixtureSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::vector<std::string> words;
  std::unordered_set<std::string> seen;
  auto add = [&](const std::string& w) {
    if (seen.insert(w).second) words.push_back(w);
  };
  for (const auto& w : spec_.vocabulary) add(w);
  for (const auto& c : spec_.categories) {
    for (const auto& [w, p] : c.distribution) add(w);
  }
  for (const auto& g : spec_.synonym_groups) {
    for (const auto& w : g) add(w);
  }
  vocab_ = Vocabulary(std::move(words));

  planted_.assign(spec_.categories.size(), std::vector<double>(vocab_.size(), 0.0));
  for (std::size_t c = 0; c < spec_.categories.size(); ++c) {
    for (const auto& [w, p] : spec_.categories[c].distribution) planted_[c][*vocab_.find(w)] += p;
  }
  build_embeddings();
}

void FixtureBackend::build_embeddings() {
  const auto dim = spec_.embedding_dim;
  const auto k = spec_.categories.size();
  std::vector<Embedding> directions;
  for (std::size_t c = 0; c < k; ++c) {
    auto d = gaussian_vector(mix64(stable_hash("category:" + spec_.categories[c].name, spec_.seed)), dim);
    normalize_in_place(d);
    directions.push_back(std::move(d));
  }

  // A word's "core" is shared by its whole synonym group.
  std::vector<std::size_t> group_of(vocab_.size(), static_cast<std::size_t>(-1));
  for (std::size_t g = 0; g < spec_.synonym_groups.size(); ++g) {
    for (const auto& w : spec_.synonym_groups[g]) group_of[*vocab_.find(w)] = g;
  }
  // 0 for a flat planted profile (or none), 1 for a single-category word.
  auto specificity = [&](const std::vector<std::size_t>& members) {
    std::vector<double> profile(k, 0.0);
    double total = 0.0;
    for (auto m : members) {
      for (std::size_t c = 0; c < k; ++c) {
        profile[c] += planted_[c][m];
        total += planted_[c][m];
      }
    }
    if (total <= 0.0 || k < 2) return 0.0;
    const double top = *std::max_element(profile.begin(), profile.end()) / total;
    const double flat = 1.0 / static_cast<double>(k);
    return (top - flat) / (1.0 - flat);
  };
  auto length_for = [&](const std::vector<std::size_t>& members) {
    return spec_.neutral_norm + (1.0 - spec_.neutral_norm) * specificity(members);
  };

  auto core_for = [&](const std::string& key, const std::vector<std::size_t>& members) {
    auto v = gaussian_vector(mix64(stable_hash(key, spec_.seed)), dim);
    normalize_in_place(v);
    std::vector<double> profile(k, 0.0);
    double total = 0.0;
    for (auto m : members) {
      for (std::size_t c = 0; c < k; ++c) {
        profile[c] += planted_[c][m];
        total += planted_[c][m];
      }
    }
    if (total > 0.0) {
      for (std::size_t c = 0; c < k; ++c) {
        const double w = spec_.category_affinity * profile[c] / total;
        for (std::size_t i = 0; i < dim; ++i) v[i] += w * directions[c][i];
      }
    }
    return v;
  };

  std::vector<Embedding> group_cores;
  std::vector<double> group_lengths;
  for (std::size_t g = 0; g < spec_.synonym_groups.size(); ++g) {
    std::vector<std::size_t> members;
    for (const auto& w : spec_.synonym_groups[g]) members.push_back(*vocab_.find(w));
    group_cores.push_back(core_for("group:" + spec_.synonym_groups[g].front(), members));
    group_lengths.push_back(length_for(members));
  }

  word_vectors_.clear();
  word_vectors_.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    const auto& w = vocab_.word(i);
    Embedding v;
    double length = 1.0;
    if (group_of[i] != static_cast<std::size_t>(-1)) {
      v = group_cores[group_of[i]];
      auto jitter = gaussian_vector(mix64(stable_hash("jitter:" + w, spec_.seed)), dim);
      const double scale = spec_.synonym_spread / std::sqrt(static_cast<double>(dim));
      for (std::size_t d = 0; d < dim; ++d) v[d] += scale * jitter[d];
      length = group_lengths[group_of[i]];
    } else {
      v = core_for("word:" + w, {i});
      length = length_for({i});
    }
    normalize_in_place(v);
    for (auto& x : v) x *= length;
    word_vectors_.push_back(std::move(v));
  }
}

bool FixtureBackend::restore_version(std::uint64_t v) {
  version_ = v;
  scale_ = std::pow(1.0 / spec_.sharpen_temperature, static_cast<double>(v));
  return true;
}

LogitVector FixtureBackend::logits_for(const std::string& prompt) const {
  const auto n = vocab_.size();
  const auto k = spec_.categories.size();
  std::vector<double> freq(n, 0.0);
  double in_vocab = 0.0;
  for (const auto& t : fixture_tokenize(prompt)) {
    if (auto idx = vocab_.find(t)) {
      freq[*idx] += 1.0;
      in_vocab += 1.0;
    }
  }
  std::vector<double> overlap(k, 0.0);
  double overlap_total = 0.0;
  if (in_vocab > 0.0) {
    for (std::size_t v = 0; v < n; ++v) {
      if (freq[v] == 0.0) continue;
      freq[v] /= in_vocab;
      // Each token votes for the categories in proportion to their planted
      // share of it, so words common to every category carry no topic.
      double share_total = 0.0;
      for (std::size_t c = 0; c < k; ++c) share_total += planted_[c][v];
      if (share_total <= 0.0) continue;
      for (std::size_t c = 0; c < k; ++c) {
        overlap[c] += freq[v] * planted_[c][v] / share_total;
      }
    }
    for (double o : overlap) overlap_total += o;
  }
  for (auto& o : overlap) o = overlap_total > 0.0 ? o / overlap_total : 1.0 / static_cast<double>(k);

  const std::uint64_t prompt_key = stable_hash(prompt, spec_.seed);
  LogitVector logits(n);
  for (std::size_t v = 0; v < n; ++v) {
    double mixture = 0.0;
    for (std::size_t c = 0; c < k; ++c) mixture += overlap[c] * planted_[c][v];
    double value = std::log(spec_.text_weight * freq[v] + (1.0 - spec_.text_weight) * mixture + spec_.epsilon);
    if (spec_.noise_level > 0.0) {
      const double u = unit_uniform(mix64(prompt_key ^ mix64(v + 1)));
      value += spec_.noise_level * (2.0 * u - 1.0);
    }
    logits[v] = value * scale_;
  }
  return logits;
}

Embedding FixtureBackend::sentence_embedding(const std::string& text) const {
  Embedding v(spec_.embedding_dim, 0.0);
  bool any = false;
  for (const auto& t : fixture_tokenize(text)) {
    if (auto idx = vocab_.find(t)) {
      any = true;
      for (std::size_t d = 0; d < v.size(); ++d) v[d] += word_vectors_[*idx][d];
    }
  }
  if (!any) v = gaussian_vector(mix64(stable_hash("sentence:" + text, spec_.seed)), spec_.embedding_dim);
  normalize_in_place(v);
  return v;
}

std::vector<LogitVector> FixtureBackend::do_mask_logits(std::span<const std::string> prompts) {
  std::vector<LogitVector> out;
  out.reserve(prompts.size());
  for (const auto& p : prompts) out.push_back(logits_for(p));
  return out;
}

std::vector<Embedding> FixtureBackend::do_embed_words(std::span<const std::string> words) {
  std::vector<Embedding> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(word_vectors_[*vocab_.find(w)]);
  return out;
}

std::vector<Embedding> FixtureBackend::do_embed_sentences(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(sentence_embedding(t));
  return out;
}

void FixtureBackend::do_fine_tune(std::span<const std::string>, std::span<const std::vector<double>>, int) {
  restore_version(version_ + 1);
}

}  // namespace ruleprompt
