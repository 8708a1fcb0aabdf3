#include "ruleprompt/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <thread>

#include <spdlog/spdlog.h>

#include "ruleprompt/artifacts.hpp"
#include "ruleprompt/error.hpp"
#include "ruleprompt/fixture_backend.hpp"
#include "ruleprompt/http_backend.hpp"
#include "ruleprompt/numeric.hpp"

namespace ruleprompt {
namespace {

// Runs fn(i) for i in [begin, end) on up to `threads` workers. Each index
// writes only its own output slot, so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, std::size_t threads, Fn&& fn) {
  const std::size_t n = end - begin;
  if (threads <= 1 || n < 2 * threads) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> workers;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t start = begin; start < end; start += chunk) {
    workers.emplace_back([&, start] {
      for (std::size_t i = start; i < std::min(end, start + chunk); ++i) fn(i);
    });
  }
}

nlohmann::json summary_to_json(const IterationSummary& s) {
  nlohmann::json j{{"iteration", s.iteration},
                   {"finetune", s.finetune},
                   {"entropy_loss", s.entropy_loss},
                   {"backend_version", s.backend_version}};
  if (s.metrics) {
    j["micro_f1"] = s.metrics->micro_f1;
    j["macro_f1"] = s.metrics->macro_f1;
  } else {
    j["micro_f1"] = nullptr;
    j["macro_f1"] = nullptr;
  }
  return j;
}

IterationSummary summary_from_json(const nlohmann::json& j) {
  IterationSummary s;
  s.iteration = j.at("iteration").get<int>();
  s.finetune = j.value("finetune", std::string("none"));
  s.entropy_loss = j.value("entropy_loss", 0.0);
  s.backend_version = j.value("backend_version", std::uint64_t{0});
  if (!j.at("micro_f1").is_null()) s.metrics = Metrics{j["micro_f1"].get<double>(), j["macro_f1"].get<double>()};
  return s;
}

}  // namespace

struct Pipeline::SignalPass {
  CorpusAverage average;
  std::vector<StrongSignalWords> ssw;
};

nlohmann::json state_to_json(const PipelineState& state, const Corpus& corpus, const CategorySet& categories) {
  auto labels = nlohmann::json::array();
  for (std::size_t i = 0; i < state.labels.size(); ++i) {
    labels.push_back({{"text_id", corpus[i].id}, {"scores", state.labels[i].scores}});
  }
  auto history = nlohmann::json::array();
  for (const auto& h : state.history) history.push_back(summary_to_json(h));
  return {{"format", 1},
          {"iteration", state.iteration},
          {"backend_version", state.backend_version},
          {"labels", labels},
          {"rules", rules_to_json(state.rules, categories)},
          {"history", history}};
}

PipelineState state_from_json(const nlohmann::json& j, const Corpus& corpus) {
  PipelineState state;
  try {
    state.iteration = j.at("iteration").get<int>();
    state.backend_version = j.at("backend_version").get<std::uint64_t>();
    const auto& labels = j.at("labels");
    if (labels.size() != corpus.size()) throw ParseError("checkpoint covers a different corpus (text count differs)");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i].at("text_id").get<std::string>() != corpus[i].id) {
        throw ParseError("checkpoint covers a different corpus (text " + std::to_string(i) + " id differs)");
      }
      state.labels.push_back(CategoryDistribution::from_scores(labels[i].at("scores").get<std::vector<double>>()));
    }
    state.rules = rules_from_json(j.at("rules"));
    for (const auto& h : j.at("history")) state.history.push_back(summary_from_json(h));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
  return state;
}

PipelineState load_checkpoint(const std::filesystem::path& path, const Corpus& corpus) {
  return state_from_json(read_json(path), corpus);
}

Pipeline::Pipeline(RunConfig config, const Corpus& corpus, LanguageModel& backend,
                   std::optional<std::filesystem::path> out_dir)
    : config_(std::move(config)),
      corpus_(corpus),
      backend_(backend),
      out_dir_(std::move(out_dir)),
      categories_((config_.validate(), config_.label_names)),
      template_(config_.template_pattern),
      verbalizer_(backend, config_.k0) {
  if (corpus_.empty()) throw InvalidArgument("empty corpus");
  if (config_.k1 > backend_.vocabulary().size()) {
    throw InvalidArgument("K1 = " + std::to_string(config_.k1) + " exceeds the backend vocabulary size " +
                          std::to_string(backend_.vocabulary().size()));
  }
  for (const auto& r : corpus_.records()) {
    if (r.gold_label && *r.gold_label >= categories_.size()) throw InvalidArgument("gold label out of range");
  }
  prompts_.reserve(corpus_.size());
  for (const auto& r : corpus_.records()) prompts_.push_back(template_.fill(r.text));
  if (out_dir_) std::filesystem::create_directories(*out_dir_);
}

std::optional<Metrics> Pipeline::metrics_for(const std::vector<CategoryDistribution>& labels) const {
  if (!corpus_.has_gold_labels()) return std::nullopt;
  std::vector<CategoryId> predicted;
  predicted.reserve(labels.size());
  for (const auto& l : labels) predicted.push_back(l.pseudo_label);
  const auto gold = corpus_.gold_labels();
  return evaluate(predicted, gold, categories_.size());
}

PipelineState Pipeline::initialize() {
  const auto k = categories_.size();
  std::vector<std::vector<VerbalizerEntry>> keywords(k);
  for (std::size_t c = 0; c < k; ++c) keywords[c].push_back(verbalizer_.entry(categories_[c].label_name));

  PipelineState state;
  state.labels.resize(corpus_.size());
  const std::span<const std::string> all(prompts_);
  for (std::size_t start = 0; start < prompts_.size(); start += config_.batch_size) {
    const auto batch = all.subspan(start, std::min(config_.batch_size, prompts_.size() - start));
    const auto logits = backend_.mask_logits(batch);
    parallel_for(0, batch.size(), config_.threads, [&](std::size_t j) {
      std::vector<double> q(k);
      for (std::size_t c = 0; c < k; ++c) q[c] = category_score(keywords[c], logits[j]);
      state.labels[start + j] = normalize_scores(q);
    });
  }
  state.backend_version = backend_.version();
  IterationSummary summary;
  summary.metrics = metrics_for(state.labels);
  summary.backend_version = state.backend_version;
  state.history.push_back(summary);
  if (summary.metrics) {
    spdlog::info("initialisation: micro-F1 {:.4f} macro-F1 {:.4f}", summary.metrics->micro_f1,
                 summary.metrics->macro_f1);
  }
  write_iteration(state, nullptr, nullptr);
  return state;
}

Pipeline::SignalPass Pipeline::extract_signals() {
  SignalPass pass;
  pass.average = CorpusAverage(backend_.version(), backend_.vocabulary().size());
  std::vector<SignalWords> sw(corpus_.size());
  const std::span<const std::string> all(prompts_);
  for (std::size_t start = 0; start < prompts_.size(); start += config_.batch_size) {
    const auto batch = all.subspan(start, std::min(config_.batch_size, prompts_.size() - start));
    const auto logits = backend_.mask_logits(batch);
    std::vector<std::vector<double>> probs(batch.size());
    parallel_for(0, batch.size(), config_.threads, [&](std::size_t j) {
      sw[start + j] = signal_words_from_logits(corpus_[start + j].id, logits[j], backend_.vocabulary(), config_.k1);
      probs[j] = softmax(logits[j]);
    });
    for (const auto& p : probs) pass.average.add(p);
  }
  pass.average.finalize();
  pass.ssw.resize(corpus_.size());
  parallel_for(0, corpus_.size(), config_.threads,
               [&](std::size_t i) { pass.ssw[i] = strong_signal_words(sw[i], pass.average, config_.k2); });
  return pass;
}

const std::vector<Embedding>& Pipeline::text_embeddings() {
  if (embeddings_version_ == backend_.version()) return embeddings_;
  std::vector<std::string> texts;
  texts.reserve(corpus_.size());
  for (const auto& r : corpus_.records()) texts.push_back(r.text);
  embeddings_.clear();
  const std::span<const std::string> all(texts);
  for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
    auto part = backend_.embed_sentences(all.subspan(start, std::min(config_.batch_size, texts.size() - start)));
    for (auto& e : part) embeddings_.push_back(std::move(e));
  }
  embeddings_version_ = backend_.version();
  return embeddings_;
}

void Pipeline::step(PipelineState& state, std::vector<UnitScores>* units_out) {
  const int iteration = state.iteration + 1;
  if (state.labels.size() != corpus_.size()) throw InvalidArgument("pipeline state does not match the corpus");

  // Rule mining from the previous iteration's labels.
  auto signals = extract_signals();
  std::set<std::string> stoplist;
  if (config_.filter_stopwords) stoplist = config_.stopwords.empty() ? default_stoplist() : config_.stopwords;
  std::vector<Transaction> transactions(corpus_.size());
  for (std::size_t i = 0; i < corpus_.size(); ++i) {
    transactions[i].text = i;
    for (const auto& w : signals.ssw[i].words) {
      if (!stoplist.contains(w.word)) transactions[i].items.push_back(w.word);
    }
  }
  RuleMiningOptions mining;
  mining.h1 = config_.h1;
  mining.h2 = config_.h2;
  mining.s = config_.s;
  mining.t = config_.t;
  mining.use_clustering = config_.use_clustering;
  mining.use_conjunctive = config_.use_conjunctive;
  auto mined = mine_rules(categories_, state.labels, transactions, mining);

  // Pseudo-label generation with the frozen rules.
  LabelingOptions labeling;
  labeling.k1 = config_.k1;
  labeling.k2 = config_.k2;
  labeling.expansion_count = config_.effective_expansion_count();
  labeling.units = {config_.use_unit1, config_.use_unit2, config_.use_unit3};
  const RuleScorer scorer(backend_, verbalizer_, template_, categories_, mined.rules, signals.average, labeling);
  static const std::vector<Embedding> no_embeddings;
  const auto& embeddings = config_.use_unit2 ? text_embeddings() : no_embeddings;
  const Embedding empty_embedding;

  std::vector<UnitScores> units(corpus_.size());
  std::vector<CategoryDistribution> labels(corpus_.size());
  const std::span<const std::string> all(prompts_);
  for (std::size_t start = 0; start < prompts_.size(); start += config_.batch_size) {
    const auto batch = all.subspan(start, std::min(config_.batch_size, prompts_.size() - start));
    const auto logits = backend_.mask_logits(batch);
    parallel_for(0, batch.size(), config_.threads, [&](std::size_t j) {
      const auto i = start + j;
      const auto& emb = config_.use_unit2 ? embeddings[i] : empty_embedding;
      units[i] = scorer.score(logits[j], emb, signals.ssw[i].word_set());
      labels[i] = CategoryDistribution::from_scores(units[i].aggregate);
    });
  }

  state.iteration = iteration;
  state.labels = std::move(labels);
  state.rules = std::move(mined.rules);
  IterationSummary summary;
  summary.iteration = iteration;
  summary.metrics = metrics_for(state.labels);
  write_iteration(state, &units, &signals);

  // Self-supervised fine-tuning on the most confident texts.
  if (config_.finetune) {
    std::vector<std::vector<double>> p1;
    p1.reserve(units.size());
    for (const auto& u : units) p1.push_back(u.p1);
    const auto plan = select_subset(corpus_, state.labels, p1, config_.finetune_proportion, config_.epochs);
    const auto result = run_finetune(backend_, template_, corpus_, plan, config_.max_retries);
    summary.finetune = result.status == FinetuneStatus::applied ? "applied" : "skipped";
    summary.entropy_loss = result.loss;
  } else {
    summary.finetune = "disabled";
  }
  state.backend_version = backend_.version();
  summary.backend_version = state.backend_version;
  state.history.push_back(summary);

  if (summary.metrics) {
    spdlog::info("iteration {}: micro-F1 {:.4f} macro-F1 {:.4f} (fine-tune: {})", iteration,
                 summary.metrics->micro_f1, summary.metrics->macro_f1, summary.finetune);
  } else {
    spdlog::info("iteration {} done (fine-tune: {})", iteration, summary.finetune);
  }
  if (out_dir_) {
    const auto checkpoint = state_to_json(state, corpus_, categories_);
    write_json(*out_dir_ / ("checkpoint_iter" + std::to_string(iteration) + ".json"), checkpoint);
    write_json(*out_dir_ / "checkpoint.json", checkpoint);
    write_metrics(state);
  }
  if (units_out) *units_out = std::move(units);
}

void Pipeline::write_iteration(const PipelineState& state, const std::vector<UnitScores>* units,
                               const SignalPass* signals) {
  if (!out_dir_) return;
  const int i = state.iteration;
  std::vector<nlohmann::json> lines;
  lines.reserve(corpus_.size());
  for (std::size_t t = 0; t < corpus_.size(); ++t) {
    lines.push_back(prediction_to_json(corpus_[t].id, units ? &(*units)[t] : nullptr, state.labels[t]));
  }
  write_jsonl(*out_dir_ / predictions_file_name(i), lines);
  if (i == 0) {
    const auto checkpoint = state_to_json(state, corpus_, categories_);
    write_json(*out_dir_ / "checkpoint_iter0.json", checkpoint);
    write_json(*out_dir_ / "checkpoint.json", checkpoint);
    write_metrics(state);
    return;
  }
  write_json(*out_dir_ / rules_file_name(i), rules_to_json(state.rules, categories_));
  if (config_.dump_signals && signals) {
    std::vector<nlohmann::json> sig;
    for (const auto& s : signals->ssw) sig.push_back(signals_to_json(s));
    write_jsonl(*out_dir_ / signals_file_name(i), sig);
  }
}

void Pipeline::write_metrics(const PipelineState& state) {
  if (!out_dir_) return;
  auto iterations = nlohmann::json::array();
  for (const auto& h : state.history) iterations.push_back(summary_to_json(h));
  nlohmann::json j{{"iterations", iterations}};
  const auto& last = state.history.back();
  if (last.metrics) {
    j["final"] = {{"iteration", last.iteration}, {"micro_f1", last.metrics->micro_f1},
                  {"macro_f1", last.metrics->macro_f1}};
  } else {
    j["final"] = nullptr;
  }
  write_json(*out_dir_ / "metrics.json", j);
}

PipelineResult Pipeline::run(std::optional<PipelineState> resume) {
  PipelineState state;
  if (resume) {
    state = std::move(*resume);
    if (state.labels.size() != corpus_.size()) throw InvalidArgument("checkpoint does not match the corpus");
    if (!backend_.restore_version(state.backend_version)) {
      throw Error("backend is at version " + std::to_string(backend_.version()) + " but the checkpoint needs " +
                  std::to_string(state.backend_version));
    }
    spdlog::info("resuming after iteration {}", state.iteration);
  } else {
    state = initialize();
  }
  PipelineResult result;
  while (state.iteration < config_.iterations) {
    try {
      step(state, &result.units);
    } catch (const std::exception& e) {
      if (out_dir_) {
        spdlog::error("iteration {} failed: {}; resume from {}", state.iteration + 1, e.what(),
                      (*out_dir_ / "checkpoint.json").string());
      }
      throw;
    }
  }
  result.metrics = state.history.empty() ? std::nullopt : state.history.back().metrics;
  result.state = std::move(state);
  return result;
}

std::unique_ptr<LanguageModel> make_backend(const RunConfig& config) {
  std::string descriptor = config.backend;
  if (const char* env = std::getenv(kBackendUrlEnv); env && *env) descriptor = env;
  if (descriptor.starts_with("http://") || descriptor.starts_with("https://")) {
    HttpBackendOptions options;
    options.url = descriptor;
    options.batch_size = config.batch_size;
    return std::make_unique<HttpBackend>(options);
  }
  std::string spec_path = config.fixture_spec;
  if (descriptor.starts_with("fixture:")) {
    spec_path = descriptor.substr(8);
  } else if (descriptor != "fixture") {
    throw InvalidArgument("unknown backend '" + descriptor + "' (expected fixture, fixture:<spec> or http://...)");
  }
  if (spec_path.empty()) throw InvalidArgument("fixture backend needs fixture_spec");
  auto spec = load_fixture_spec(spec_path);
  if (config.seed) spec.seed = *config.seed;
  return std::make_unique<FixtureBackend>(std::move(spec));
}

SweepParameter sweep_parameter_from_string(const std::string& name) {
  std::string key = name;
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  if (key == "iter" || key == "iterations") return SweepParameter::iterations;
  if (key == "rule_size") return SweepParameter::rule_size;
  if (key == "k2") return SweepParameter::k2;
  throw InvalidArgument("unknown sweep parameter '" + name + "' (expected Iter, rule_size or K2)");
}

std::string to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::iterations:
      return "Iter";
    case SweepParameter::rule_size:
      return "rule_size";
    case SweepParameter::k2:
      return "K2";
  }
  return "?";
}

void SweepReport::print(std::ostream& os) const {
  os << std::left << std::setw(12) << to_string(parameter) << std::setw(12) << "Micro-F1" << "Macro-F1\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(12) << r.value;
    if (r.metrics) {
      os << std::fixed << std::setprecision(4) << std::setw(12) << r.metrics->micro_f1 << r.metrics->macro_f1;
      os.unsetf(std::ios::fixed);
    } else {
      os << std::setw(12) << "-" << "-";
    }
    os << "\n";
  }
}

nlohmann::json SweepReport::to_json() const {
  auto rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"value", r.value},
                         {"micro_f1", r.metrics ? nlohmann::json(r.metrics->micro_f1) : nlohmann::json(nullptr)},
                         {"macro_f1", r.metrics ? nlohmann::json(r.metrics->macro_f1) : nlohmann::json(nullptr)}});
  }
  return {{"parameter", to_string(parameter)}, {"rows", rows_json}};
}

SweepReport sweep(const RunConfig& config, const Corpus& corpus, SweepParameter parameter,
                  const std::vector<double>& values, const std::function<std::unique_ptr<LanguageModel>()>& make,
                  const std::optional<std::filesystem::path>& out_dir) {
  if (values.empty()) throw InvalidArgument("sweep needs at least one value");
  SweepReport report;
  report.parameter = parameter;
  for (double v : values) {
    auto cfg = config;
    const auto as_size = static_cast<std::size_t>(v);
    switch (parameter) {
      case SweepParameter::iterations:
        cfg.iterations = static_cast<int>(v);
        break;
      case SweepParameter::rule_size:
        cfg.s = cfg.t = as_size;
        break;
      case SweepParameter::k2:
        cfg.k2 = as_size;
        break;
    }
    std::optional<std::filesystem::path> dir;
    if (out_dir) {
      std::ostringstream name;
      name << to_string(parameter) << "_" << v;
      dir = *out_dir / name.str();
    }
    auto backend = make();
    Pipeline pipeline(cfg, corpus, *backend, dir);
    const auto result = pipeline.run();
    report.rows.push_back({v, result.metrics});
  }
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    write_json(*out_dir / "sweep.json", report.to_json());
  }
  return report;
}

}  // namespace ruleprompt
