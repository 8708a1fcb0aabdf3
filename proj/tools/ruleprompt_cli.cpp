// Command-line front end: run, sweep, report and generate.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "ruleprompt/artifacts.hpp"
#include "ruleprompt/benchmark.hpp"
#include "ruleprompt/config.hpp"
#include "ruleprompt/error.hpp"
#include "ruleprompt/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ruleprompt;

namespace {

// A relative fixture_spec is resolved against the config file's directory.
RunConfig read_config(const fs::path& path, const std::string& backend_override) {
  auto config = load_config(path);
  if (!config.fixture_spec.empty() && fs::path(config.fixture_spec).is_relative()) {
    config.fixture_spec = (path.parent_path() / config.fixture_spec).string();
  }
  if (!backend_override.empty()) config.backend = backend_override;
  return config;
}

Corpus read_corpus(const fs::path& path, const RunConfig& config) {
  return load_corpus(path, format_from_path(path), CategorySet(config.label_names));
}

void print_metrics(const PipelineResult& result) {
  for (const auto& h : result.state.history) {
    if (!h.metrics) continue;
    std::cout << "iteration " << h.iteration << ": micro-F1 " << h.metrics->micro_f1 << "  macro-F1 "
              << h.metrics->macro_f1 << "\n";
  }
}

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> values;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw InvalidArgument("bad sweep value '" + item + "'");
    }
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rule-guided prompt classification with label names only"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  std::string config_path, corpus_path, out_dir, backend, resume;
  std::size_t threads = 0;

  auto* run = app.add_subcommand("run", "Run the iterative pipeline");
  run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--corpus", corpus_path, "JSONL or CSV corpus")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--backend", backend, "fixture, fixture:<spec> or http://host:port");
  run->add_option("--resume", resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
  run->add_option("--threads", threads, "Worker threads for per-text scoring");

  std::string param, values;
  auto* sw = app.add_subcommand("sweep", "Vary one parameter with a fresh run per value");
  sw->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  sw->add_option("--corpus", corpus_path, "JSONL or CSV corpus")->required()->check(CLI::ExistingFile);
  sw->add_option("--out", out_dir, "Output directory");
  sw->add_option("--backend", backend, "fixture, fixture:<spec> or http://host:port");
  sw->add_option("--param", param, "Iter, rule_size or K2")->required();
  sw->add_option("--values", values, "Comma-separated values")->required();

  std::string rules_dir;
  auto* report = app.add_subcommand("report", "Print the rule dumps of a run");
  report->add_option("--rules", rules_dir, "Run output directory")->required()->check(CLI::ExistingDirectory);

  std::uint64_t seed = 7;
  std::size_t per_category = 200;
  auto* gen = app.add_subcommand("generate", "Write the synthetic benchmark corpus, fixture spec and config");
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--seed", seed, "Generator seed");
  gen->add_option("--texts-per-category", per_category, "Texts generated per category");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*run) {
      auto config = read_config(config_path, backend);
      if (threads) config.threads = threads;
      const auto corpus = read_corpus(corpus_path, config);
      auto model = make_backend(config);
      fs::create_directories(out_dir);
      std::ofstream(fs::path(out_dir) / "config.resolved") << to_config_text(config);
      Pipeline pipeline(config, corpus, *model, fs::path(out_dir));
      std::optional<PipelineState> state;
      if (!resume.empty()) state = load_checkpoint(resume, corpus);
      print_metrics(pipeline.run(std::move(state)));
    } else if (*sw) {
      const auto config = read_config(config_path, backend);
      const auto corpus = read_corpus(corpus_path, config);
      std::optional<fs::path> dir;
      if (!out_dir.empty()) dir = out_dir;
      const auto result = sweep(config, corpus, sweep_parameter_from_string(param), parse_values(values),
                                [&] { return make_backend(config); }, dir);
      result.print(std::cout);
    } else if (*report) {
      print_rule_reports(std::cout, rules_dir);
    } else if (*gen) {
      BenchmarkOptions options;
      options.seed = seed;
      options.texts_per_category = per_category;
      const auto bench = make_benchmark(options);
      const fs::path dir(out_dir);
      fs::create_directories(dir);
      std::vector<nlohmann::json> lines;
      for (const auto& r : bench.records) {
        lines.push_back({{"id", r.id}, {"text", r.text}, {"label", bench.label_names[*r.gold_label]}});
      }
      write_jsonl(dir / "corpus.jsonl", lines);
      write_json(dir / "fixture.json", nlohmann::json(bench.spec));
      auto config = benchmark_config(bench);
      config.fixture_spec = "fixture.json";
      std::ofstream(dir / "config.txt") << to_config_text(config);
      std::cout << "wrote " << bench.records.size() << " texts to " << (dir / "corpus.jsonl").string() << "\n";
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 2;
  }
  return 0;
}
