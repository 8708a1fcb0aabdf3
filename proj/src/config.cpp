#include "ruleprompt/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "ruleprompt/error.hpp"
#include "ruleprompt/prompting.hpp"

namespace ruleprompt {
namespace {

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss{std::string(value)};
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view raw) {
  const auto value = trim(raw);
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("config: '" + std::string(key) + "' expects a number, got '" + value + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view raw) {
  const auto value = trim(raw);
  try {
    std::size_t used = 0;
    const double d = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ParseError("config: '" + std::string(key) + "' expects a real number, got '" + value + "'");
  }
}

bool parse_bool(std::string_view key, std::string_view raw) {
  const auto v = lower(trim(raw));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError("config: '" + std::string(key) + "' expects true/false, got '" + v + "'");
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void apply_preset(RunConfig& c, const DatasetPreset& p) {
  c.label_names = p.label_names;
  c.template_pattern = p.template_pattern;
  c.epochs = p.epochs;
  c.expansion_count = p.expansion_count;
  if (p.imbalanced) apply_setting(c, "imbalanced", "true");
}

}  // namespace

const std::vector<DatasetPreset>& dataset_presets() {
  static const std::vector<DatasetPreset> presets{
      {"agnews", {"politics", "sports", "business", "technology"}, "A [MASK] news: {d}", false, std::nullopt, 7},
      {"20news", {"computer", "sports", "science", "politics", "religion"}, "A [MASK] news: {d}", false, 1, 30},
      {"nyt",
       {"business", "politics", "sports", "health", "education", "estate", "arts", "science", "technology"},
       "Topic: [MASK] {d}",
       true,
       std::nullopt,
       7},
      {"imdb", {"good", "bad"}, "{d} In summary, the film was [MASK].", false, std::nullopt, 7},
  };
  return presets;
}

const DatasetPreset& dataset_preset(std::string_view name) {
  const auto key = lower(name);
  for (const auto& p : dataset_presets()) {
    if (p.name == key) return p;
  }
  throw InvalidArgument("unknown dataset preset: " + std::string(name));
}

void RunConfig::validate() const {
  if (label_names.empty()) throw InvalidArgument("config: label_names is empty");
  Template{template_pattern};
  for (const auto& [name, h] : {std::pair{"h1", h1}, std::pair{"h2", h2},
                                std::pair{"finetune_proportion", finetune_proportion}}) {
    if (!(h > 0.0 && h <= 1.0)) throw InvalidArgument(std::string("config: ") + name + " must be in (0, 1]");
  }
  if (k0 < 1) throw InvalidArgument("config: K0 must be >= 1");
  if (k2 < 1 || k2 > k1) throw InvalidArgument("config: need 1 <= K2 <= K1");
  if (s < 1 || t < 1) throw InvalidArgument("config: S and T must be >= 1");
  if (iterations < 1) throw InvalidArgument("config: Iter must be >= 1");
  if (epochs < 1) throw InvalidArgument("config: epochs must be >= 1");
  if (expansion_count && *expansion_count < 1) throw InvalidArgument("config: expansion_count must be >= 1");
  if (!use_unit1 && !use_unit2 && !use_unit3) throw InvalidArgument("config: at least one unit must be enabled");
  if (batch_size < 1) throw InvalidArgument("config: batch_size must be >= 1");
  if (max_retries < 1) throw InvalidArgument("config: max_retries must be >= 1");
}

void apply_setting(RunConfig& c, std::string_view raw_key, std::string_view value) {
  const auto key = lower(trim(raw_key));
  const auto v = trim(value);
  if (key == "dataset") {
    apply_preset(c, dataset_preset(v));
  } else if (key == "imbalanced") {
    if (parse_bool(key, v)) {
      c.h1 = c.h2 = 0.05;
      c.finetune_proportion = 0.90;
    } else {
      c.h1 = c.h2 = 0.1;
      c.finetune_proportion = 0.85;
    }
  } else if (key == "label_names") {
    c.label_names = split_list(v);
  } else if (key == "template") {
    c.template_pattern = v;
  } else if (key == "k0") {
    c.k0 = parse_number<std::size_t>(key, v);
  } else if (key == "k1") {
    c.k1 = parse_number<std::size_t>(key, v);
  } else if (key == "k2") {
    c.k2 = parse_number<std::size_t>(key, v);
  } else if (key == "h1") {
    c.h1 = parse_real(key, v);
  } else if (key == "h2") {
    c.h2 = parse_real(key, v);
  } else if (key == "s") {
    c.s = parse_number<std::size_t>(key, v);
  } else if (key == "t") {
    c.t = parse_number<std::size_t>(key, v);
  } else if (key == "rule_size") {
    c.s = c.t = parse_number<std::size_t>(key, v);
  } else if (key == "iter" || key == "iterations") {
    c.iterations = parse_number<int>(key, v);
  } else if (key == "finetune_proportion") {
    c.finetune_proportion = parse_real(key, v);
  } else if (key == "expansion_count") {
    c.expansion_count = parse_number<std::size_t>(key, v);
  } else if (key == "epochs") {
    c.epochs = parse_number<int>(key, v);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, v);
  } else if (key == "backend") {
    c.backend = v;
  } else if (key == "fixture_spec") {
    c.fixture_spec = v;
  } else if (key == "finetune") {
    c.finetune = parse_bool(key, v);
  } else if (key == "max_retries") {
    c.max_retries = parse_number<int>(key, v);
  } else if (key == "use_conjunctive") {
    c.use_conjunctive = parse_bool(key, v);
  } else if (key == "use_clustering") {
    c.use_clustering = parse_bool(key, v);
  } else if (key == "use_unit1") {
    c.use_unit1 = parse_bool(key, v);
  } else if (key == "use_unit2") {
    c.use_unit2 = parse_bool(key, v);
  } else if (key == "use_unit3") {
    c.use_unit3 = parse_bool(key, v);
  } else if (key == "filter_stopwords") {
    c.filter_stopwords = parse_bool(key, v);
  } else if (key == "stopwords") {
    const auto words = split_list(v);
    c.stopwords = {words.begin(), words.end()};
  } else if (key == "dump_signals") {
    c.dump_signals = parse_bool(key, v);
  } else if (key == "batch_size") {
    c.batch_size = parse_number<std::size_t>(key, v);
  } else if (key == "threads") {
    c.threads = parse_number<std::size_t>(key, v);
  } else {
    throw ParseError("config: unknown key '" + key + "'");
  }
}

RunConfig parse_config(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::stringstream ss{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    entries.emplace_back(lower(trim(content.substr(0, eq))), trim(content.substr(eq + 1)));
  }
  // Presets first, then the imbalance switch, then everything else.
  RunConfig config;
  for (const char* stage : {"dataset", "imbalanced"}) {
    for (const auto& [k, v] : entries) {
      if (k == stage) apply_setting(config, k, v);
    }
  }
  for (const auto& [k, v] : entries) {
    if (k != "dataset" && k != "imbalanced") apply_setting(config, k, v);
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_config_text(const RunConfig& c) {
  std::ostringstream os;
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "label_names = ";
  for (std::size_t i = 0; i < c.label_names.size(); ++i) os << (i ? ", " : "") << c.label_names[i];
  os << "\ntemplate = " << c.template_pattern << "\n";
  os << "K0 = " << c.k0 << "\nK1 = " << c.k1 << "\nK2 = " << c.k2 << "\n";
  os << "h1 = " << format_real(c.h1) << "\nh2 = " << format_real(c.h2) << "\n";
  os << "S = " << c.s << "\nT = " << c.t << "\nIter = " << c.iterations << "\n";
  os << "finetune_proportion = " << format_real(c.finetune_proportion) << "\n";
  if (c.expansion_count) os << "expansion_count = " << *c.expansion_count << "\n";
  os << "epochs = " << c.epochs << "\n";
  if (c.seed) os << "seed = " << *c.seed << "\n";
  os << "backend = " << c.backend << "\n";
  if (!c.fixture_spec.empty()) os << "fixture_spec = " << c.fixture_spec << "\n";
  os << "finetune = " << b(c.finetune) << "\nmax_retries = " << c.max_retries << "\n";
  os << "use_conjunctive = " << b(c.use_conjunctive) << "\nuse_clustering = " << b(c.use_clustering) << "\n";
  os << "use_unit1 = " << b(c.use_unit1) << "\nuse_unit2 = " << b(c.use_unit2)
     << "\nuse_unit3 = " << b(c.use_unit3) << "\n";
  os << "filter_stopwords = " << b(c.filter_stopwords) << "\n";
  if (!c.stopwords.empty()) {
    os << "stopwords = ";
    bool first = true;
    for (const auto& w : c.stopwords) {
      os << (first ? "" : ", ") << w;
      first = false;
    }
    os << "\n";
  }
  os << "dump_signals = " << b(c.dump_signals) << "\nbatch_size = " << c.batch_size
     << "\nthreads = " << c.threads << "\n";
  return os.str();
}

}  // namespace ruleprompt
