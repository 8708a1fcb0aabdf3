#include "ruleprompt/artifacts.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <regex>

#include "ruleprompt/error.hpp"

namespace ruleprompt {

nlohmann::json rules_to_json(std::span<const LogicalRule> rules, const CategorySet& categories) {
  auto out = nlohmann::json::array();
  for (const auto& r : rules) {
    auto disj = nlohmann::json::array();
    for (const auto& t : r.disjunctive) disj.push_back({t.word, t.support});
    auto conj = nlohmann::json::array();
    for (const auto& t : r.conjunctive) {
      conj.push_back({{t.pair.first, t.pair.second}, t.support, t.first_support, t.second_support});
    }
    auto excluded = nlohmann::json::array();
    for (const auto& p : r.excluded_pairs) excluded.push_back({p.first, p.second});
    out.push_back({{"category", r.category},
                   {"label_name", categories[r.category].label_name},
                   {"disjunctive", disj},
                   {"conjunctive", conj},
                   {"fallback", r.fallback},
                   {"excluded_label_words", r.excluded_label_words},
                   {"excluded_pairs", excluded}});
  }
  return out;
}

std::vector<LogicalRule> rules_from_json(const nlohmann::json& j) {
  std::vector<LogicalRule> out;
  try {
    for (const auto& r : j) {
      LogicalRule rule;
      rule.category = r.at("category").get<CategoryId>();
      for (const auto& t : r.at("disjunctive")) rule.disjunctive.push_back({t.at(0), t.at(1)});
      for (const auto& t : r.at("conjunctive")) {
        rule.conjunctive.push_back({WordPair::of(t.at(0).at(0), t.at(0).at(1)), t.at(1), t.at(2), t.at(3)});
      }
      rule.fallback = r.value("fallback", false);
      rule.excluded_label_words = r.value("excluded_label_words", std::vector<std::string>{});
      if (r.contains("excluded_pairs")) {
        for (const auto& p : r["excluded_pairs"]) rule.excluded_pairs.push_back(WordPair::of(p.at(0), p.at(1)));
      }
      out.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed rules: ") + e.what());
  }
  return out;
}

nlohmann::json prediction_to_json(const std::string& text_id, const UnitScores* units,
                                  const CategoryDistribution& dist) {
  nlohmann::json j;
  j["text_id"] = text_id;
  j["p1"] = units ? nlohmann::json(units->p1) : nlohmann::json(dist.scores);
  j["p2"] = units ? nlohmann::json(units->p2) : nlohmann::json(nullptr);
  j["p3"] = units ? nlohmann::json(units->p3) : nlohmann::json(nullptr);
  j["aggregate"] = dist.scores;
  j["pseudo_label"] = dist.pseudo_label;
  j["confidence"] = dist.confidence;
  return j;
}

nlohmann::json signals_to_json(const StrongSignalWords& ssw) {
  auto words = nlohmann::json::array();
  for (const auto& w : ssw.words) words.push_back({w.word, w.score});
  return {{"text_id", ssw.text_id}, {"ssw", words}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_jsonl(const std::filesystem::path& path, std::span<const nlohmann::json> lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& l : lines) out << l.dump() << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string rules_file_name(int iteration) { return "rules_iter" + std::to_string(iteration) + ".json"; }
std::string predictions_file_name(int iteration) {
  return "predictions_iter" + std::to_string(iteration) + ".jsonl";
}
std::string signals_file_name(int iteration) { return "signals_iter" + std::to_string(iteration) + ".jsonl"; }

void print_rule_report(std::ostream& os, const nlohmann::json& rules, int iteration) {
  os << "== iteration " << iteration << " ==\n";
  for (const auto& r : rules) {
    os << "\n[" << r.value("label_name", std::string("?")) << "] (category " << r.at("category").get<int>() << ")";
    if (r.value("fallback", false)) os << "  fallback: label name only";
    os << "\n  disjunctive:\n";
    if (r.at("disjunctive").empty()) os << "    (none)\n";
    for (const auto& t : r.at("disjunctive")) {
      os << "    " << std::left << std::setw(24) << t.at(0).get<std::string>() << std::fixed << std::setprecision(3)
         << t.at(1).get<double>() << "\n";
    }
    os << "  conjunctive:\n";
    if (r.at("conjunctive").empty()) os << "    (none)\n";
    for (const auto& t : r.at("conjunctive")) {
      const auto label = t.at(0).at(0).get<std::string>() + " & " + t.at(0).at(1).get<std::string>();
      os << "    " << std::left << std::setw(32) << label << std::fixed << std::setprecision(3)
         << t.at(1).get<double>() << "  (" << t.at(2).get<double>() << ", " << t.at(3).get<double>() << ")\n";
    }
    if (r.contains("excluded_label_words") && !r["excluded_label_words"].empty()) {
      os << "  removed label names:";
      for (const auto& w : r["excluded_label_words"]) os << " " << w.get<std::string>();
      os << "\n";
    }
    if (r.contains("excluded_pairs") && !r["excluded_pairs"].empty()) {
      os << "  pairs excluded as confusing:";
      for (const auto& p : r["excluded_pairs"]) {
        os << " " << p.at(0).get<std::string>() << "&" << p.at(1).get<std::string>();
      }
      os << "\n";
    }
  }
  os.unsetf(std::ios::fixed);
}

void print_rule_reports(std::ostream& os, const std::filesystem::path& dir) {
  static const std::regex pattern(R"(rules_iter(\d+)\.json)");
  std::vector<std::pair<int, std::filesystem::path>> files;
  if (!std::filesystem::is_directory(dir)) throw Error("not a directory: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const auto name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) files.emplace_back(std::stoi(m[1]), entry.path());
  }
  if (files.empty()) throw Error("no rules_iter*.json files in " + dir.string());
  std::sort(files.begin(), files.end());
  for (const auto& [i, path] : files) {
    print_rule_report(os, read_json(path), i);
    os << "\n";
  }
}

}  // namespace ruleprompt
