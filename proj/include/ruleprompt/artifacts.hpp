#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ruleprompt/corpus.hpp"
#include "ruleprompt/labeling.hpp"
#include "ruleprompt/rules.hpp"
#include "ruleprompt/signals.hpp"

namespace ruleprompt {

// rules_iter{i}.json: array of
//   {category, label_name, disjunctive: [[word, support]...],
//    conjunctive: [[[w1, w2], pair_support, sup_w1, sup_w2]...], ...}
nlohmann::json rules_to_json(std::span<const LogicalRule> rules, const CategorySet& categories);
std::vector<LogicalRule> rules_from_json(const nlohmann::json& j);

// One predictions_iter{i}.jsonl line:
//   {text_id, p1, p2, p3, aggregate, pseudo_label, confidence}
// Unit outputs absent at initialisation are written as null.
nlohmann::json prediction_to_json(const std::string& text_id, const UnitScores* units,
                                  const CategoryDistribution& dist);

// One signals_iter{i}.jsonl line: {text_id, ssw: [[word, score]...]}
nlohmann::json signals_to_json(const StrongSignalWords& ssw);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_jsonl(const std::filesystem::path& path, std::span<const nlohmann::json> lines);
nlohmann::json read_json(const std::filesystem::path& path);

std::string rules_file_name(int iteration);
std::string predictions_file_name(int iteration);
std::string signals_file_name(int iteration);

// Human-readable table of the rules in one rules_iter file.
void print_rule_report(std::ostream& os, const nlohmann::json& rules, int iteration);
// Reports every rules_iter*.json in `dir`, iteration order.
void print_rule_reports(std::ostream& os, const std::filesystem::path& dir);

}  // namespace ruleprompt
