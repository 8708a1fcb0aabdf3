#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ruleprompt {

using CategoryId = std::size_t;

struct Category {
  CategoryId id = 0;
  std::string label_name;
};

struct TextRecord {
  std::string id;
  std::string text;
  // Evaluation only. Nothing outside evaluate() may look at this.
  std::optional<CategoryId> gold_label;
};

// Ordered set of categories with contiguous ids 0..K-1.
class CategorySet {
 public:
  CategorySet() = default;
  explicit CategorySet(const std::vector<std::string>& label_names);

  std::size_t size() const { return categories_.size(); }
  const Category& operator[](CategoryId id) const { return categories_.at(id); }
  const std::vector<Category>& all() const { return categories_; }
  std::vector<std::string> label_names() const;

  // Case-insensitive lookup of a label string.
  std::optional<CategoryId> find(const std::string& label) const;

 private:
  std::vector<Category> categories_;
};

// Immutable after load.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<TextRecord> records);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const TextRecord& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<TextRecord>& records() const { return records_; }

  bool has_gold_labels() const;
  std::vector<CategoryId> gold_labels() const;

 private:
  std::vector<TextRecord> records_;
};

enum class CorpusFormat { jsonl, csv };

CorpusFormat format_from_path(const std::filesystem::path& path);

// Throws ParseError naming the line on malformed input, on unknown gold labels,
// on duplicate ids and on an empty file.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const CategorySet& categories);

// Per-text score vector over categories with the derived pseudo label and the
// top1 - top2 confidence gap.
struct CategoryDistribution {
  std::vector<double> scores;
  CategoryId pseudo_label = 0;
  double confidence = 0.0;

  // Derives label (lowest index on ties) and confidence from the scores.
  static CategoryDistribution from_scores(std::vector<double> scores);
};

struct Metrics {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
};

// Multi-class micro/macro F1. The number of classes is taken from
// num_categories, or inferred from the largest id when zero. A class with no
// support in either list scores 0 and still counts in the macro average.
Metrics evaluate(std::span<const CategoryId> predictions, std::span<const CategoryId> gold,
                 std::size_t num_categories = 0);


}  // namespace ruleprompt
