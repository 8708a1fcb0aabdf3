#include "ruleprompt/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "ruleprompt/error.hpp"

namespace ruleprompt {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto* ws = " \t\r\n";
  const auto begin = s.find_first_not_of(ws);
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(ws);
  return s.substr(begin, end - begin + 1);
}

struct RawRecord {
  std::size_t line = 0;
  std::string id;
  std::string text;
  std::optional<std::string> label;
};

std::vector<RawRecord> read_jsonl(std::istream& in) {
  std::vector<RawRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("text")) {
      throw ParseError("line " + std::to_string(line_no) + ": expected object with 'id' and 'text'");
    }
    RawRecord rec;
    rec.line = line_no;
    const auto& id = obj["id"];
    if (id.is_string()) {
      rec.id = id.get<std::string>();
    } else if (id.is_number_integer()) {
      rec.id = std::to_string(id.get<long long>());
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": 'id' must be a string");
    }
    if (!obj["text"].is_string()) {
      throw ParseError("line " + std::to_string(line_no) + ": 'text' must be a string");
    }
    rec.text = obj["text"].get<std::string>();
    if (obj.contains("label") && !obj["label"].is_null()) {
      if (!obj["label"].is_string()) {
        throw ParseError("line " + std::to_string(line_no) + ": 'label' must be a string");
      }
      rec.label = obj["label"].get<std::string>();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

// RFC 4180 style: quoted fields may hold commas, doubled quotes and newlines.
std::vector<std::pair<std::size_t, std::vector<std::string>>> split_csv(std::istream& in) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool row_has_data = false;
  std::size_t line = 1;
  std::size_t row_start = 1;
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        row_has_data = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        row_has_data = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_has_data || !field.empty()) {
          row.push_back(std::move(field));
          rows.emplace_back(row_start, std::move(row));
        }
        field.clear();
        row.clear();
        row_has_data = false;
        ++line;
        row_start = line;
        break;
      default:
        field += c;
        row_has_data = true;
    }
  }
  if (quoted) throw ParseError("line " + std::to_string(row_start) + ": unterminated quoted field");
  if (row_has_data || !field.empty()) {
    row.push_back(std::move(field));
    rows.emplace_back(row_start, std::move(row));
  }
  return rows;
}

std::vector<RawRecord> read_csv(std::istream& in) {
  auto rows = split_csv(in);
  std::vector<RawRecord> out;
  if (rows.empty()) return out;
  const auto& header = rows.front().second;
  std::vector<std::string> names;
  for (const auto& h : header) names.push_back(lower(trim(h)));
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
  };
  const auto id_col = column("id");
  const auto text_col = column("text");
  const auto label_col = column("label");
  if (!id_col || !text_col) throw ParseError("line 1: CSV header must contain id,text[,label]");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line_no, fields] = rows[r];
    if (fields.size() != names.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(names.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    RawRecord rec;
    rec.line = line_no;
    rec.id = trim(fields[*id_col]);
    rec.text = fields[*text_col];
    if (label_col && !trim(fields[*label_col]).empty()) rec.label = trim(fields[*label_col]);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

CategorySet::CategorySet(const std::vector<std::string>& label_names) {
  std::unordered_set<std::string> seen;
  for (const auto& raw : label_names) {
    auto name = trim(raw);
    if (name.empty()) throw InvalidArgument("label name must be non-empty");
    if (!seen.insert(lower(name)).second) throw InvalidArgument("duplicate label name: " + name);
    categories_.push_back({categories_.size(), std::move(name)});
  }
}

std::vector<std::string> CategorySet::label_names() const {
  std::vector<std::string> out;
  out.reserve(categories_.size());
  for (const auto& c : categories_) out.push_back(c.label_name);
  return out;
}

std::optional<CategoryId> CategorySet::find(const std::string& label) const {
  const auto key = lower(trim(label));
  for (const auto& c : categories_) {
    if (lower(c.label_name) == key) return c.id;
  }
  return std::nullopt;
}

Corpus::Corpus(std::vector<TextRecord> records) : records_(std::move(records)) {}

bool Corpus::has_gold_labels() const {
  return !records_.empty() && std::all_of(records_.begin(), records_.end(),
                                          [](const TextRecord& r) { return r.gold_label.has_value(); });
}

std::vector<CategoryId> Corpus::gold_labels() const {
  std::vector<CategoryId> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.gold_label.value());
  return out;
}

CorpusFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = lower(path.extension().string());
  if (ext == ".csv") return CorpusFormat::csv;
  return CorpusFormat::jsonl;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const CategorySet& categories) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open corpus file: " + path.string());
  auto raw = format == CorpusFormat::jsonl ? read_jsonl(in) : read_csv(in);
  if (raw.empty()) throw ParseError("empty corpus");

  std::unordered_set<std::string> ids;
  std::vector<TextRecord> records;
  records.reserve(raw.size());
  for (auto& r : raw) {
    const auto where = "line " + std::to_string(r.line) + ": ";
    if (r.id.empty()) throw ParseError(where + "empty id");
    if (!ids.insert(r.id).second) throw ParseError(where + "duplicate id '" + r.id + "'");
    auto text = trim(r.text);
    if (text.empty()) throw ParseError(where + "empty text");
    TextRecord rec{std::move(r.id), std::move(text), std::nullopt};
    if (r.label) {
      auto id = categories.find(*r.label);
      if (!id) throw ParseError(where + "unknown label '" + *r.label + "'");
      rec.gold_label = *id;
    }
    records.push_back(std::move(rec));
  }
  return Corpus(std::move(records));
}

CategoryDistribution CategoryDistribution::from_scores(std::vector<double> scores) {
  CategoryDistribution d;
  d.scores = std::move(scores);
  if (d.scores.empty()) return d;
  std::size_t top1 = 0;
  for (std::size_t i = 1; i < d.scores.size(); ++i) {
    if (d.scores[i] > d.scores[top1]) top1 = i;
  }
  std::optional<std::size_t> top2;
  for (std::size_t i = 0; i < d.scores.size(); ++i) {
    if (i == top1) continue;
    if (!top2 || d.scores[i] > d.scores[*top2]) top2 = i;
  }
  d.pseudo_label = top1;
  // A single category has no runner-up; its gap is measured against zero.
  d.confidence = d.scores[top1] - (top2 ? d.scores[*top2] : 0.0);
  return d;
}

Metrics evaluate(std::span<const CategoryId> predictions, std::span<const CategoryId> gold,
                 std::size_t num_categories) {
  if (predictions.size() != gold.size()) {
    throw InvalidArgument("evaluate: " + std::to_string(predictions.size()) +
                          " predictions vs " + std::to_string(gold.size()) + " gold labels");
  }
  if (gold.empty()) throw InvalidArgument("evaluate: no labels");
  std::size_t k = num_categories;
  if (k == 0) {
    for (std::size_t i = 0; i < gold.size(); ++i) k = std::max({k, gold[i] + 1, predictions[i] + 1});
  }
  std::vector<std::size_t> tp(k, 0), fp(k, 0), fn(k, 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] >= k || predictions[i] >= k) throw InvalidArgument("evaluate: category id out of range");
    if (predictions[i] == gold[i]) {
      ++tp[gold[i]];
    } else {
      ++fp[predictions[i]];
      ++fn[gold[i]];
    }
  }
  std::size_t total_tp = 0, total_fp = 0, total_fn = 0;
  double macro = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    total_tp += tp[c];
    total_fp += fp[c];
    total_fn += fn[c];
    const auto denom = 2 * tp[c] + fp[c] + fn[c];
    macro += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
  }
  Metrics m;
  const auto denom = 2 * total_tp + total_fp + total_fn;
  m.micro_f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(total_tp) / static_cast<double>(denom);
  m.macro_f1 = macro / static_cast<double>(k);
  return m;
}

}  // namespace ruleprompt
