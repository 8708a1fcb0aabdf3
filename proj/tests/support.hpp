#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "ruleprompt/lm_backend.hpp"

namespace testing_support {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ruleprompt_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream(p, std::ios::binary) << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Backend with hand-set word embeddings and one logit vector per prompt; an
// unknown prompt gets `default_logits`. Sentence embeddings come from the
// `sentences` table, falling back to the first word's vector.
class ScriptedBackend final : public ruleprompt::LanguageModel {
 public:
  ScriptedBackend(std::vector<std::string> words, std::vector<ruleprompt::Embedding> vectors)
      : vocab_(std::move(words)), vectors_(std::move(vectors)) {
    default_logits.assign(vocab_.size(), 0.0);
  }

  const ruleprompt::Vocabulary& vocabulary() const override { return vocab_; }
  std::uint64_t version() const override { return version_; }
  bool supports_fine_tune() const override { return fine_tune_capable; }

  std::vector<std::pair<std::string, ruleprompt::LogitVector>> logits;
  std::vector<std::pair<std::string, ruleprompt::Embedding>> sentences;
  ruleprompt::LogitVector default_logits;
  bool fine_tune_capable = true;
  int fine_tune_failures = 0;  // calls that throw TransportError before succeeding
  int fine_tune_calls = 0;
  std::vector<std::string> last_prompts;

 protected:
  std::vector<ruleprompt::LogitVector> do_mask_logits(std::span<const std::string> prompts) override {
    std::vector<ruleprompt::LogitVector> out;
    for (const auto& p : prompts) {
      auto v = default_logits;
      for (const auto& [key, row] : logits) {
        if (key == p) v = row;
      }
      out.push_back(std::move(v));
    }
    return out;
  }
  std::vector<ruleprompt::Embedding> do_embed_words(std::span<const std::string> words) override {
    std::vector<ruleprompt::Embedding> out;
    for (const auto& w : words) out.push_back(vectors_[*vocab_.find(w)]);
    return out;
  }
  std::vector<ruleprompt::Embedding> do_embed_sentences(std::span<const std::string> texts) override {
    std::vector<ruleprompt::Embedding> out;
    for (const auto& t : texts) {
      ruleprompt::Embedding e = vectors_.front();
      bool found = false;
      for (const auto& [key, v] : sentences) {
        if (key == t) {
          e = v;
          found = true;
        }
      }
      if (!found) {
        for (std::size_t i = 0; i < vocab_.size(); ++i) {
          if (t.find(vocab_.word(i)) != std::string::npos) {
            e = vectors_[i];
            break;
          }
        }
      }
      out.push_back(std::move(e));
    }
    return out;
  }
  void do_fine_tune(std::span<const std::string> prompts, std::span<const std::vector<double>>, int) override;

 private:
  ruleprompt::Vocabulary vocab_;
  std::vector<ruleprompt::Embedding> vectors_;
  std::uint64_t version_ = 0;
};

std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t k);

}  // namespace testing_support
