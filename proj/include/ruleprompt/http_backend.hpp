#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "json.hpp"
#include "ruleprompt/lm_backend.hpp"

namespace httplib {
class Client;
}

namespace ruleprompt {

struct HttpBackendOptions {
  std::string url;  // e.g. http://localhost:8080
  std::chrono::seconds timeout{600};
  std::size_t batch_size = 64;
  // Attempts for a read answered with 503 (fine-tune in progress).
  int busy_retries = 5;
  std::chrono::milliseconds busy_backoff{500};
};

// Client for the model-server protocol:
//   GET  /health, GET /vocab
//   POST /mask_logits, /embed_words, /embed_sentences, /fine_tune
// Every response carries the model version (X-Model-Version header or a
// model_version field); a read that reports a version other than the one the
// client is synchronised to is rejected as a TransportError.
class HttpBackend final : public LanguageModel {
 public:
  explicit HttpBackend(HttpBackendOptions options);
  ~HttpBackend() override;

  const Vocabulary& vocabulary() const override { return vocab_; }
  std::uint64_t version() const override { return version_; }
  bool supports_fine_tune() const override { return fine_tune_capable_; }
  bool restore_version(std::uint64_t v) override;

 protected:
  std::vector<LogitVector> do_mask_logits(std::span<const std::string> prompts) override;
  std::vector<Embedding> do_embed_words(std::span<const std::string> words) override;
  std::vector<Embedding> do_embed_sentences(std::span<const std::string> texts) override;
  void do_fine_tune(std::span<const std::string> prompts,
                    std::span<const std::vector<double>> distributions, int epochs) override;

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body, bool read_only);
  nlohmann::json get(const std::string& path);
  std::vector<std::vector<double>> batched_rows(const std::string& path, const std::string& key,
                                                const std::string& result_key,
                                                std::span<const std::string> items);

  HttpBackendOptions options_;
  std::unique_ptr<httplib::Client> client_;
  Vocabulary vocab_;
  std::uint64_t vocab_version_ = 0;
  std::uint64_t version_ = 0;
  bool fine_tune_capable_ = true;
};

}  // namespace ruleprompt
