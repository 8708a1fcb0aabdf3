#include "ruleprompt/http_backend.hpp"

#include <thread>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "ruleprompt/error.hpp"

namespace ruleprompt {
namespace {

std::uint64_t response_version(const httplib::Result& res, const nlohmann::json& body) {
  if (body.is_object() && body.contains("model_version")) return body["model_version"].get<std::uint64_t>();
  if (res->has_header("X-Model-Version")) {
    try {
      return std::stoull(res->get_header_value("X-Model-Version"));
    } catch (const std::exception&) {
      throw TransportError("malformed X-Model-Version header");
    }
  }
  throw TransportError("response carries no model version");
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
  client_ = std::make_unique<httplib::Client>(options_.url);
  client_->set_read_timeout(options_.timeout);
  client_->set_write_timeout(options_.timeout);
  client_->set_connection_timeout(std::chrono::seconds(10));

  const auto vocab = get("/vocab");
  vocab_ = Vocabulary(vocab.at("words").get<std::vector<std::string>>());
  vocab_version_ = vocab.value("vocab_version", std::uint64_t{0});
  if (vocab.contains("fine_tune")) fine_tune_capable_ = vocab["fine_tune"].get<bool>();
}

HttpBackend::~HttpBackend() = default;

nlohmann::json HttpBackend::get(const std::string& path) {
  auto res = client_->Get(path);
  if (!res) throw TransportError("GET " + options_.url + path + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw TransportError("GET " + path + " returned HTTP " + std::to_string(res->status));
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError("GET " + path + ": malformed JSON: " + e.what());
  }
  version_ = response_version(res, body);
  return body;
}

nlohmann::json HttpBackend::post(const std::string& path, const nlohmann::json& body, bool read_only) {
  const auto payload = body.dump();
  for (int attempt = 0;; ++attempt) {
    auto res = client_->Post(path, payload, "application/json");
    if (!res) throw TransportError("POST " + options_.url + path + ": " + httplib::to_string(res.error()));
    if (res->status == 503 && read_only && attempt + 1 < options_.busy_retries) {
      spdlog::warn("{}: backend busy fine-tuning, retrying", path);
      std::this_thread::sleep_for(options_.busy_backoff);
      continue;
    }
    if (res->status != 200) {
      throw TransportError("POST " + path + " returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    nlohmann::json out;
    try {
      out = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw TransportError("POST " + path + ": malformed JSON: " + e.what());
    }
    if (read_only) {
      const auto v = response_version(res, out);
      if (v != version_) {
        throw TransportError("model version changed mid-iteration (expected " + std::to_string(version_) +
                             ", got " + std::to_string(v) + ")");
      }
      if (out.contains("vocab_version") && out["vocab_version"].get<std::uint64_t>() != vocab_version_) {
        throw TransportError("vocabulary version changed");
      }
    }
    return out;
  }
}

std::vector<std::vector<double>> HttpBackend::batched_rows(const std::string& path, const std::string& key,
                                                           const std::string& result_key,
                                                           std::span<const std::string> items) {
  std::vector<std::vector<double>> rows;
  rows.reserve(items.size());
  const auto batch = std::max<std::size_t>(1, options_.batch_size);
  for (std::size_t start = 0; start < items.size(); start += batch) {
    const auto chunk = items.subspan(start, std::min(batch, items.size() - start));
    nlohmann::json body;
    body[key] = std::vector<std::string>(chunk.begin(), chunk.end());
    auto out = post(path, body, true);
    auto part = out.at(result_key).get<std::vector<std::vector<double>>>();
    if (part.size() != chunk.size()) throw TransportError(path + ": row count mismatch");
    for (auto& r : part) rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<LogitVector> HttpBackend::do_mask_logits(std::span<const std::string> prompts) {
  return batched_rows("/mask_logits", "prompts", "logits", prompts);
}

std::vector<Embedding> HttpBackend::do_embed_words(std::span<const std::string> words) {
  return batched_rows("/embed_words", "words", "embeddings", words);
}

std::vector<Embedding> HttpBackend::do_embed_sentences(std::span<const std::string> texts) {
  return batched_rows("/embed_sentences", "texts", "embeddings", texts);
}

void HttpBackend::do_fine_tune(std::span<const std::string> prompts,
                               std::span<const std::vector<double>> distributions, int epochs) {
  nlohmann::json body;
  body["prompts"] = std::vector<std::string>(prompts.begin(), prompts.end());
  body["distributions"] = std::vector<std::vector<double>>(distributions.begin(), distributions.end());
  body["epochs"] = epochs;
  const auto out = post("/fine_tune", body, false);
  const auto next = out.at("new_version").get<std::uint64_t>();
  if (next <= version_) throw TransportError("fine_tune did not advance the model version");
  version_ = next;
}

bool HttpBackend::restore_version(std::uint64_t v) {
  get("/health");
  return version_ == v;
}

}  // namespace ruleprompt
