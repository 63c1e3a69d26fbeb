#pragma once

/**
 * Completions client: retrying HTTP transport, in-flight limiting, a
 * write-then-rename disk cache, and the two operations searches need
 * (chunk sampling and continuation scoring).
 *
 * Retries cover idempotent conditions only (timeouts, 429, 5xx) with
 * exponential backoff; the serialized body is reused verbatim across
 * attempts. Endpoints without scoring support can only ever serve as the
 * sampled base model; scoring calls on them throw ScoringUnsupported.
 */

#include <memory>
#include <string>
#include <vector>

#include "steer/core/sampling.hpp"
#include "steer/remote/protocol.hpp"

namespace steer::remote {

/// Transport seam: the HTTP client and the cache wrapper both implement
/// this, so callers compose them freely.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual const EndpointConfig& config() const = 0;
  virtual std::vector<CompletionChoice> complete(
      const CompletionRequest& request) = 0;
};

using BackendPtr = std::shared_ptr<CompletionBackend>;

struct RetryPolicy {
  int max_attempts = 4;
  int backoff_base_ms = 100;  // doubles per attempt
};

class HttpCompletionClient final : public CompletionBackend {
 public:
  explicit HttpCompletionClient(EndpointConfig config, RetryPolicy retry = {});
  ~HttpCompletionClient() override;

  const EndpointConfig& config() const override { return config_; }
  std::vector<CompletionChoice> complete(
      const CompletionRequest& request) override;

  /// Attempts issued by the most recent complete() call.
  int last_attempts() const { return last_attempts_; }

 private:
  EndpointConfig config_;
  RetryPolicy retry_;
  struct InFlightGate;
  std::unique_ptr<InFlightGate> gate_;
  int last_attempts_ = 0;
};

/// Disk cache in front of another backend. Keys digest the model name and
/// the canonical request body; hits verify the stored body before use, so
/// digest collisions degrade to misses. Sampling requests (max_tokens > 0)
/// are cached only when they carry a seed. Cache I/O failures log a
/// warning and fall through to the inner backend.
class CachedCompletionClient final : public CompletionBackend {
 public:
  CachedCompletionClient(BackendPtr inner, std::string cache_dir);

  const EndpointConfig& config() const override { return inner_->config(); }
  std::vector<CompletionChoice> complete(
      const CompletionRequest& request) override;

 private:
  BackendPtr inner_;
  std::string cache_dir_;
};

inline BackendPtr cached(BackendPtr inner, std::string cache_dir) {
  return std::make_shared<CachedCompletionClient>(std::move(inner),
                                                  std::move(cache_dir));
}

struct RemoteChunk {
  std::string text;
  std::string finish_reason;
};

/// One request with max_tokens = max_new and the given fan-out; returns n
/// chunks of at most max_new server tokens each. Token counting defers to
/// the server; the client never re-tokenizes remote text.
std::vector<RemoteChunk> sample_chunk_remote(CompletionBackend& endpoint,
                                             const std::string& prefix_text,
                                             int max_new,
                                             const SamplingParams& params,
                                             int n);

/// log-probability of the continuation: echo + logprobs with
/// max_tokens = 0, summing the token logprobs whose character offsets fall
/// at or after the prompt length. The boundary is character-based because
/// the server may tokenize the prompt/continuation seam differently from
/// any client-side split.
double score_remote(CompletionBackend& endpoint,
                    const std::string& prompt_text,
                    const std::string& full_text);

}  // namespace steer::remote
