#include "steer/remote/client.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <httplib.h>

namespace steer::remote {

using nlohmann::json;

struct HttpCompletionClient::InFlightGate {
  std::mutex mutex;
  std::condition_variable cv;
  int in_flight = 0;
  int limit;

  explicit InFlightGate(int limit) : limit(limit) {}

  void acquire() {
    std::unique_lock<std::mutex> lock(mutex);
    cv.wait(lock, [&] { return in_flight < limit; });
    ++in_flight;
  }
  void release() {
    {
      std::lock_guard<std::mutex> lock(mutex);
      --in_flight;
    }
    cv.notify_one();
  }
};

HttpCompletionClient::HttpCompletionClient(EndpointConfig config,
                                           RetryPolicy retry)
    : config_(std::move(config)),
      retry_(retry),
      gate_(std::make_unique<InFlightGate>(std::max(1, config_.max_in_flight))) {
  if (config_.timeout_s <= 0.0) throw Error("endpoint timeout must be > 0");
}

HttpCompletionClient::~HttpCompletionClient() = default;

std::vector<CompletionChoice> HttpCompletionClient::complete(
    const CompletionRequest& request) {
  const std::string body = request_body(config_, request);

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str());
        key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  gate_->acquire();
  struct Release {
    InFlightGate* g;
    ~Release() { g->release(); }
  } release{gate_.get()};

  const auto timeout = std::chrono::milliseconds(
      static_cast<long long>(config_.timeout_s * 1000.0));

  std::string last_error;
  int last_status = 0;
  bool timed_out = false;

  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    last_attempts_ = attempt;
    if (attempt > 1) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          retry_.backoff_base_ms << (attempt - 2)));
    }

    httplib::Client cli(config_.base_url);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);

    // The identical serialized body goes out on every attempt.
    httplib::Result res =
        cli.Post("/v1/completions", headers, body, "application/json");

    if (!res) {
      timed_out = (res.error() == httplib::Error::ConnectionTimeout ||
                   res.error() == httplib::Error::Read ||
                   res.error() == httplib::Error::Write);
      last_error = httplib::to_string(res.error());
      continue;  // transport errors are retryable
    }
    last_status = res->status;
    if (res->status == 429 || res->status >= 500) {
      last_error = res->body;
      continue;
    }
    if (res->status != 200) {
      throw HttpStatus(res->status, res->body);
    }
    json parsed;
    try {
      parsed = json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw Error(std::string("unparseable completions response: ") +
                  e.what());
    }
    return parse_choices(parsed);
  }

  if (last_status == 429) {
    throw RateLimited("rate limited after " +
                      std::to_string(retry_.max_attempts) + " attempts");
  }
  if (last_status >= 500) throw HttpStatus(last_status, last_error);
  if (timed_out) {
    throw Timeout("request timed out after " +
                  std::to_string(retry_.max_attempts) + " attempts");
  }
  throw Error("request failed: " + last_error);
}

// ---------------------------------------------------------------------------
// Disk cache
// ---------------------------------------------------------------------------

namespace {

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string cache_key(const std::string& model, const std::string& body) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(model + '\n' + body)));
  return std::string(buf) + ".json";
}

bool cacheable(const CompletionRequest& request) {
  // Pure scoring requests are deterministic; sampling requests are only
  // replayable when the seed rides along.
  return request.max_tokens == 0 || request.seed.has_value();
}

}  // namespace

CachedCompletionClient::CachedCompletionClient(BackendPtr inner,
                                               std::string cache_dir)
    : inner_(std::move(inner)), cache_dir_(std::move(cache_dir)) {
  std::error_code ec;
  std::filesystem::create_directories(cache_dir_, ec);
  if (ec) {
    std::fprintf(stderr, "steer: cache dir unavailable (%s); passing through\n",
                 ec.message().c_str());
  }
}

std::vector<CompletionChoice> CachedCompletionClient::complete(
    const CompletionRequest& request) {
  if (!cacheable(request)) return inner_->complete(request);

  const std::string body = request_body(inner_->config(), request);
  const std::filesystem::path path =
      std::filesystem::path(cache_dir_) /
      cache_key(inner_->config().model_name, body);

  // Hit path: parse, verify the stored body, replay the stored response.
  if (std::ifstream in(path); in) {
    try {
      json entry = json::parse(in);
      if (entry.at("model") == inner_->config().model_name &&
          entry.at("body") == body) {
        return parse_choices(entry.at("response"));
      }
    } catch (const std::exception&) {
      // Corrupted entry: fall through and re-store below.
    }
  }

  // Miss (or corrupted entry): ask the backend, then store the choices in
  // the same shape the wire uses so parse_choices can replay them.
  const std::vector<CompletionChoice> choices = inner_->complete(request);

  json response;
  response["choices"] = json::array();
  for (const CompletionChoice& c : choices) {
    json jc;
    jc["text"] = c.text;
    jc["finish_reason"] = c.finish_reason;
    if (c.logprobs) {
      json jlp;
      jlp["token_logprobs"] = json::array();
      for (const auto& v : c.logprobs->token_logprobs) {
        if (v) {
          jlp["token_logprobs"].push_back(*v);
        } else {
          jlp["token_logprobs"].push_back(nullptr);
        }
      }
      jlp["text_offset"] = c.logprobs->text_offset;
      jc["logprobs"] = std::move(jlp);
    }
    response["choices"].push_back(std::move(jc));
  }
  json entry;
  entry["model"] = inner_->config().model_name;
  entry["body"] = body;
  entry["response"] = std::move(response);

  // Atomic publish: write a sibling temp file, then rename over the key.
  const std::filesystem::path tmp = path.string() + ".tmp";
  try {
    {
      std::ofstream out(tmp);
      out << entry.dump();
      if (!out) throw Error("short write");
    }
    std::filesystem::rename(tmp, path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "steer: cache store failed (%s); passing through\n",
                 e.what());
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
  }
  return choices;
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

std::vector<RemoteChunk> sample_chunk_remote(CompletionBackend& endpoint,
                                             const std::string& prefix_text,
                                             int max_new,
                                             const SamplingParams& params,
                                             int n) {
  if (max_new < 1) throw Error("chunk length must be >= 1");
  if (n < 1) throw Error("fan-out must be >= 1");
  CompletionRequest request;
  request.prompt = prefix_text;
  request.max_tokens = max_new;
  request.temperature = params.temperature;
  request.top_p = params.top_p;
  request.n = n;
  request.seed = params.seed;

  const std::vector<CompletionChoice> choices = endpoint.complete(request);
  if (static_cast<int>(choices.size()) != n) {
    throw Error("endpoint returned " + std::to_string(choices.size()) +
                " choices, expected " + std::to_string(n));
  }
  std::vector<RemoteChunk> out;
  out.reserve(choices.size());
  for (const CompletionChoice& c : choices) {
    out.push_back({c.text, c.finish_reason});
  }
  return out;
}

double score_remote(CompletionBackend& endpoint,
                    const std::string& prompt_text,
                    const std::string& full_text) {
  if (!endpoint.config().supports_scoring) {
    throw ScoringUnsupported("endpoint \"" + endpoint.config().model_name +
                             "\" is sampling-only");
  }
  if (full_text.compare(0, prompt_text.size(), prompt_text) != 0) {
    throw Error("prompt_text is not a prefix of full_text");
  }
  if (full_text.size() == prompt_text.size()) return 0.0;

  CompletionRequest request;
  request.prompt = full_text;
  request.max_tokens = 0;
  request.echo = true;
  request.logprobs = 1;

  const std::vector<CompletionChoice> choices = endpoint.complete(request);
  if (choices.empty() || !choices[0].logprobs) {
    throw ScoringUnsupported("endpoint returned no logprobs");
  }
  const ChoiceLogprobs& lp = *choices[0].logprobs;
  if (lp.token_logprobs.size() != lp.text_offset.size()) {
    throw Error("token_logprobs and text_offset lengths differ");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < lp.token_logprobs.size(); ++i) {
    if (lp.text_offset[i] < static_cast<int>(prompt_text.size())) continue;
    if (!lp.token_logprobs[i]) continue;  // null first-token entry
    total += *lp.token_logprobs[i];
  }
  return total;
}

}  // namespace steer::remote
