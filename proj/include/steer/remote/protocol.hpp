#pragma once

/**
 * Wire shapes for the completions protocol.
 *
 * Requests POST to {base_url}/v1/completions with a JSON body holding
 * exactly the fields below (optional fields are omitted when unset, and
 * echo only appears when true). Responses are read from choices[i].text,
 * choices[i].logprobs.token_logprobs, choices[i].logprobs.text_offset and
 * choices[i].finish_reason. The credential travels as
 * "Authorization: Bearer <value of api_key_env>".
 */

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "steer/core/errors.hpp"

namespace steer::remote {

struct EndpointConfig {
  std::string base_url;     // scheme://host:port
  std::string model_name;
  std::string api_key_env;  // name of the env var holding the credential
  double timeout_s = 30.0;
  int max_in_flight = 4;
  bool supports_scoring = false;
};

struct CompletionRequest {
  std::string prompt;
  int max_tokens = 0;  // 0 only for pure scoring (echo + logprobs)
  double temperature = 1.0;
  double top_p = 1.0;
  int n = 1;
  std::optional<std::uint64_t> seed;
  bool echo = false;
  std::optional<int> logprobs;
  std::vector<std::string> stop;  // empty = field absent
};

struct ChoiceLogprobs {
  /// Entries may be null on the wire (no-context first token).
  std::vector<std::optional<double>> token_logprobs;
  /// Character offset of each token within the echoed text.
  std::vector<int> text_offset;
};

struct CompletionChoice {
  std::string text;
  std::optional<ChoiceLogprobs> logprobs;
  std::string finish_reason;  // "stop" | "length"
};

/// Canonical request body; the same string is sent on every retry and
/// feeds the cache key, so bodies are byte-identical across both.
std::string request_body(const EndpointConfig& endpoint,
                         const CompletionRequest& request);

std::vector<CompletionChoice> parse_choices(const nlohmann::json& response);

}  // namespace steer::remote
