#include "steer/remote/protocol.hpp"

namespace steer::remote {

using nlohmann::json;

std::string request_body(const EndpointConfig& endpoint,
                         const CompletionRequest& request) {
  json body;
  body["model"] = endpoint.model_name;
  body["prompt"] = request.prompt;
  body["max_tokens"] = request.max_tokens;
  body["temperature"] = request.temperature;
  body["top_p"] = request.top_p;
  body["n"] = request.n;
  if (request.seed) body["seed"] = *request.seed;
  if (request.echo) body["echo"] = true;
  if (request.logprobs) body["logprobs"] = *request.logprobs;
  if (!request.stop.empty()) body["stop"] = request.stop;
  return body.dump();
}

std::vector<CompletionChoice> parse_choices(const json& response) {
  std::vector<CompletionChoice> out;
  if (!response.contains("choices") || !response["choices"].is_array()) {
    throw Error("completions response has no choices array");
  }
  for (const json& c : response["choices"]) {
    CompletionChoice choice;
    choice.text = c.value("text", std::string());
    choice.finish_reason = c.value("finish_reason", std::string());
    if (c.contains("logprobs") && !c["logprobs"].is_null()) {
      ChoiceLogprobs lp;
      const json& jlp = c["logprobs"];
      for (const json& v : jlp.value("token_logprobs", json::array())) {
        if (v.is_null()) {
          lp.token_logprobs.push_back(std::nullopt);
        } else {
          lp.token_logprobs.push_back(v.get<double>());
        }
      }
      for (const json& v : jlp.value("text_offset", json::array())) {
        lp.text_offset.push_back(v.get<int>());
      }
      choice.logprobs = std::move(lp);
    }
    out.push_back(std::move(choice));
  }
  return out;
}

}  // namespace steer::remote
