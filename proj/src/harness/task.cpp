#include "steer/harness/task.hpp"

#include <fstream>
#include <sstream>

namespace steer {

using nlohmann::json;

void to_json(json& j, const SamplingParams& v) {
  j = json{{"temperature", v.temperature},
           {"top_k", v.top_k == kTopKAll ? json("all") : json(v.top_k)},
           {"top_p", v.top_p},
           {"seed", v.seed}};
}

void from_json(const json& j, SamplingParams& v) {
  v = SamplingParams{};
  if (j.contains("temperature")) j.at("temperature").get_to(v.temperature);
  if (j.contains("top_k")) {
    if (j.at("top_k").is_string()) {
      if (j.at("top_k") != "all") throw Error("top_k must be a count or \"all\"");
      v.top_k = kTopKAll;
    } else {
      j.at("top_k").get_to(v.top_k);
    }
  }
  if (j.contains("top_p")) j.at("top_p").get_to(v.top_p);
  if (j.contains("seed")) j.at("seed").get_to(v.seed);
}

}  // namespace steer

namespace steer::remote {

using nlohmann::json;

void to_json(json& j, const EndpointConfig& v) {
  j = json{{"base_url", v.base_url},
           {"model_name", v.model_name},
           {"api_key_env", v.api_key_env},
           {"timeout_s", v.timeout_s},
           {"max_in_flight", v.max_in_flight},
           {"supports_scoring", v.supports_scoring}};
}

void from_json(const json& j, EndpointConfig& v) {
  v = EndpointConfig{};
  j.at("base_url").get_to(v.base_url);
  j.at("model_name").get_to(v.model_name);
  if (j.contains("api_key_env")) j.at("api_key_env").get_to(v.api_key_env);
  if (j.contains("timeout_s")) j.at("timeout_s").get_to(v.timeout_s);
  if (j.contains("max_in_flight")) j.at("max_in_flight").get_to(v.max_in_flight);
  if (j.contains("supports_scoring")) {
    j.at("supports_scoring").get_to(v.supports_scoring);
  }
}

}  // namespace steer::remote

namespace steer::harness {

using nlohmann::json;

std::string MethodDesc::label() const {
  std::ostringstream oss;
  if (kind == "cbs") {
    oss << "cbs(" << beam_width << ',' << successors << ',';
    if (chunk_len == 0) {
      oss << "inf";
    } else if (chunk_len < 0) {
      oss << "auto";
    } else {
      oss << chunk_len;
    }
    oss << ')';
  } else if (kind == "bon") {
    oss << "bon(" << n << ')';
  } else if (kind == "eft") {
    oss << "eft(beta=" << beta << ')';
  } else if (kind == "token_beam") {
    oss << "token_beam(" << beam_width << ')';
  } else {
    oss << kind;
  }
  return oss.str();
}

void to_json(json& j, const ModelDesc& v) {
  j = json{{"kind", v.kind}};
  if (v.kind == "tabular") {
    j["fixture"] = v.fixture;
  } else {
    j["endpoint"] = v.endpoint;
  }
}

void from_json(const json& j, ModelDesc& v) {
  v = ModelDesc{};
  j.at("kind").get_to(v.kind);
  if (v.kind == "tabular") {
    j.at("fixture").get_to(v.fixture);
  } else if (v.kind == "remote") {
    j.at("endpoint").get_to(v.endpoint);
  } else {
    throw Error("unknown model kind \"" + v.kind + "\"");
  }
}

void to_json(json& j, const RewardDesc& v) {
  j = json{{"kind", v.kind}, {"symbol", v.symbol}, {"value", v.value}};
}

void from_json(const json& j, RewardDesc& v) {
  v = RewardDesc{};
  j.at("kind").get_to(v.kind);
  if (j.contains("symbol")) j.at("symbol").get_to(v.symbol);
  if (j.contains("value")) j.at("value").get_to(v.value);
}

void to_json(json& j, const GuidanceDesc& v) {
  j = json{{"kind", v.kind}};
  if (v.kind == "pair") {
    j["tuned"] = v.tuned;
    j["untuned"] = v.untuned;
  } else {
    j["reference"] = v.reference;
    j["reward"] = v.reward;
    j["beta"] = v.beta;
  }
}

void from_json(const json& j, GuidanceDesc& v) {
  v = GuidanceDesc{};
  j.at("kind").get_to(v.kind);
  if (v.kind == "pair") {
    j.at("tuned").get_to(v.tuned);
    j.at("untuned").get_to(v.untuned);
  } else if (v.kind == "soft_vi") {
    j.at("reference").get_to(v.reference);
    j.at("reward").get_to(v.reward);
    if (j.contains("beta")) j.at("beta").get_to(v.beta);
  } else {
    throw Error("unknown guidance kind \"" + v.kind + "\"");
  }
}

void to_json(json& j, const MethodDesc& v) {
  j = json{{"kind", v.kind}, {"max_tokens", v.max_tokens}};
  if (v.kind == "cbs") {
    j["beam_width"] = v.beam_width;
    j["successors"] = v.successors;
    if (v.chunk_len == 0) {
      j["chunk_len"] = "infinite";
    } else if (v.chunk_len > 0) {
      j["chunk_len"] = v.chunk_len;
    }  // absent = backend default
    if (v.exhaustive) j["exhaustive"] = true;
  } else if (v.kind == "bon") {
    j["n"] = v.n;
  } else if (v.kind == "eft") {
    j["beta"] = v.beta;
  } else if (v.kind == "token_beam") {
    j["beam_width"] = v.beam_width;
  }
}

void from_json(const json& j, MethodDesc& v) {
  v = MethodDesc{};
  j.at("kind").get_to(v.kind);
  if (j.contains("max_tokens")) j.at("max_tokens").get_to(v.max_tokens);
  if (j.contains("beam_width")) j.at("beam_width").get_to(v.beam_width);
  if (j.contains("successors")) j.at("successors").get_to(v.successors);
  if (j.contains("chunk_len")) {
    if (j.at("chunk_len").is_string()) {
      if (j.at("chunk_len") != "infinite") {
        throw Error("chunk_len must be a count or \"infinite\"");
      }
      v.chunk_len = 0;
    } else {
      j.at("chunk_len").get_to(v.chunk_len);
    }
  }
  if (j.contains("exhaustive")) j.at("exhaustive").get_to(v.exhaustive);
  if (j.contains("n")) j.at("n").get_to(v.n);
  if (j.contains("beta")) j.at("beta").get_to(v.beta);
}

void to_json(json& j, const TaskSpec& v) {
  j = json{{"name", v.name},
           {"trials", v.trials},
           {"base", v.base},
           {"guidance", v.guidance},
           {"method", v.method},
           {"sampling", v.sampling},
           {"seed", v.seed}};
  if (!v.inline_prompts.empty()) j["inline_prompts"] = v.inline_prompts;
  if (!v.prompt_file.empty()) j["prompt_file"] = v.prompt_file;
  if (v.gold_reward) j["gold_reward"] = *v.gold_reward;
}

void from_json(const json& j, TaskSpec& v) {
  v = TaskSpec{};
  j.at("name").get_to(v.name);
  if (j.contains("trials")) j.at("trials").get_to(v.trials);
  if (j.contains("inline_prompts")) {
    j.at("inline_prompts").get_to(v.inline_prompts);
  }
  if (j.contains("prompt_file")) j.at("prompt_file").get_to(v.prompt_file);
  if (j.contains("gold_reward")) {
    v.gold_reward = j.at("gold_reward").get<RewardDesc>();
  }
  j.at("base").get_to(v.base);
  j.at("guidance").get_to(v.guidance);
  if (j.contains("method")) j.at("method").get_to(v.method);
  if (j.contains("sampling")) j.at("sampling").get_to(v.sampling);
  if (j.contains("seed")) j.at("seed").get_to(v.seed);
}

void to_json(json& j, const RunRecord& v) {
  j = json{{"index", v.index},
           {"prompt_text", v.prompt_text},
           {"prompt_tokens", v.prompt_tokens},
           {"response_text", v.response_text},
           {"response_tokens", v.response_tokens},
           {"guidance_score", v.guidance_score},
           {"tokens_sampled", v.tokens_sampled},
           {"rounds", v.rounds},
           {"method", v.method},
           {"method_params", v.method_params},
           {"seed", v.seed},
           {"truncated", v.truncated}};
  if (v.gold_reward) j["gold_reward"] = *v.gold_reward;
  if (v.wall_ms) j["wall_ms"] = *v.wall_ms;
  if (!v.error.empty()) j["error"] = v.error;
}

void from_json(const json& j, RunRecord& v) {
  v = RunRecord{};
  j.at("index").get_to(v.index);
  j.at("prompt_text").get_to(v.prompt_text);
  j.at("prompt_tokens").get_to(v.prompt_tokens);
  j.at("response_text").get_to(v.response_text);
  j.at("response_tokens").get_to(v.response_tokens);
  j.at("guidance_score").get_to(v.guidance_score);
  if (j.contains("gold_reward")) {
    v.gold_reward = j.at("gold_reward").get<double>();
  }
  j.at("tokens_sampled").get_to(v.tokens_sampled);
  j.at("rounds").get_to(v.rounds);
  if (j.contains("wall_ms")) v.wall_ms = j.at("wall_ms").get<double>();
  j.at("method").get_to(v.method);
  v.method_params = j.at("method_params");
  j.at("seed").get_to(v.seed);
  j.at("truncated").get_to(v.truncated);
  if (j.contains("error")) j.at("error").get_to(v.error);
}

TaskSpec load_task(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open task file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("bad task file " + path + ": " + e.what());
  }
  return j.get<TaskSpec>();
}

std::string record_line(const RunRecord& record) {
  return json(record).dump();
}

std::vector<RunRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open records file: " + path);
  std::vector<RunRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(json::parse(line).get<RunRecord>());
  }
  return out;
}

}  // namespace steer::harness
