#pragma once

/**
 * Experiment configuration and the persisted run record.
 *
 * A TaskSpec mirrors the JSON config document one to one; every struct
 * here round-trips losslessly through to_json/from_json. Run records
 * persist as one compact JSON object per line.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "steer/core/sampling.hpp"
#include "steer/core/vocab.hpp"
#include "steer/remote/protocol.hpp"

namespace steer::harness {

/// Where a model comes from: a tabular fixture file or a remote endpoint.
struct ModelDesc {
  std::string kind;     // "tabular" | "remote"
  std::string fixture;  // tabular: fixture path
  remote::EndpointConfig endpoint;  // remote
};

/// Config-level terminal rewards for tabular tasks.
///  - count_symbol:    value per occurrence of `symbol` in the response
///  - contains_symbol: value if the response contains `symbol` at all
///  - constant:        value for every response
struct RewardDesc {
  std::string kind = "count_symbol";
  std::string symbol = "a";
  double value = 1.0;
};

/// Guidance side: an explicit tuned/untuned pair, or "soft_vi", which
/// tilts the reference model optimally against the gold reward per prompt.
struct GuidanceDesc {
  std::string kind = "pair";  // "pair" | "soft_vi"
  ModelDesc tuned;
  ModelDesc untuned;
  ModelDesc reference;  // soft_vi
  RewardDesc reward;    // soft_vi
  double beta = 1.0;    // soft_vi
};

struct MethodDesc {
  std::string kind = "base";  // "base" | "bon" | "eft" | "cbs" | "token_beam"
  int beam_width = 1;         // W
  int successors = 1;         // K
  /// L; 0 encodes "infinite", -1 picks the backend default (100 for
  /// remote bases, where stateless APIs make short chunks costly; 5 for
  /// in-process ones).
  int chunk_len = -1;
  bool exhaustive = false;
  int n = 1;          // bon
  double beta = 1.0;  // eft
  int max_tokens = 16;

  std::string label() const;
};

inline constexpr int kRemoteDefaultChunkLen = 100;
inline constexpr int kLocalDefaultChunkLen = 5;

struct TaskSpec {
  std::string name;
  std::vector<TokenSeq> inline_prompts;  // token prompts (tabular tasks)
  std::string prompt_file;               // newline-separated text prompts
  int trials = 1;                        // seeded repeats per prompt
  std::optional<RewardDesc> gold_reward;
  ModelDesc base;
  GuidanceDesc guidance;
  MethodDesc method;
  SamplingParams sampling;
  std::uint64_t seed = 0;
};

struct RunRecord {
  int index = 0;
  std::string prompt_text;
  TokenSeq prompt_tokens;
  std::string response_text;
  TokenSeq response_tokens;
  double guidance_score = 0.0;
  std::optional<double> gold_reward;
  std::int64_t tokens_sampled = 0;
  int rounds = 0;
  std::optional<double> wall_ms;  // present only when timing is enabled
  std::string method;
  nlohmann::json method_params;
  std::uint64_t seed = 0;
  bool truncated = false;
  std::string error;  // empty = success
};

void to_json(nlohmann::json& j, const ModelDesc& v);
void from_json(const nlohmann::json& j, ModelDesc& v);
void to_json(nlohmann::json& j, const RewardDesc& v);
void from_json(const nlohmann::json& j, RewardDesc& v);
void to_json(nlohmann::json& j, const GuidanceDesc& v);
void from_json(const nlohmann::json& j, GuidanceDesc& v);
void to_json(nlohmann::json& j, const MethodDesc& v);
void from_json(const nlohmann::json& j, MethodDesc& v);
void to_json(nlohmann::json& j, const TaskSpec& v);
void from_json(const nlohmann::json& j, TaskSpec& v);
void to_json(nlohmann::json& j, const RunRecord& v);
void from_json(const nlohmann::json& j, RunRecord& v);

TaskSpec load_task(const std::string& path);

/// One compact JSON object, no trailing newline.
std::string record_line(const RunRecord& record);
std::vector<RunRecord> load_records(const std::string& path);

}  // namespace steer::harness

namespace steer::remote {
void to_json(nlohmann::json& j, const EndpointConfig& v);
void from_json(const nlohmann::json& j, EndpointConfig& v);
}  // namespace steer::remote

namespace steer {
void to_json(nlohmann::json& j, const SamplingParams& v);
void from_json(const nlohmann::json& j, SamplingParams& v);
}  // namespace steer
