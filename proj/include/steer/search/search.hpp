#pragma once

/**
 * Decoding strategies over abstract base-model and guidance handles:
 *
 *  - cbs: chunk-level beam search. W hypotheses, K sampled continuation
 *    chunks of up to L tokens per incomplete hypothesis per round,
 *    Top-W pruning by guidance score.
 *  - best_of_n: N independent complete samples, argmax by score.
 *  - token_beam_search: deterministic beam over every next token in the
 *    filtered base support.
 *  - eft_decode: per-token log-probability composition of base with the
 *    tuned/untuned difference.
 *  - sample_base: plain autoregressive sampling.
 *
 * Randomness discipline: every chunk draw owns a stream seeded by
 * hash(run_seed, round, parent_slot, sample_index), so equal budgets give
 * equal streams across methods. Under shared seeds,
 * cbs(W=1, K=N, L=inf) reproduces best_of_n(N) byte for byte, and
 * exhaustive cbs at L=1 reproduces token_beam_search.
 */

#include <cstdint>
#include <memory>
#include <vector>

#include "steer/guidance/guidance.hpp"
#include "steer/search/model_iface.hpp"

namespace steer::search {

/// chunk_len value meaning "sample to completion in one chunk".
inline constexpr int kInfiniteChunk = std::numeric_limits<int>::max();

struct SearchConfig {
  int beam_width = 1;   // W
  int successors = 1;   // K
  int chunk_len = 1;    // L, or kInfiniteChunk
  int max_tokens = 64;  // hard per-hypothesis cap; marks "truncated"
  SamplingParams sampling;
  /// Replace the K sampled successors with every token in the filtered
  /// base support. Requires chunk_len == 1 and a scoreable base.
  bool exhaustive = false;
  /// Total sampled-token cap; 0 means W * K * max_tokens * 4.
  std::int64_t hard_token_cap = 0;
  /// Cap on candidates per round in exhaustive/token-beam expansion.
  int branch_budget = 65536;
  /// Concurrent chunk requests per round (results merge in slot order
  /// regardless of completion order).
  int parallelism = 1;
};

struct Hypothesis {
  GenState state;
  double score = 0.0;           // guidance score of state; 0 for the root
  std::uint64_t slot_seed = 0;  // stream seed of the chunk that made it
};

/// Per-round search record: every candidate, its score, and whether it
/// survived Top-W. Survivors are exactly the W highest-scoring candidates
/// with ties broken by (parent slot, then sample index).
struct TraceCandidate {
  int parent_slot = 0;
  int sample_index = 0;  // token id in exhaustive mode
  TokenSeq tokens;
  std::string text;
  double score = 0.0;
  bool complete = false;
  bool truncated = false;
  std::uint64_t slot_seed = 0;
  bool survived = false;
  int new_slot = -1;
};

struct TraceRound {
  std::vector<TraceCandidate> candidates;
};

struct SearchTrace {
  std::vector<TraceRound> rounds;
};

struct SearchResult {
  GenState best;
  double score = 0.0;
  SearchTrace trace;
  std::int64_t tokens_sampled = 0;
  int rounds = 0;
};

struct SampleResult {
  GenState state;
  std::int64_t tokens_sampled = 0;
};

/// Chunk-level beam search. The run seed is config.sampling.seed.
/// Completed hypotheses contribute exactly one successor (themselves), so
/// duplicates never crowd out live states. Throws BudgetExceeded past the
/// hard token cap and propagates model/scoring errors.
SearchResult cbs(const BaseModel& base, const StateScorer& scorer,
                 const Prompt& prompt, const SearchConfig& config);

/// Convenience overload: picks the scorer from the pair and base.
SearchResult cbs(const BaseModel& base, const guidance::GuidancePair& pair,
                 const Prompt& prompt, const SearchConfig& config);

/// N independent complete responses; highest score wins, ties to the
/// lower sample index. Sample i draws from stream
/// hash(sampling.seed, 0, 0, i).
SearchResult best_of_n(const BaseModel& base, const StateScorer& scorer,
                       const Prompt& prompt, int n,
                       const SamplingParams& sampling, int max_tokens);

SearchResult best_of_n(const BaseModel& base,
                       const guidance::GuidancePair& pair,
                       const Prompt& prompt, int n,
                       const SamplingParams& sampling, int max_tokens);

/// Deterministic beam search expanding every next token in the filtered
/// base support, width W. Throws SupportTooLarge past `branch_budget`
/// candidates in one round.
SearchResult token_beam_search(const BaseModel& base,
                               const StateScorer& scorer, const Prompt& prompt,
                               int beam_width, int max_tokens,
                               const SamplingParams& params,
                               int branch_budget = 65536);

/// Autoregressive sampling from the per-step composition
/// base + (tuned - untuned) / beta in log-probability space, filters
/// applied to the composed vector. Shared vocabulary only.
SampleResult eft_decode(const BaseModel& base,
                        const guidance::GuidancePair& pair,
                        const Prompt& prompt, double beta,
                        const SamplingParams& sampling, int max_tokens);

/// Plain autoregressive sampling from the base model.
SampleResult sample_base(const BaseModel& base, const Prompt& prompt,
                         const SamplingParams& sampling, int max_tokens);

}  // namespace steer::search
