#pragma once

/**
 * Abstract handles the search strategies operate over.
 *
 * A BaseModel is the frozen model being steered. The minimum capability is
 * chunk sampling (black-box mode); in-process models additionally expose
 * per-step log-probabilities, which unlocks exhaustive expansion, token
 * beam search, and per-token composition.
 *
 * A StateScorer turns a search state into its guidance score. Concrete
 * scorers bridge vocabularies (same-vocab token scoring, cross-vocabulary
 * re-encoding, text-level remote scoring) behind one call.
 */

#include <cstdint>
#include <string>

#include "steer/core/sampling.hpp"
#include "steer/core/vocab.hpp"

namespace steer::search {

struct Prompt {
  TokenSeq tokens;   // under the base vocabulary when one exists
  std::string text;
};

/// A partial or complete response in whichever representation the base
/// model natively produces. Token ids are empty for text-only backends.
struct GenState {
  TokenSeq tokens;
  std::string text;
  bool saw_eos = false;
  bool truncated = false;  // hit the max_tokens cap without EOS
  int token_count = 0;

  bool complete() const { return saw_eos || truncated; }
};

/// One sampled continuation chunk.
struct ChunkResult {
  TokenSeq tokens;   // appended tokens (empty for text-only backends)
  std::string text;  // appended text
  bool hit_eos = false;
  int token_count = 0;
};

class BaseModel {
 public:
  virtual ~BaseModel() = default;

  /// Non-null when the backend works in client-visible tokens.
  virtual const Vocab* vocab() const { return nullptr; }

  /// True when per-step log-probabilities are available.
  virtual bool scoreable() const { return false; }

  /// Draw one continuation chunk of at most `max_new` tokens. The chunk
  /// stops early at EOS. `seed` fully determines the draw for seedable
  /// backends.
  virtual ChunkResult sample_chunk(const Prompt& prompt, const GenState& state,
                                   int max_new, const SamplingParams& params,
                                   std::uint64_t seed) const = 0;

  /// Scoreable backends only: log softmax over the next token.
  virtual LogitVector next_token_logprobs(const Prompt& prompt,
                                          const GenState& state) const {
    (void)prompt;
    (void)state;
    throw ScoringUnsupported("base model is sampling-only");
  }
};

class StateScorer {
 public:
  virtual ~StateScorer() = default;
  /// Guidance score of the state's response given the prompt.
  virtual double score(const Prompt& prompt, const GenState& state) const = 0;
};

}  // namespace steer::search
