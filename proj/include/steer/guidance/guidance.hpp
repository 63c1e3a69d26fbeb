#pragma once

/**
 * The steering signal: log-probability-difference scoring under a
 * tuned/untuned model pair.
 *
 * Scores are accumulated left to right as per-token log-ratio increments,
 * never as a difference of two whole-sequence sums. That makes the
 * telescoping identity bitwise: score(prefix + chunk) is exactly
 * score(prefix) plus the chunk's incremental terms, in the same summation
 * order a full rescore would use.
 *
 * beta and the prompt normalizer are deliberately absent from scores;
 * both shift every sibling candidate equally and cannot change a Top-W
 * selection.
 */

#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "steer/core/sampling.hpp"
#include "steer/core/vocab.hpp"

namespace steer::guidance {

/// A model that exposes per-token log-probabilities over a shared Vocab.
class TokenScorer {
 public:
  virtual ~TokenScorer() = default;
  virtual const Vocab& vocab() const = 0;
  /// log softmax of the next-token distribution at (prompt, prefix).
  virtual std::vector<double> next_token_logprobs(
      const TokenSeq& prompt, const TokenSeq& prefix) const = 0;
};

using TokenScorerPtr = std::shared_ptr<const TokenScorer>;

/// Tuned model pi* plus its untuned reference pi_ref over one vocabulary.
class GuidancePair {
 public:
  GuidancePair(TokenScorerPtr tuned, TokenScorerPtr untuned);

  const TokenScorer& tuned() const { return *tuned_; }
  const TokenScorer& untuned() const { return *untuned_; }
  const Vocab& vocab() const { return tuned_->vocab(); }

 private:
  TokenScorerPtr tuned_;
  TokenScorerPtr untuned_;
};

/// log pi*(prefix|prompt) - log pi_ref(prefix|prompt), natural log,
/// summed left to right over per-token increments. Throws ZeroSupport if
/// any position has probability exactly zero under either model.
double guidance_score(const GuidancePair& pair, const TokenSeq& prompt,
                      const TokenSeq& prefix);

/// Text-level scoring: prompt and response are tokenized jointly under the
/// pair's vocabulary and the score conditions on the prompt's own token
/// count, so boundary merges never double-count.
double score_text(const GuidancePair& pair, const std::string& prompt_text,
                  const std::string& response_text);

/// Re-scores base-vocabulary tokens under the pair: decode under
/// `base_vocab`, then score the re-encoded text from scratch. No
/// incremental reuse across chunk boundaries; re-tokenization may merge
/// symbols across them.
double cross_vocab_score(const GuidancePair& pair, const Vocab& base_vocab,
                         const std::string& prompt_text,
                         const TokenSeq& response_tokens);

/// Per-entry composition out[a] = base[a] + (tuned[a] - untuned[a]) / beta.
/// All three inputs are normalized log-probabilities over one vocabulary;
/// the caller renormalizes (softmax) and applies sampling filters to the
/// result.
LogitVector eft_compose(const LogitVector& base_logprobs,
                        const LogitVector& tuned_logprobs,
                        const LogitVector& untuned_logprobs, double beta);

/// Text-keyed memo around score_text; a pure optimization for re-scoring
/// the same prefix across rounds. Concurrent use is allowed
/// (last-write-wins).
class ScoreMemo {
 public:
  explicit ScoreMemo(const GuidancePair& pair) : pair_(pair) {}

  double score(const std::string& prompt_text,
               const std::string& response_text);

 private:
  const GuidancePair& pair_;
  std::mutex mutex_;
  std::unordered_map<std::string, double> cache_;
};

}  // namespace steer::guidance
