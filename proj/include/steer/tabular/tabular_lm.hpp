#pragma once

/**
 * Finite-context categorical language models.
 *
 * A TabularLM stores one logit row per context, where the context is the
 * trailing min(order, length) tokens of prompt-plus-prefix. A horizon cap
 * forces EOS once a response reaches length cap-1, so every rollout
 * terminates and the induced sequence space is finite.
 *
 * Conditional distributions are softmax(row); scoring walks the chain rule
 * left to right in natural log.
 */

#include <map>
#include <memory>
#include <optional>

#include "steer/core/sampling.hpp"
#include "steer/core/vocab.hpp"

namespace steer::tabular {

class TabularLM {
 public:
  TabularLM(Vocab vocab, int order, int horizon_cap);

  /// Installs the logit row for a trailing context (shorter contexts are
  /// valid near the sequence start). Rows are full vocabulary width.
  void set_row(const TokenSeq& context, LogitVector logits);

  /// Fallback row for contexts without an explicit entry.
  void set_default_row(LogitVector logits);

  /// Row for the trailing context of prompt+prefix. At response depth
  /// horizon_cap-1 every non-EOS entry is masked to -inf. Throws
  /// MissingContext when no row and no default apply.
  LogitVector next_token_logits(const TokenSeq& prompt,
                                const TokenSeq& prefix) const;

  /// log softmax of next_token_logits.
  std::vector<double> next_token_logprobs(const TokenSeq& prompt,
                                          const TokenSeq& prefix) const;

  /// Sum over response positions of log softmax(row)[token], left to right.
  double sequence_logprob(const TokenSeq& prompt,
                          const TokenSeq& response) const;

  const Vocab& vocab() const { return vocab_; }
  int order() const { return order_; }
  int horizon_cap() const { return horizon_cap_; }
  const std::map<TokenSeq, LogitVector>& rows() const { return table_; }
  const std::optional<LogitVector>& default_row() const {
    return default_row_;
  }

 private:
  Vocab vocab_;
  int order_;
  int horizon_cap_;
  std::map<TokenSeq, LogitVector> table_;
  std::optional<LogitVector> default_row_;
};

using TabularLMPtr = std::shared_ptr<const TabularLM>;

}  // namespace steer::tabular
