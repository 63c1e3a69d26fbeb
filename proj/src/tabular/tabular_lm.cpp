#include "steer/tabular/tabular_lm.hpp"

#include <cmath>

namespace steer::tabular {

TabularLM::TabularLM(Vocab vocab, int order, int horizon_cap)
    : vocab_(std::move(vocab)), order_(order), horizon_cap_(horizon_cap) {
  if (order_ < 0) throw Error("model order must be >= 0");
  if (horizon_cap_ < 1) throw Error("horizon cap must be >= 1");
}

void TabularLM::set_row(const TokenSeq& context, LogitVector logits) {
  if (static_cast<int>(logits.size()) != vocab_.size()) {
    throw Error("logit row width does not match vocabulary size");
  }
  validate_token_seq(vocab_, context);
  table_[context] = std::move(logits);
}

void TabularLM::set_default_row(LogitVector logits) {
  if (static_cast<int>(logits.size()) != vocab_.size()) {
    throw Error("logit row width does not match vocabulary size");
  }
  default_row_ = std::move(logits);
}

LogitVector TabularLM::next_token_logits(const TokenSeq& prompt,
                                         const TokenSeq& prefix) const {
  if (is_complete(vocab_, prefix)) {
    throw Error("cannot extend a complete sequence");
  }
  const int depth = static_cast<int>(prefix.size());
  if (depth >= horizon_cap_) {
    throw Error("prefix length reached the horizon cap");
  }

  TokenSeq full = prompt;
  full.insert(full.end(), prefix.begin(), prefix.end());
  const std::size_t ctx_len =
      std::min<std::size_t>(full.size(), static_cast<std::size_t>(order_));
  TokenSeq context(full.end() - ctx_len, full.end());

  const LogitVector* row = nullptr;
  if (auto it = table_.find(context); it != table_.end()) {
    row = &it->second;
  } else if (default_row_) {
    row = &*default_row_;
  } else {
    throw MissingContext("no table row for context of length " +
                         std::to_string(ctx_len) + " and no default row");
  }

  LogitVector out = *row;
  if (depth == horizon_cap_ - 1) {
    // Forced termination: only EOS stays unmasked at the last depth.
    for (TokenId id = 0; id < vocab_.size(); ++id) {
      if (id != vocab_.eos()) {
        out[id] = -std::numeric_limits<double>::infinity();
      }
    }
    if (!std::isfinite(out[vocab_.eos()])) out[vocab_.eos()] = 0.0;
  }
  return out;
}

std::vector<double> TabularLM::next_token_logprobs(
    const TokenSeq& prompt, const TokenSeq& prefix) const {
  return log_softmax(next_token_logits(prompt, prefix));
}

double TabularLM::sequence_logprob(const TokenSeq& prompt,
                                   const TokenSeq& response) const {
  validate_token_seq(vocab_, response);
  if (static_cast<int>(response.size()) > horizon_cap_) {
    throw Error("response longer than the horizon cap");
  }
  double total = 0.0;
  TokenSeq prefix;
  prefix.reserve(response.size());
  for (TokenId tok : response) {
    total += next_token_logprobs(prompt, prefix)[tok];
    prefix.push_back(tok);
  }
  return total;
}

}  // namespace steer::tabular
