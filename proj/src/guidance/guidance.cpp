#include "steer/guidance/guidance.hpp"

#include <cmath>

namespace steer::guidance {

GuidancePair::GuidancePair(TokenScorerPtr tuned, TokenScorerPtr untuned)
    : tuned_(std::move(tuned)), untuned_(std::move(untuned)) {
  if (!tuned_ || !untuned_) throw Error("guidance pair needs both handles");
  if (tuned_->vocab() != untuned_->vocab()) {
    throw VocabMismatch("tuned and untuned models use different vocabularies");
  }
}

double guidance_score(const GuidancePair& pair, const TokenSeq& prompt,
                      const TokenSeq& prefix) {
  validate_token_seq(pair.vocab(), prefix);
  double total = 0.0;
  TokenSeq sofar;
  sofar.reserve(prefix.size());
  for (TokenId tok : prefix) {
    const double lp_tuned =
        pair.tuned().next_token_logprobs(prompt, sofar)[tok];
    const double lp_untuned =
        pair.untuned().next_token_logprobs(prompt, sofar)[tok];
    if (!std::isfinite(lp_tuned) || !std::isfinite(lp_untuned)) {
      throw ZeroSupport("prefix has zero probability at position " +
                        std::to_string(sofar.size()));
    }
    total += lp_tuned - lp_untuned;
    sofar.push_back(tok);
  }
  return total;
}

double score_text(const GuidancePair& pair, const std::string& prompt_text,
                  const std::string& response_text) {
  const TokenSeq prompt_tokens = encode(pair.vocab(), prompt_text);
  const TokenSeq joint = encode(pair.vocab(), prompt_text + response_text);
  const std::size_t n_prompt = prompt_tokens.size();
  TokenSeq prompt_part(joint.begin(),
                       joint.begin() + std::min(n_prompt, joint.size()));
  TokenSeq response_part(joint.begin() + std::min(n_prompt, joint.size()),
                         joint.end());
  return guidance_score(pair, prompt_part, response_part);
}

double cross_vocab_score(const GuidancePair& pair, const Vocab& base_vocab,
                         const std::string& prompt_text,
                         const TokenSeq& response_tokens) {
  return score_text(pair, prompt_text, decode(base_vocab, response_tokens));
}

LogitVector eft_compose(const LogitVector& base_logprobs,
                        const LogitVector& tuned_logprobs,
                        const LogitVector& untuned_logprobs, double beta) {
  if (beta <= 0.0) throw Error("beta must be positive");
  if (base_logprobs.size() != tuned_logprobs.size() ||
      base_logprobs.size() != untuned_logprobs.size()) {
    throw VocabMismatch("composed vectors span different vocabularies");
  }
  LogitVector out(base_logprobs.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    // A zero-probability entry in any input stays out of the composed
    // support (avoids inf - inf).
    if (!std::isfinite(base_logprobs[i]) || !std::isfinite(tuned_logprobs[i]) ||
        !std::isfinite(untuned_logprobs[i])) {
      out[i] = -std::numeric_limits<double>::infinity();
    } else {
      out[i] = base_logprobs[i] +
               (tuned_logprobs[i] - untuned_logprobs[i]) / beta;
    }
  }
  return out;
}

double ScoreMemo::score(const std::string& prompt_text,
                        const std::string& response_text) {
  const std::string key = prompt_text + '\x1f' + response_text;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const double value = score_text(pair_, prompt_text, response_text);
  std::lock_guard<std::mutex> lock(mutex_);
  cache_[key] = value;
  return value;
}

}  // namespace steer::guidance
