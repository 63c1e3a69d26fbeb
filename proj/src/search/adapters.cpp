#include "steer/search/adapters.hpp"

namespace steer::search {

ChunkResult TabularBaseModel::sample_chunk(const Prompt& prompt,
                                           const GenState& state, int max_new,
                                           const SamplingParams& params,
                                           std::uint64_t seed) const {
  ChunkResult chunk;
  DrawRng rng(seed);
  TokenSeq prefix = state.tokens;
  for (int t = 0; t < max_new; ++t) {
    const Distribution dist = apply_sampling_filters(
        model_->next_token_logprobs(prompt.tokens, prefix), params);
    const TokenId tok = draw(dist, rng);
    prefix.push_back(tok);
    chunk.tokens.push_back(tok);
    ++chunk.token_count;
    if (tok == model_->vocab().eos()) {
      chunk.hit_eos = true;
      break;
    }
  }
  chunk.text = decode(model_->vocab(), chunk.tokens);
  return chunk;
}

std::unique_ptr<StateScorer> make_scorer(const guidance::GuidancePair& pair,
                                         const BaseModel& base) {
  if (base.vocab() == nullptr) {
    return std::make_unique<TextPairScorer>(pair);
  }
  if (*base.vocab() == pair.vocab()) {
    return std::make_unique<TokenPairScorer>(pair);
  }
  return std::make_unique<CrossVocabScorer>(pair, *base.vocab());
}

}  // namespace steer::search
