#pragma once

/**
 * Concrete BaseModel / StateScorer implementations for in-process tabular
 * models, plus the scorer selection logic (same vocabulary scores tokens
 * directly; anything else goes through decode + re-encode).
 */

#include <memory>

#include "steer/guidance/guidance.hpp"
#include "steer/search/model_iface.hpp"
#include "steer/tabular/tabular_lm.hpp"

namespace steer::search {

/// Adapts a TabularLM to the guidance TokenScorer interface.
class TabularScorer final : public guidance::TokenScorer {
 public:
  explicit TabularScorer(tabular::TabularLMPtr model)
      : model_(std::move(model)) {}

  const Vocab& vocab() const override { return model_->vocab(); }
  std::vector<double> next_token_logprobs(
      const TokenSeq& prompt, const TokenSeq& prefix) const override {
    return model_->next_token_logprobs(prompt, prefix);
  }

 private:
  tabular::TabularLMPtr model_;
};

inline guidance::GuidancePair make_pair(tabular::TabularLMPtr tuned,
                                        tabular::TabularLMPtr untuned) {
  return guidance::GuidancePair(
      std::make_shared<TabularScorer>(std::move(tuned)),
      std::make_shared<TabularScorer>(std::move(untuned)));
}

/// Sampling plus scoring over an in-process tabular model. Sampling draws
/// token-by-token from the filtered log-softmax rows, so its support is
/// exactly the filtered support.
class TabularBaseModel final : public BaseModel {
 public:
  explicit TabularBaseModel(tabular::TabularLMPtr model)
      : model_(std::move(model)) {}

  const Vocab* vocab() const override { return &model_->vocab(); }
  bool scoreable() const override { return true; }

  ChunkResult sample_chunk(const Prompt& prompt, const GenState& state,
                           int max_new, const SamplingParams& params,
                           std::uint64_t seed) const override;

  LogitVector next_token_logprobs(const Prompt& prompt,
                                  const GenState& state) const override {
    return model_->next_token_logprobs(prompt.tokens, state.tokens);
  }

  const tabular::TabularLM& model() const { return *model_; }

 private:
  tabular::TabularLMPtr model_;
};

/// Same-vocabulary scorer: prompt and prefix tokens go straight to the
/// guidance pair.
class TokenPairScorer final : public StateScorer {
 public:
  explicit TokenPairScorer(guidance::GuidancePair pair)
      : pair_(std::move(pair)) {}

  double score(const Prompt& prompt, const GenState& state) const override {
    return guidance::guidance_score(pair_, prompt.tokens, state.tokens);
  }

  const guidance::GuidancePair& pair() const { return pair_; }

 private:
  guidance::GuidancePair pair_;
};

/// Cross-vocabulary scorer: decode the base tokens, then re-encode and
/// score the whole prefix from scratch each round. A text-keyed memo
/// absorbs the repeated full rescans.
class CrossVocabScorer final : public StateScorer {
 public:
  CrossVocabScorer(guidance::GuidancePair pair, Vocab base_vocab)
      : pair_(std::move(pair)),
        base_vocab_(std::move(base_vocab)),
        memo_(std::make_unique<guidance::ScoreMemo>(pair_)) {}

  double score(const Prompt& prompt, const GenState& state) const override {
    return memo_->score(prompt.text, decode(base_vocab_, state.tokens));
  }

 private:
  guidance::GuidancePair pair_;
  Vocab base_vocab_;
  std::unique_ptr<guidance::ScoreMemo> memo_;
};

/// Text-level scorer for backends with no client-side tokens.
class TextPairScorer final : public StateScorer {
 public:
  explicit TextPairScorer(guidance::GuidancePair pair)
      : pair_(std::move(pair)),
        memo_(std::make_unique<guidance::ScoreMemo>(pair_)) {}

  double score(const Prompt& prompt, const GenState& state) const override {
    return memo_->score(prompt.text, state.text);
  }

 private:
  guidance::GuidancePair pair_;
  std::unique_ptr<guidance::ScoreMemo> memo_;
};

/// Picks the scorer for a base/pair combination: token-level when the
/// vocabularies match, text-level when the base has no vocabulary,
/// decode+re-encode otherwise.
std::unique_ptr<StateScorer> make_scorer(const guidance::GuidancePair& pair,
                                         const BaseModel& base);

}  // namespace steer::search
