#pragma once

/**
 * Remote-backed search handles.
 *
 * RemoteBaseModel is the black-box mode: text in, text chunks out, no
 * client-side vocabulary or per-step probabilities. RemoteGuidancePair
 * scores continuations through two scoring-capable endpoints; the
 * constructor is the capability gate, so a sampling-only endpoint can
 * never become a guidance model.
 */

#include <memory>

#include "steer/remote/client.hpp"
#include "steer/search/model_iface.hpp"

namespace steer::remote {

class RemoteBaseModel final : public search::BaseModel {
 public:
  explicit RemoteBaseModel(BackendPtr backend) : backend_(std::move(backend)) {
    if (!backend_) throw Error("remote base model needs a backend");
  }

  // vocab() stays null and scoreable() false: the wire exposes neither.

  search::ChunkResult sample_chunk(const search::Prompt& prompt,
                                   const search::GenState& state, int max_new,
                                   const SamplingParams& params,
                                   std::uint64_t seed) const override {
    SamplingParams seeded = params;
    seeded.seed = seed;
    const std::vector<RemoteChunk> chunks = sample_chunk_remote(
        *backend_, prompt.text + state.text, max_new, seeded, 1);
    search::ChunkResult out;
    out.text = chunks[0].text;
    out.hit_eos = chunks[0].finish_reason == "stop";
    // The server owns tokenization; max_new is exact for "length" and an
    // upper bound otherwise.
    out.token_count = max_new;
    return out;
  }

  CompletionBackend& backend() const { return *backend_; }

 private:
  BackendPtr backend_;
};

class RemoteGuidancePair {
 public:
  RemoteGuidancePair(BackendPtr tuned, BackendPtr untuned)
      : tuned_(std::move(tuned)), untuned_(std::move(untuned)) {
    if (!tuned_ || !untuned_) throw Error("guidance pair needs both handles");
    if (!tuned_->config().supports_scoring ||
        !untuned_->config().supports_scoring) {
      throw ScoringUnsupported(
          "guidance models must support scoring; sampling-only endpoints "
          "can only serve as the base model");
    }
  }

  double score_text(const std::string& prompt_text,
                    const std::string& response_text) const {
    const std::string full = prompt_text + response_text;
    return score_remote(*tuned_, prompt_text, full) -
           score_remote(*untuned_, prompt_text, full);
  }

 private:
  BackendPtr tuned_;
  BackendPtr untuned_;
};

class RemoteGuidanceScorer final : public search::StateScorer {
 public:
  explicit RemoteGuidanceScorer(RemoteGuidancePair pair)
      : pair_(std::move(pair)) {}

  double score(const search::Prompt& prompt,
               const search::GenState& state) const override {
    return pair_.score_text(prompt.text, state.text);
  }

 private:
  RemoteGuidancePair pair_;
};

}  // namespace steer::remote
