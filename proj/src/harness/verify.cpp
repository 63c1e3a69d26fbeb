#include "steer/harness/verify.hpp"

#include <cmath>

#include "steer/search/adapters.hpp"
#include "steer/search/search.hpp"

namespace steer::harness {

using tabular::TabularLM;

namespace {

constexpr double kTight = 1e-9;

CheckResult make_result(std::string name, double max_error, double tolerance,
                        std::string detail = {}) {
  CheckResult out;
  out.name = std::move(name);
  out.max_error = max_error;
  out.pass = max_error <= tolerance;
  out.detail = std::move(detail);
  return out;
}

bool same_output(const search::SearchResult& a, const search::SearchResult& b) {
  return a.best.tokens == b.best.tokens && a.best.text == b.best.text &&
         a.score == b.score;  // bitwise score equality intended
}

}  // namespace

std::vector<CheckResult> verify_instance(const TabularInstance& instance,
                                         tabular::TabularLMPtr pi_star_override) {
  const tabular::TabularLMPtr pi_star =
      pi_star_override ? pi_star_override : instance.pi_star;
  const TabularLM& reference = *instance.reference;
  const tabular::SoftMDPSpec spec = instance.mdp();
  const guidance::GuidancePair pair =
      search::make_pair(pi_star, instance.reference);

  std::vector<CheckResult> out;

  // Reward/policy correspondence over every complete response.
  out.push_back(make_result(
      "duality",
      tabular::verify_duality(spec, instance.tables, *pi_star), kTight));

  // Partition normalizer: recursion route vs exhaustive route.
  out.push_back(make_result(
      "partition-cross-check",
      std::abs(instance.tables.v_root() - instance.beta * instance.tables.log_z),
      kTight));

  // Optimal policy rows are normalized log-probabilities.
  double norm_err = 0.0;
  for (const auto& [context, logits] : pi_star->rows()) {
    double sum = 0.0;
    for (double v : logits) {
      if (std::isfinite(v)) sum += std::exp(v);
    }
    norm_err = std::max(norm_err, std::abs(sum - 1.0));
  }
  out.push_back(make_result("policy-normalization", norm_err, kTight));

  // Telescoping (bitwise), the two-sum route consistency, and the value
  // identity over every prefix.
  int telescope_mismatches = 0;
  double route_err = 0.0;
  double value_err = 0.0;
  const double v_root = instance.tables.v_root();
  for (const auto& [prefix, v] : instance.tables.v) {
    if (prefix.empty()) continue;
    const double lp_star = pi_star->sequence_logprob({}, prefix);
    const double lp_ref = reference.sequence_logprob({}, prefix);
    if (!std::isfinite(lp_ref) || !std::isfinite(lp_star)) continue;

    const double score = guidance::guidance_score(pair, {}, prefix);
    // Independent left-to-right accumulation of per-token ratios.
    double manual = 0.0;
    TokenSeq sofar;
    for (TokenId tok : prefix) {
      manual += pi_star->next_token_logprobs({}, sofar)[tok] -
                reference.next_token_logprobs({}, sofar)[tok];
      sofar.push_back(tok);
    }
    if (score != manual) ++telescope_mismatches;
    route_err = std::max(route_err, std::abs(score - (lp_star - lp_ref)));

    if (std::isfinite(v)) {
      value_err = std::max(
          value_err, std::abs(instance.beta * score - (v - v_root)));
    }
  }
  for (const TokenSeq& y : tabular::enumerate_complete_responses(
           reference.vocab(), instance.horizon)) {
    const double lp_ref = reference.sequence_logprob({}, y);
    if (!std::isfinite(lp_ref)) continue;
    const double score = guidance::guidance_score(pair, {}, y);
    value_err = std::max(
        value_err, std::abs(instance.beta * score -
                            (instance.reward({}, y) - v_root)));
  }
  out.push_back(make_result("telescoping", telescope_mismatches, 0.0));
  out.push_back(make_result("sum-route-consistency", route_err, kTight));
  out.push_back(make_result("value-identity", value_err, kTight));

  return out;
}

std::vector<CheckResult> verify_equivalences(std::uint64_t seed) {
  std::vector<CheckResult> out;
  const TabularInstance inst = make_w2s_instance();
  const search::TabularBaseModel base(inst.base);
  const guidance::GuidancePair pair = inst.pair();
  const search::Prompt prompt;

  SamplingParams sampling;  // engine defaults
  int mismatches = 0;
  for (int n : {1, 4, 16}) {
    for (int trial = 0; trial < 5; ++trial) {
      sampling.seed = seeds::derive(seed, 91, n, trial);
      const search::SearchResult bon =
          search::best_of_n(base, pair, prompt, n, sampling, inst.horizon);
      search::SearchConfig config;
      config.beam_width = 1;
      config.successors = n;
      config.chunk_len = search::kInfiniteChunk;
      config.max_tokens = inst.horizon;
      config.sampling = sampling;
      const search::SearchResult beam = search::cbs(base, pair, prompt, config);
      if (!same_output(bon, beam)) ++mismatches;
    }
  }
  out.push_back(make_result("bon-equals-single-beam-infinite-chunk",
                            mismatches, 0.0));

  mismatches = 0;
  for (int w : {1, 2, 4}) {
    const search::SearchResult beam = search::token_beam_search(
        base, search::TokenPairScorer(pair), prompt, w, inst.horizon,
        sampling);
    search::SearchConfig config;
    config.beam_width = w;
    config.successors = 1;
    config.chunk_len = 1;
    config.exhaustive = true;
    config.max_tokens = inst.horizon;
    config.sampling = sampling;
    const search::SearchResult chunked = search::cbs(base, pair, prompt, config);
    if (!same_output(beam, chunked)) ++mismatches;
  }
  out.push_back(
      make_result("token-beam-equals-exhaustive-search", mismatches, 0.0));
  return out;
}

std::vector<CheckResult> verify_eft_identity() {
  const TabularInstance inst = make_27seq_instance();
  const search::TabularBaseModel base(inst.reference);  // base = untuned
  const search::Prompt prompt;

  double worst = 0.0;
  std::function<void(const TokenSeq&)> walk = [&](const TokenSeq& prefix) {
    if (static_cast<int>(prefix.size()) >= inst.horizon) return;
    search::GenState state;
    state.tokens = prefix;
    const LogitVector composed = guidance::eft_compose(
        base.next_token_logprobs(prompt, state),
        inst.pi_star->next_token_logprobs({}, prefix),
        inst.reference->next_token_logprobs({}, prefix), 1.0);
    const std::vector<double> tuned =
        inst.pi_star->next_token_logprobs({}, prefix);
    const Distribution lhs = softmax(composed);
    const Distribution rhs = softmax(tuned);
    for (std::size_t i = 0; i < lhs.size(); ++i) {
      worst = std::max(worst, std::abs(lhs[i] - rhs[i]));
    }
    for (TokenId id = 0; id < inst.vocab().size(); ++id) {
      if (id == inst.vocab().eos()) continue;
      TokenSeq next = prefix;
      next.push_back(id);
      walk(next);
    }
  };
  walk({});

  return {make_result("eft-identity-per-step", worst, 1e-12)};
}

std::vector<CheckResult> run_verify(std::uint64_t seed, int random_instances) {
  std::vector<CheckResult> out;
  auto absorb = [&](const std::string& tag, std::vector<CheckResult> results) {
    for (CheckResult& r : results) {
      r.name = tag + "/" + r.name;
      out.push_back(std::move(r));
    }
  };

  const double betas[] = {0.25, 1.0, 4.0};
  for (int i = 0; i < random_instances; ++i) {
    const int vocab_size = 3 + static_cast<int>(i % 3);
    const int horizon = 3 + static_cast<int>(i % 4);
    const double beta = betas[i % 3];
    absorb("random-" + std::to_string(i),
           verify_instance(make_random_instance(seeds::derive(seed, 7, i, 0),
                                                vocab_size, horizon, beta)));
  }
  absorb("w2s", verify_instance(make_w2s_instance()));
  absorb("flat27", verify_instance(make_27seq_instance()));
  absorb("equivalence", verify_equivalences(seed));
  absorb("eft", verify_eft_identity());
  return out;
}

}  // namespace steer::harness
