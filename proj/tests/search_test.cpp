#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "steer/harness/evaluate.hpp"
#include "steer/harness/fixtures.hpp"
#include "steer/search/adapters.hpp"
#include "steer/search/search.hpp"
#include "support/oracles.hpp"

using namespace steer;
using search::GenState;
using search::Prompt;
using search::SearchConfig;
using search::SearchResult;
using search::TabularBaseModel;

namespace {

SamplingParams full_support_params(std::uint64_t seed) {
  SamplingParams params;
  params.temperature = 1.0;
  params.top_k = kTopKAll;
  params.top_p = 1.0;
  params.seed = seed;
  return params;
}

bool same_output(const SearchResult& a, const SearchResult& b) {
  return a.best.tokens == b.best.tokens && a.best.text == b.best.text &&
         a.score == b.score;
}

/// Positive filtered base probability at every position of the response.
void check_support_containment(const tabular::TabularLM& base,
                               const TokenSeq& prompt, const TokenSeq& response,
                               const SamplingParams& params) {
  TokenSeq prefix;
  for (TokenId tok : response) {
    const Distribution dist = apply_sampling_filters(
        base.next_token_logprobs(prompt, prefix), params);
    CHECK(dist[tok] > 0.0);
    prefix.push_back(tok);
  }
}

}  // namespace

TEST_CASE("cbs: the synthetic preset (4,4,5) runs and returns a winner") {
  const auto inst = harness::make_w2s_instance();
  const TabularBaseModel base(inst.base);
  SearchConfig config;
  config.beam_width = 4;
  config.successors = 4;
  config.chunk_len = 5;
  config.max_tokens = inst.horizon;
  config.sampling.seed = 7;
  const SearchResult result = search::cbs(base, inst.pair(), {}, config);
  CHECK(result.best.complete());
  CHECK(is_complete(inst.vocab(), result.best.tokens));
  CHECK(result.rounds >= 1);
}

TEST_CASE("cbs: single-beam infinite-chunk search is best_of_n, byte for byte") {
  const auto inst = harness::make_w2s_instance();
  const TabularBaseModel base(inst.base);
  const guidance::GuidancePair pair = inst.pair();
  for (int n : {1, 4, 16}) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      SamplingParams sampling;  // engine defaults
      sampling.seed = seeds::derive(seed, 0, 0, n);
      const SearchResult bon =
          search::best_of_n(base, pair, {}, n, sampling, inst.horizon);

      SearchConfig config;
      config.beam_width = 1;
      config.successors = n;
      config.chunk_len = search::kInfiniteChunk;
      config.max_tokens = inst.horizon;
      config.sampling = sampling;
      const SearchResult beam = search::cbs(base, pair, {}, config);

      CHECK(same_output(bon, beam));
      CHECK(bon.tokens_sampled == beam.tokens_sampled);
    }
  }
}

TEST_CASE("cbs: exhaustive mode equals token beam search") {
  const auto inst = harness::make_w2s_instance();
  const TabularBaseModel base(inst.base);
  const guidance::GuidancePair pair = inst.pair();
  const search::TokenPairScorer scorer(pair);
  for (int w : {1, 2, 4}) {
    const SamplingParams params = full_support_params(0);
    const SearchResult beam = search::token_beam_search(
        base, scorer, {}, w, inst.horizon, params);
    SearchConfig config;
    config.beam_width = w;
    config.chunk_len = 1;
    config.exhaustive = true;
    config.max_tokens = inst.horizon;
    config.sampling = params;
    const SearchResult chunked = search::cbs(base, pair, {}, config);
    CHECK(same_output(beam, chunked));
  }
}

TEST_CASE("cbs: exhaustive search with a wide beam finds the global argmax") {
  // |V| = 3 over {a, b, <eos>}, horizon 3: seven complete sequences.
  Vocab vocab({"a", "b", "<eos>"}, 2);
  auto base_lm = std::make_shared<tabular::TabularLM>(vocab, 1, 3);
  base_lm->set_row({}, {0.2, 0.1, -0.1});
  base_lm->set_row({0}, {-0.1, 0.3, 0.0});
  base_lm->set_row({1}, {0.4, -0.2, 0.1});

  auto untuned = std::make_shared<tabular::TabularLM>(vocab, 1, 3);
  untuned->set_row({}, {0.0, 0.2, 0.0});
  untuned->set_row({0}, {0.1, -0.3, 0.2});
  untuned->set_row({1}, {-0.2, 0.1, 0.3});
  auto tuned = std::make_shared<tabular::TabularLM>(vocab, 1, 3);
  tuned->set_row({}, {0.6, -0.4, 0.1});
  tuned->set_row({0}, {0.5, 0.0, -0.2});
  tuned->set_row({1}, {0.0, 0.4, -0.1});
  const guidance::GuidancePair pair = search::make_pair(tuned, untuned);

  const TabularBaseModel base(base_lm);
  SearchConfig config;
  config.beam_width = 27;
  config.chunk_len = 1;
  config.exhaustive = true;
  config.max_tokens = 3;
  config.sampling = full_support_params(0);
  const SearchResult got = search::cbs(base, pair, {}, config);

  const auto [best, best_score] = oracles::brute_force_best(
      *base_lm, {}, 3, [&](const TokenSeq& y) {
        return guidance::guidance_score(pair, {}, y);
      });
  CHECK(got.best.tokens == best);
  CHECK(got.score == best_score);
}

TEST_CASE("token beam search: width one is greedy per-token ratio ascent") {
  // Hand-enumerated: ratios at the root are a: +0.418, b: -0.582,
  // <eos>: -0.082, so greedy takes 'a' and the horizon forces <eos>.
  Vocab vocab({"a", "b", "<eos>"}, 2);
  auto base_lm = std::make_shared<tabular::TabularLM>(vocab, 0, 2);
  base_lm->set_row({}, {0.0, 0.0, 0.0});
  auto untuned = std::make_shared<tabular::TabularLM>(vocab, 0, 2);
  untuned->set_row({}, {0.0, 0.0, 0.0});
  auto tuned = std::make_shared<tabular::TabularLM>(vocab, 0, 2);
  tuned->set_row({}, {1.0, 0.0, 0.5});

  const TabularBaseModel base(base_lm);
  const search::TokenPairScorer scorer(search::make_pair(tuned, untuned));
  const SearchResult result = search::token_beam_search(
      base, scorer, {}, 1, 2, full_support_params(0));
  CHECK(result.best.tokens == TokenSeq{0, 2});
  CHECK(result.score == doctest::Approx(0.4183426180263752).epsilon(1e-15));
}

TEST_CASE("token beam search: a wide enough beam matches brute force") {
  const auto inst = harness::make_w2s_instance();
  const TabularBaseModel base(inst.base);
  const search::TokenPairScorer scorer(inst.pair());
  // 40 complete sequences at horizon 4 over three symbols.
  const SearchResult result = search::token_beam_search(
      base, scorer, {}, 64, inst.horizon, full_support_params(0));
  const auto [best, best_score] = oracles::brute_force_best(
      *inst.base, {}, inst.horizon, [&](const TokenSeq& y) {
        return guidance::guidance_score(inst.pair(), {}, y);
      });
  CHECK(result.best.tokens == best);
  CHECK(result.score == doctest::Approx(best_score).epsilon(1e-15));
}

TEST_CASE("best_of_n: n = 1 returns the single base sample") {
  const auto inst = harness::make_w2s_instance();
  const TabularBaseModel base(inst.base);
  SamplingParams sampling;
  sampling.seed = 3;
  const SearchResult result =
      search::best_of_n(base, inst.pair(), {}, 1, sampling, inst.horizon);
  // The same stream drawn directly.
  const search::ChunkResult chunk = base.sample_chunk(
      {}, GenState{}, inst.horizon, sampling, seeds::derive(3, 0, 0, 0));
  CHECK(result.best.tokens == chunk.tokens);
}

TEST_CASE("best_of_n: mean guidance score is monotone in n") {
  const auto inst = harness::make_w2s_instance();
  const TabularBaseModel base(inst.base);
  const guidance::GuidancePair pair = inst.pair();
  const int trials = 500;
  double previous = -1e18;
  for (int n : {1, 4, 16}) {
    double total = 0.0;
    for (int t = 0; t < trials; ++t) {
      SamplingParams sampling;
      sampling.seed = seeds::derive(42, 1, t, 0);
      total += search::best_of_n(base, pair, {}, n, sampling, inst.horizon)
                   .score;
    }
    const double mean = total / trials;
    // Shared per-trial streams nest the candidate sets, so the per-trial
    // maximum (and the mean) cannot decrease with n.
    CHECK(mean >= previous);
    previous = mean;
  }
}

TEST_CASE("sample_base: point-mass rows decode deterministically") {
  Vocab vocab({"a", "b", "<eos>"}, 2);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  auto lm = std::make_shared<tabular::TabularLM>(vocab, 1, 4);
  lm->set_row({}, {0.0, -kInf, -kInf});
  lm->set_row({0}, {-kInf, 0.0, -kInf});
  lm->set_row({1}, {-kInf, -kInf, 0.0});
  const TabularBaseModel base(lm);
  for (std::uint64_t seed : {1ULL, 99ULL}) {
    SamplingParams sampling;
    sampling.seed = seed;
    const auto result = search::sample_base(base, {}, sampling, 8);
    CHECK(result.state.tokens == TokenSeq{0, 1, 2});
    CHECK(result.state.text == "ab");
  }
}

TEST_CASE("sample_base: horizon-forced EOS bounds the length") {
  const auto inst = harness::make_w2s_instance();
  const TabularBaseModel base(inst.base);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SamplingParams sampling;
    sampling.seed = seed;
    const auto result = search::sample_base(base, {}, sampling, 100);
    CHECK(result.state.saw_eos);
    CHECK(static_cast<int>(result.state.tokens.size()) <= inst.horizon);
  }
}

TEST_CASE("eft_decode: tuned == untuned replays base sampling bit for bit") {
  const auto inst = harness::make_w2s_instance();
  const TabularBaseModel base(inst.base);
  const guidance::GuidancePair pair =
      search::make_pair(inst.reference, inst.reference);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SamplingParams sampling;  // engine defaults, incl. temperature 0.7
    sampling.seed = seed;
    const auto via_eft =
        search::eft_decode(base, pair, {}, 2.0, sampling, inst.horizon);
    const auto via_base =
        search::sample_base(base, {}, sampling, inst.horizon);
    CHECK(via_eft.state.tokens == via_base.state.tokens);
    CHECK(via_eft.state.text == via_base.state.text);
  }
}

TEST_CASE("eft_decode: the beta sweep preset runs") {
  const auto inst = harness::make_w2s_instance();
  // Base shares the guidance vocabulary here (the shared-vocab setting).
  const TabularBaseModel base(inst.reference);
  const guidance::GuidancePair pair = inst.pair();
  for (double beta : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    SamplingParams sampling;
    sampling.seed = 11;
    const auto result =
        search::eft_decode(base, pair, {}, beta, sampling, inst.horizon);
    CHECK(result.state.complete());
  }
}

TEST_CASE("eft_decode: vocabulary and capability gates") {
  const auto inst = harness::make_w2s_instance();
  Vocab other({"x", "y", "<eos>"}, 2);
  auto lm = std::make_shared<tabular::TabularLM>(other, 0, 4);
  lm->set_row({}, {0.0, 0.0, 0.0});
  const TabularBaseModel mismatched(lm);
  SamplingParams sampling;
  CHECK_THROWS_AS(
      search::eft_decode(mismatched, inst.pair(), {}, 1.0, sampling, 4),
      VocabMismatch);
}

TEST_CASE("cbs: trace survivors replay to their recorded scores") {
  const auto inst = harness::make_w2s_instance();
  const TabularBaseModel base(inst.base);
  const guidance::GuidancePair pair = inst.pair();
  SearchConfig config;
  config.beam_width = 4;
  config.successors = 4;
  config.chunk_len = 2;
  config.max_tokens = inst.horizon;
  config.sampling.seed = 21;
  const SearchResult result = search::cbs(base, pair, {}, config);

  REQUIRE(!result.trace.rounds.empty());
  for (const auto& round : result.trace.rounds) {
    int survivors = 0;
    for (const auto& cand : round.candidates) {
      if (!cand.survived) continue;
      ++survivors;
      const double replayed =
          guidance::guidance_score(pair, {}, cand.tokens);
      CHECK(std::abs(replayed - cand.score) <= 1e-9);
    }
    CHECK(survivors <= config.beam_width);

    // Survivors are exactly the Top-W under the stated tie rule.
    std::vector<const search::TraceCandidate*> sorted;
    for (const auto& cand : round.candidates) sorted.push_back(&cand);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto* a, const auto* b) {
                       return a->score > b->score;
                     });
    for (int i = 0; i < survivors; ++i) CHECK(sorted[i]->survived);
  }
}

TEST_CASE("cbs: budget accounting and round caps") {
  const auto inst = harness::make_w2s_instance();
  const TabularBaseModel base(inst.base);
  SearchConfig config;
  config.beam_width = 3;
  config.successors = 2;
  config.chunk_len = 2;
  config.max_tokens = inst.horizon;
  config.sampling.seed = 13;
  const SearchResult result = search::cbs(base, inst.pair(), {}, config);

  CHECK(result.rounds <= (config.max_tokens + config.chunk_len - 1) /
                             config.chunk_len);
  for (const auto& round : result.trace.rounds) {
    CHECK(static_cast<int>(round.candidates.size()) <=
          config.beam_width * config.successors);
  }

  SearchConfig strangled = config;
  strangled.hard_token_cap = 1;
  CHECK_THROWS_AS(search::cbs(base, inst.pair(), {}, strangled),
                  BudgetExceeded);
}

TEST_CASE("cbs/bon: outputs stay inside the filtered base support") {
  const auto inst = harness::make_w2s_instance();
  const TabularBaseModel base(inst.base);
  const guidance::GuidancePair pair = inst.pair();
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    SamplingParams sampling;
    sampling.seed = seed;
    SearchConfig config;
    config.beam_width = 4;
    config.successors = 4;
    config.chunk_len = 2;
    config.max_tokens = inst.horizon;
    config.sampling = sampling;
    const SearchResult via_cbs = search::cbs(base, pair, {}, config);
    check_support_containment(*inst.base, {}, via_cbs.best.tokens, sampling);

    const SearchResult via_bon =
        search::best_of_n(base, pair, {}, 16, sampling, inst.horizon);
    check_support_containment(*inst.base, {}, via_bon.best.tokens, sampling);
  }
}

TEST_CASE("cbs: chunks stop early at EOS and truncation is flagged") {
  const auto inst = harness::make_w2s_instance();
  const TabularBaseModel base(inst.base);
  SearchConfig config;
  config.beam_width = 2;
  config.successors = 2;
  config.chunk_len = 3;
  config.max_tokens = 2;  // tighter than the horizon: truncation possible
  config.sampling.seed = 5;
  const SearchResult result = search::cbs(base, inst.pair(), {}, config);
  CHECK(result.best.complete());
  CHECK(static_cast<int>(result.best.tokens.size()) <= 2);
  if (!result.best.saw_eos) CHECK(result.best.truncated);
}

TEST_CASE("sample_base: empirical distribution matches the exact one") {
  const auto inst = harness::make_27seq_instance();
  const TabularBaseModel base(inst.reference);
  SamplingParams sampling;  // engine defaults
  const int trials = 5000;
  std::map<TokenSeq, double> empirical;
  for (int t = 0; t < trials; ++t) {
    SamplingParams s = sampling;
    s.seed = seeds::derive(31337, t, 0, 0);
    empirical[search::sample_base(base, {}, s, inst.horizon).state.tokens] +=
        1.0 / trials;
  }
  const auto exact = harness::exact_sequence_distribution(
      *inst.reference, {}, sampling, inst.horizon);
  CHECK(harness::total_variation(empirical, exact) < 0.05);
}

TEST_CASE("exhaustive expansion: branch budgets are enforced") {
  const auto inst = harness::make_w2s_instance();
  const TabularBaseModel base(inst.base);
  const search::TokenPairScorer scorer(inst.pair());
  CHECK_THROWS_AS(
      search::token_beam_search(base, scorer, {}, 8, inst.horizon,
                                full_support_params(0), /*branch_budget=*/2),
      SupportTooLarge);
  search::SearchConfig config;
  config.beam_width = 8;
  config.chunk_len = 1;
  config.exhaustive = true;
  config.max_tokens = inst.horizon;
  config.sampling = full_support_params(0);
  config.branch_budget = 2;
  CHECK_THROWS_AS(search::cbs(base, inst.pair(), {}, config),
                  SupportTooLarge);
}

TEST_CASE("cbs: config validation") {
  const auto inst = harness::make_w2s_instance();
  const TabularBaseModel base(inst.base);
  SearchConfig config;
  config.beam_width = 0;
  CHECK_THROWS_AS(search::cbs(base, inst.pair(), {}, config), Error);
  config = SearchConfig{};
  config.exhaustive = true;
  config.chunk_len = 2;
  CHECK_THROWS_AS(search::cbs(base, inst.pair(), {}, config), Error);
}

TEST_CASE("search: concurrent expansion matches the sequential result") {
  const auto inst = harness::make_w2s_instance();
  const TabularBaseModel base(inst.base);
  const guidance::GuidancePair pair = inst.pair();
  SearchConfig config;
  config.beam_width = 4;
  config.successors = 4;
  config.chunk_len = 2;
  config.max_tokens = inst.horizon;
  config.sampling.seed = 77;
  const SearchResult sequential = search::cbs(base, pair, {}, config);
  config.parallelism = 8;
  const SearchResult parallel = search::cbs(base, pair, {}, config);
  CHECK(same_output(sequential, parallel));
  CHECK(sequential.tokens_sampled == parallel.tokens_sampled);
}
