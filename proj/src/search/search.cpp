#include "steer/search/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "steer/search/adapters.hpp"

namespace steer::search {

namespace {

void check_config(const SearchConfig& config, const BaseModel& base) {
  if (config.beam_width < 1) throw Error("beam width must be >= 1");
  if (config.successors < 1) throw Error("successors per state must be >= 1");
  if (config.chunk_len < 1) throw Error("chunk length must be >= 1");
  if (config.max_tokens < 1) throw Error("max_tokens must be >= 1");
  if (config.exhaustive) {
    if (config.chunk_len != 1) {
      throw Error("exhaustive expansion requires chunk length 1");
    }
    if (!base.scoreable() || base.vocab() == nullptr) {
      throw ScoringUnsupported(
          "exhaustive expansion needs a scoreable in-process base");
    }
  }
}

GenState extend(const GenState& state, const ChunkResult& chunk,
                int max_tokens) {
  GenState out = state;
  out.tokens.insert(out.tokens.end(), chunk.tokens.begin(),
                    chunk.tokens.end());
  out.text += chunk.text;
  out.token_count += chunk.token_count;
  if (chunk.hit_eos) {
    out.saw_eos = true;
  } else if (out.token_count >= max_tokens) {
    out.truncated = true;
  }
  return out;
}

/// Runs jobs [0, n) with up to `parallelism` worker threads; each job
/// writes into its own slot so the merged result is independent of
/// completion order.
void run_indexed(std::size_t n, int parallelism,
                 const std::function<void(std::size_t)>& job) {
  if (parallelism <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const int threads = std::min<std::size_t>(parallelism, n);
  for (int w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct Candidate {
  Hypothesis hyp;
  int parent_slot = 0;
  int sample_index = 0;
  bool carried = false;  // a complete hypothesis carried over unchanged
};

/// Top-W selection: stable sort by descending score over candidates listed
/// in (parent_slot, sample_index) order, so ties resolve to the earlier
/// parent and then the lower sample index.
std::vector<std::size_t> select_top(const std::vector<Candidate>& cands,
                                    int width) {
  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return cands[a].hyp.score > cands[b].hyp.score;
                   });
  order.resize(std::min<std::size_t>(order.size(), width));
  return order;
}

SearchResult finish(std::vector<Hypothesis> beam, SearchTrace trace,
                    std::int64_t tokens_sampled, int rounds) {
  SearchResult result;
  std::size_t best = 0;
  for (std::size_t i = 1; i < beam.size(); ++i) {
    if (beam[i].score > beam[best].score) best = i;
  }
  result.best = std::move(beam[best].state);
  result.score = beam[best].score;
  result.trace = std::move(trace);
  result.tokens_sampled = tokens_sampled;
  result.rounds = rounds;
  return result;
}

}  // namespace

SearchResult cbs(const BaseModel& base, const StateScorer& scorer,
                 const Prompt& prompt, const SearchConfig& config) {
  check_config(config, base);
  const std::uint64_t run_seed = config.sampling.seed;
  const std::int64_t hard_cap =
      config.hard_token_cap > 0
          ? config.hard_token_cap
          : static_cast<std::int64_t>(config.beam_width) * config.successors *
                config.max_tokens * 4;

  // Exhaustive expansion is deterministic, so W identical roots would fill
  // the beam with copies of the per-step argmax; a single root keeps the
  // frontier made of distinct prefixes. Sampled mode seeds all W slots.
  std::vector<Hypothesis> beam(config.exhaustive ? 1 : config.beam_width);

  SearchTrace trace;
  std::int64_t tokens_sampled = 0;
  int round = 0;

  while (std::any_of(beam.begin(), beam.end(), [](const Hypothesis& h) {
    return !h.state.complete();
  })) {
    std::vector<Candidate> cands;
    if (config.exhaustive) {
      for (int p = 0; p < static_cast<int>(beam.size()); ++p) {
        const Hypothesis& hyp = beam[p];
        if (hyp.state.complete()) {
          cands.push_back({hyp, p, 0, true});
          continue;
        }
        const Distribution dist = apply_sampling_filters(
            base.next_token_logprobs(prompt, hyp.state), config.sampling);
        for (TokenId tok = 0; tok < static_cast<TokenId>(dist.size());
             ++tok) {
          if (dist[tok] <= 0.0) continue;
          ChunkResult chunk;
          chunk.tokens = {tok};
          chunk.text = decode(*base.vocab(), chunk.tokens);
          chunk.hit_eos = (tok == base.vocab()->eos());
          chunk.token_count = 1;
          Candidate cand;
          cand.hyp.state = extend(hyp.state, chunk, config.max_tokens);
          cand.parent_slot = p;
          cand.sample_index = tok;
          cands.push_back(std::move(cand));
          ++tokens_sampled;
        }
        if (static_cast<int>(cands.size()) > config.branch_budget) {
          throw SupportTooLarge("exhaustive expansion exceeds branch budget");
        }
      }
    } else {
      // Lay out sampling jobs in (parent, sample) order; the result slots
      // make the merge independent of completion order.
      struct Job {
        int parent;
        int k;
        std::uint64_t seed;
      };
      std::vector<Job> jobs;
      for (int p = 0; p < static_cast<int>(beam.size()); ++p) {
        const Hypothesis& hyp = beam[p];
        if (hyp.state.complete()) {
          cands.push_back({hyp, p, 0, true});
          continue;
        }
        for (int k = 0; k < config.successors; ++k) {
          jobs.push_back({p, k, seeds::derive(run_seed, round, p, k)});
        }
      }
      std::vector<Candidate> sampled(jobs.size());
      run_indexed(jobs.size(), config.parallelism, [&](std::size_t i) {
        const Job& job = jobs[i];
        const Hypothesis& hyp = beam[job.parent];
        const int remaining = config.max_tokens - hyp.state.token_count;
        const int max_new = std::min(config.chunk_len, remaining);
        const ChunkResult chunk = base.sample_chunk(
            prompt, hyp.state, max_new, config.sampling, job.seed);
        Candidate cand;
        cand.hyp.state = extend(hyp.state, chunk, config.max_tokens);
        cand.hyp.slot_seed = job.seed;
        cand.parent_slot = job.parent;
        cand.sample_index = job.k;
        sampled[i] = std::move(cand);
      });
      for (Candidate& cand : sampled) {
        tokens_sampled += cand.hyp.state.token_count;
        tokens_sampled -= beam[cand.parent_slot].state.token_count;
      }
      // Merge carried candidates with sampled ones in (parent, k) order.
      std::vector<Candidate> merged;
      merged.reserve(cands.size() + sampled.size());
      std::size_t ci = 0, si = 0;
      while (ci < cands.size() || si < sampled.size()) {
        const bool take_carried =
            ci < cands.size() &&
            (si >= sampled.size() ||
             cands[ci].parent_slot < sampled[si].parent_slot);
        merged.push_back(take_carried ? std::move(cands[ci++])
                                      : std::move(sampled[si++]));
      }
      cands = std::move(merged);
    }

    if (tokens_sampled > hard_cap) {
      throw BudgetExceeded("search sampled " + std::to_string(tokens_sampled) +
                           " tokens, cap " + std::to_string(hard_cap));
    }

    // Score fresh candidates; carried ones keep their cached score.
    run_indexed(cands.size(), config.parallelism, [&](std::size_t i) {
      if (!cands[i].carried) {
        cands[i].hyp.score = scorer.score(prompt, cands[i].hyp.state);
      }
    });

    const std::vector<std::size_t> survivors =
        select_top(cands, config.beam_width);

    TraceRound tr;
    tr.candidates.reserve(cands.size());
    std::vector<int> new_slot(cands.size(), -1);
    for (std::size_t rank = 0; rank < survivors.size(); ++rank) {
      new_slot[survivors[rank]] = static_cast<int>(rank);
    }
    for (std::size_t i = 0; i < cands.size(); ++i) {
      TraceCandidate tc;
      tc.parent_slot = cands[i].parent_slot;
      tc.sample_index = cands[i].sample_index;
      tc.tokens = cands[i].hyp.state.tokens;
      tc.text = cands[i].hyp.state.text;
      tc.score = cands[i].hyp.score;
      tc.complete = cands[i].hyp.state.complete();
      tc.truncated = cands[i].hyp.state.truncated;
      tc.slot_seed = cands[i].hyp.slot_seed;
      tc.survived = new_slot[i] >= 0;
      tc.new_slot = new_slot[i];
      tr.candidates.push_back(std::move(tc));
    }
    trace.rounds.push_back(std::move(tr));

    std::vector<Hypothesis> next_beam;
    next_beam.reserve(survivors.size());
    for (std::size_t idx : survivors) {
      next_beam.push_back(std::move(cands[idx].hyp));
    }
    beam = std::move(next_beam);
    ++round;
  }

  return finish(std::move(beam), std::move(trace), tokens_sampled, round);
}

SearchResult cbs(const BaseModel& base, const guidance::GuidancePair& pair,
                 const Prompt& prompt, const SearchConfig& config) {
  const auto scorer = make_scorer(pair, base);
  return cbs(base, *scorer, prompt, config);
}

SearchResult best_of_n(const BaseModel& base, const StateScorer& scorer,
                       const Prompt& prompt, int n,
                       const SamplingParams& sampling, int max_tokens) {
  if (n < 1) throw Error("best-of-n needs n >= 1");
  SearchResult result;
  result.rounds = 1;
  bool have_best = false;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t seed = seeds::derive(sampling.seed, 0, 0, i);
    const ChunkResult chunk =
        base.sample_chunk(prompt, GenState{}, max_tokens, sampling, seed);
    const GenState state = extend(GenState{}, chunk, max_tokens);
    result.tokens_sampled += state.token_count;
    const double score = scorer.score(prompt, state);
    if (!have_best || score > result.score) {
      result.best = state;
      result.score = score;
      have_best = true;
    }
  }
  return result;
}

SearchResult best_of_n(const BaseModel& base,
                       const guidance::GuidancePair& pair,
                       const Prompt& prompt, int n,
                       const SamplingParams& sampling, int max_tokens) {
  const auto scorer = make_scorer(pair, base);
  return best_of_n(base, *scorer, prompt, n, sampling, max_tokens);
}

SearchResult token_beam_search(const BaseModel& base,
                               const StateScorer& scorer, const Prompt& prompt,
                               int beam_width, int max_tokens,
                               const SamplingParams& params,
                               int branch_budget) {
  if (beam_width < 1) throw Error("beam width must be >= 1");
  if (!base.scoreable() || base.vocab() == nullptr) {
    throw ScoringUnsupported("token beam search needs a scoreable base");
  }

  std::vector<Hypothesis> beam(1);
  int rounds = 0;
  while (std::any_of(beam.begin(), beam.end(), [](const Hypothesis& h) {
    return !h.state.complete();
  })) {
    std::vector<Candidate> cands;
    for (int p = 0; p < static_cast<int>(beam.size()); ++p) {
      const Hypothesis& hyp = beam[p];
      if (hyp.state.complete()) {
        cands.push_back({hyp, p, 0, true});
        continue;
      }
      const Distribution dist = apply_sampling_filters(
          base.next_token_logprobs(prompt, hyp.state), params);
      for (TokenId tok = 0; tok < static_cast<TokenId>(dist.size()); ++tok) {
        if (dist[tok] <= 0.0) continue;
        ChunkResult chunk;
        chunk.tokens = {tok};
        chunk.text = decode(*base.vocab(), chunk.tokens);
        chunk.hit_eos = (tok == base.vocab()->eos());
        chunk.token_count = 1;
        Candidate cand;
        cand.hyp.state = extend(hyp.state, chunk, max_tokens);
        cand.hyp.score = scorer.score(prompt, cand.hyp.state);
        cand.parent_slot = p;
        cand.sample_index = tok;
        cands.push_back(std::move(cand));
      }
      if (static_cast<int>(cands.size()) > branch_budget) {
        throw SupportTooLarge("token beam expansion exceeds branch budget");
      }
    }
    const std::vector<std::size_t> survivors = select_top(cands, beam_width);
    std::vector<Hypothesis> next_beam;
    next_beam.reserve(survivors.size());
    for (std::size_t idx : survivors) {
      next_beam.push_back(std::move(cands[idx].hyp));
    }
    beam = std::move(next_beam);
    ++rounds;
  }
  return finish(std::move(beam), SearchTrace{}, 0, rounds);
}

SampleResult eft_decode(const BaseModel& base,
                        const guidance::GuidancePair& pair,
                        const Prompt& prompt, double beta,
                        const SamplingParams& sampling, int max_tokens) {
  if (!base.scoreable() || base.vocab() == nullptr) {
    throw ScoringUnsupported(
        "per-token composition needs a scoreable in-process base");
  }
  if (*base.vocab() != pair.vocab()) {
    throw VocabMismatch(
        "per-token composition requires one shared vocabulary");
  }

  SampleResult result;
  DrawRng rng(sampling.seed);
  const TokenId eos = base.vocab()->eos();
  while (!result.state.complete()) {
    const LogitVector composed = guidance::eft_compose(
        base.next_token_logprobs(prompt, result.state),
        pair.tuned().next_token_logprobs(prompt.tokens, result.state.tokens),
        pair.untuned().next_token_logprobs(prompt.tokens,
                                           result.state.tokens),
        beta);
    const TokenId tok = draw(apply_sampling_filters(composed, sampling), rng);
    ChunkResult chunk;
    chunk.tokens = {tok};
    chunk.text = decode(*base.vocab(), chunk.tokens);
    chunk.hit_eos = (tok == eos);
    chunk.token_count = 1;
    result.state = extend(result.state, chunk, max_tokens);
    ++result.tokens_sampled;
  }
  return result;
}

SampleResult sample_base(const BaseModel& base, const Prompt& prompt,
                         const SamplingParams& sampling, int max_tokens) {
  SampleResult result;
  const ChunkResult chunk = base.sample_chunk(prompt, GenState{}, max_tokens,
                                              sampling, sampling.seed);
  result.state = extend(GenState{}, chunk, max_tokens);
  result.tokens_sampled = result.state.token_count;
  return result;
}

}  // namespace steer::search
