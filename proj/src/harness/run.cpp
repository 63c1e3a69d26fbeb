#include "steer/harness/run.hpp"

#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

namespace steer::harness {

namespace {

constexpr std::uint64_t kRunStream = 0x52554eULL;  // disambiguates run seeds

search::SearchConfig search_config(const TaskSpec& task, bool remote_base,
                                   std::uint64_t seed, int parallelism) {
  search::SearchConfig config;
  config.beam_width = task.method.beam_width;
  config.successors = task.method.successors;
  if (task.method.chunk_len == 0) {
    config.chunk_len = search::kInfiniteChunk;
  } else if (task.method.chunk_len < 0) {
    config.chunk_len =
        remote_base ? kRemoteDefaultChunkLen : kLocalDefaultChunkLen;
  } else {
    config.chunk_len = task.method.chunk_len;
  }
  config.max_tokens = task.method.max_tokens;
  config.sampling = task.sampling;
  config.sampling.seed = seed;
  config.exhaustive = task.method.exhaustive;
  config.parallelism = parallelism;
  return config;
}

}  // namespace

std::uint64_t record_seed(std::uint64_t task_seed, int prompt_index,
                          int trial) {
  return seeds::derive(task_seed, kRunStream, prompt_index, trial);
}

RunRecord run_one(const ResolvedTask& rt, const search::Prompt& prompt,
                  std::uint64_t seed, int index, bool timing) {
  RunRecord record;
  record.index = index;
  record.prompt_text = prompt.text;
  record.prompt_tokens = prompt.tokens;
  record.method = rt.spec.method.kind;
  record.method_params = rt.spec.method;
  record.seed = seed;

  const auto start = std::chrono::steady_clock::now();
  try {
    const auto scorer = rt.scorer_for(prompt);
    SamplingParams sampling = rt.spec.sampling;
    sampling.seed = seed;
    const MethodDesc& method = rt.spec.method;

    search::GenState state;
    if (method.kind == "cbs") {
      const search::SearchResult result = search::cbs(
          *rt.base, *scorer, prompt,
          search_config(rt.spec, rt.base_tabular == nullptr, seed, 1));
      state = result.best;
      record.guidance_score = result.score;
      record.tokens_sampled = result.tokens_sampled;
      record.rounds = result.rounds;
    } else if (method.kind == "bon") {
      const search::SearchResult result = search::best_of_n(
          *rt.base, *scorer, prompt, method.n, sampling, method.max_tokens);
      state = result.best;
      record.guidance_score = result.score;
      record.tokens_sampled = result.tokens_sampled;
      record.rounds = result.rounds;
    } else if (method.kind == "token_beam") {
      const search::SearchResult result = search::token_beam_search(
          *rt.base, *scorer, prompt, method.beam_width, method.max_tokens,
          sampling);
      state = result.best;
      record.guidance_score = result.score;
      record.tokens_sampled = result.tokens_sampled;
      record.rounds = result.rounds;
    } else if (method.kind == "eft") {
      const search::SampleResult result =
          search::eft_decode(*rt.base, rt.pair_for(prompt), prompt,
                             method.beta, sampling, method.max_tokens);
      state = result.state;
      record.guidance_score = scorer->score(prompt, state);
      record.tokens_sampled = result.tokens_sampled;
      record.rounds = 1;
    } else if (method.kind == "base") {
      const search::SampleResult result =
          search::sample_base(*rt.base, prompt, sampling, method.max_tokens);
      state = result.state;
      record.guidance_score = scorer->score(prompt, state);
      record.tokens_sampled = result.tokens_sampled;
      record.rounds = 1;
    } else {
      throw Error("unknown method kind \"" + method.kind + "\"");
    }

    record.response_text = state.text;
    record.response_tokens = state.tokens;
    record.truncated = state.truncated;
    if (rt.gold) {
      record.gold_reward = (*rt.gold)(prompt.tokens, state.tokens);
    }
  } catch (const std::exception& e) {
    record.error = e.what();
  }
  if (timing) {
    record.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  }
  return record;
}

std::vector<RunRecord> run_experiment(const TaskSpec& task,
                                      const RunOptions& opts,
                                      std::ostream* out) {
  const ResolvedTask rt = resolve_task(task, opts);
  const int trials = std::max(1, task.trials);
  const int total = static_cast<int>(rt.prompts.size()) * trials;

  std::vector<RunRecord> records(total);

  // Reorder buffer: records flush to the stream in index order as soon as
  // every earlier record has landed.
  std::mutex write_mutex;
  std::map<int, const RunRecord*> pending;
  int next_to_write = 0;
  auto deliver = [&](int index) {
    if (!out) return;
    std::lock_guard<std::mutex> lock(write_mutex);
    pending[index] = &records[index];
    while (!pending.empty() && pending.begin()->first == next_to_write) {
      (*out) << record_line(*pending.begin()->second) << '\n';
      pending.erase(pending.begin());
      ++next_to_write;
    }
  };

  auto run_index = [&](int i) {
    const int prompt_index = i / trials;
    const int trial = i % trials;
    records[i] = run_one(rt, rt.prompts[prompt_index],
                         record_seed(task.seed, prompt_index, trial), i,
                         opts.timing);
    deliver(i);
  };

  if (opts.parallelism <= 1) {
    for (int i = 0; i < total; ++i) run_index(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    const int threads = std::min(opts.parallelism, total);
    for (int w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          const int i = next.fetch_add(1);
          if (i >= total) return;
          run_index(i);
        }
      });
    }
    for (auto& t : workers) t.join();
  }
  if (out) out->flush();
  return records;
}

search::GenState state_from_record(const RunRecord& record) {
  search::GenState state;
  state.tokens = record.response_tokens;
  state.text = record.response_text;
  state.truncated = record.truncated;
  state.token_count = static_cast<int>(record.response_tokens.size());
  state.saw_eos = !record.truncated;
  return state;
}

double recompute_score(const ResolvedTask& rt, const RunRecord& record) {
  const search::Prompt prompt{record.prompt_tokens, record.prompt_text};
  return rt.scorer_for(prompt)->score(prompt, state_from_record(record));
}

}  // namespace steer::harness
