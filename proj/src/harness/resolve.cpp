#include "steer/harness/resolve.hpp"

#include <fstream>
#include <map>
#include <mutex>

#include "steer/harness/fixtures.hpp"
#include "steer/remote/adapters.hpp"
#include "steer/tabular/fixture_io.hpp"

namespace steer::harness {

namespace {

tabular::TabularLMPtr load_tabular(const ModelDesc& desc) {
  return std::make_shared<tabular::TabularLM>(
      tabular::load_fixture(desc.fixture));
}

remote::BackendPtr make_backend(const remote::EndpointConfig& endpoint,
                                const RunOptions& opts) {
  remote::BackendPtr backend =
      std::make_shared<remote::HttpCompletionClient>(endpoint);
  if (!opts.cache_dir.empty()) {
    backend = remote::cached(std::move(backend), opts.cache_dir);
  }
  return backend;
}

/// Per-prompt soft-VI guidance with a cache keyed by prompt tokens.
struct SoftViFactory {
  tabular::TabularLMPtr reference;
  tabular::TerminalReward reward;
  double beta;
  std::mutex mutex;
  std::map<TokenSeq, guidance::GuidancePair> cache;

  guidance::GuidancePair pair_for(const TokenSeq& prompt) {
    std::lock_guard<std::mutex> lock(mutex);
    if (auto it = cache.find(prompt); it != cache.end()) return it->second;
    tabular::SoftMDPSpec spec{reference, reward, beta, prompt,
                              reference->horizon_cap()};
    const tabular::ValueTables tables = tabular::soft_value_iteration(spec);
    auto pi_star = std::make_shared<tabular::TabularLM>(
        tabular::optimal_policy(tables, spec));
    auto [it, _] = cache.emplace(
        prompt, search::make_pair(std::move(pi_star), reference));
    return it->second;
  }
};

}  // namespace

ResolvedTask resolve_task(const TaskSpec& task, const RunOptions& opts) {
  ResolvedTask rt;
  rt.spec = task;

  // Base model.
  if (task.base.kind == "tabular") {
    rt.base_tabular = load_tabular(task.base);
    rt.base = std::make_shared<search::TabularBaseModel>(rt.base_tabular);
  } else if (task.base.kind == "remote") {
    rt.base = std::make_shared<remote::RemoteBaseModel>(
        make_backend(task.base.endpoint, opts));
  } else {
    throw Error("unknown base kind \"" + task.base.kind + "\"");
  }

  // Gold reward (tabular tasks only; responses live in the base vocab).
  if (task.gold_reward) {
    if (!rt.base_tabular) {
      throw Error("gold_reward requires a tabular base model");
    }
    rt.gold = make_reward(*task.gold_reward, rt.base_tabular->vocab());
  }

  // Guidance.
  if (task.guidance.kind == "pair" && task.guidance.tuned.kind == "remote") {
    if (task.guidance.untuned.kind != "remote") {
      throw Error("guidance pair must be all-remote or all-tabular");
    }
    rt.remote_guidance = true;
    auto pair = std::make_shared<remote::RemoteGuidancePair>(
        make_backend(task.guidance.tuned.endpoint, opts),
        make_backend(task.guidance.untuned.endpoint, opts));
    rt.scorer_for = [pair](const search::Prompt&) {
      return std::make_shared<remote::RemoteGuidanceScorer>(*pair);
    };
    rt.pair_for = [](const search::Prompt&) -> guidance::GuidancePair {
      throw ScoringUnsupported(
          "remote guidance has no in-process token pair");
    };
  } else if (task.guidance.kind == "pair") {
    auto pair = std::make_shared<guidance::GuidancePair>(search::make_pair(
        load_tabular(task.guidance.tuned), load_tabular(task.guidance.untuned)));
    auto base = rt.base;
    rt.scorer_for = [pair, base](const search::Prompt&) {
      return std::shared_ptr<search::StateScorer>(
          search::make_scorer(*pair, *base));
    };
    rt.pair_for = [pair](const search::Prompt&) { return *pair; };
  } else if (task.guidance.kind == "soft_vi") {
    auto reference = load_tabular(task.guidance.reference);
    auto factory = std::make_shared<SoftViFactory>();
    factory->reference = reference;
    factory->reward = make_reward(task.guidance.reward, reference->vocab());
    factory->beta = task.guidance.beta;
    auto base = rt.base;
    rt.scorer_for = [factory, base](const search::Prompt& prompt) {
      return std::shared_ptr<search::StateScorer>(
          search::make_scorer(factory->pair_for(prompt.tokens), *base));
    };
    rt.pair_for = [factory](const search::Prompt& prompt) {
      return factory->pair_for(prompt.tokens);
    };
  } else {
    throw Error("unknown guidance kind \"" + task.guidance.kind + "\"");
  }

  // Prompts: inline token sequences, a text file, or one empty prompt.
  for (const TokenSeq& tokens : task.inline_prompts) {
    if (!rt.base_tabular) {
      throw Error("inline token prompts require a tabular base model");
    }
    validate_token_seq(rt.base_tabular->vocab(), tokens);
    rt.prompts.push_back(
        {tokens, decode(rt.base_tabular->vocab(), tokens)});
  }
  if (!task.prompt_file.empty()) {
    std::ifstream in(task.prompt_file);
    if (!in) throw Error("cannot open prompt file: " + task.prompt_file);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      search::Prompt prompt;
      prompt.text = line;
      if (rt.base_tabular) {
        prompt.tokens = encode(rt.base_tabular->vocab(), line);
      }
      rt.prompts.push_back(std::move(prompt));
    }
  }
  if (rt.prompts.empty()) rt.prompts.push_back({});

  return rt;
}

}  // namespace steer::harness
