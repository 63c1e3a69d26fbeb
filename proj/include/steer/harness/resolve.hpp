#pragma once

/**
 * Turns the declarative TaskSpec into runtime handles: base models,
 * guidance scorers, gold rewards, and the prompt list.
 *
 * soft_vi guidance depends on the prompt (the optimum is solved from the
 * prompt state), so guidance resolution is a per-prompt factory with a
 * cache behind it.
 */

#include <functional>
#include <memory>
#include <optional>

#include "steer/harness/task.hpp"
#include "steer/search/adapters.hpp"
#include "steer/search/search.hpp"
#include "steer/tabular/soft_mdp.hpp"

namespace steer::harness {

struct RunOptions {
  int parallelism = 1;
  bool timing = false;    // include wall_ms in records (off keeps reruns
                          // byte-identical on deterministic backends)
  std::string cache_dir;  // wrap remote endpoints in the disk cache
};

struct ResolvedTask {
  TaskSpec spec;
  std::shared_ptr<search::BaseModel> base;
  tabular::TabularLMPtr base_tabular;  // null when the base is remote
  std::optional<tabular::TerminalReward> gold;
  std::vector<search::Prompt> prompts;
  bool remote_guidance = false;

  /// Scorer for records and searches; cached per prompt for soft_vi.
  std::function<std::shared_ptr<search::StateScorer>(const search::Prompt&)>
      scorer_for;
  /// In-process guidance pair (eft and token-level paths). Throws
  /// ScoringUnsupported when the guidance side is remote.
  std::function<guidance::GuidancePair(const search::Prompt&)> pair_for;
};

ResolvedTask resolve_task(const TaskSpec& task, const RunOptions& opts = {});

}  // namespace steer::harness
