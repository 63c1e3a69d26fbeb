#pragma once

/**
 * Experiment execution: one RunRecord per (prompt, trial), streamed as
 * JSON lines in record order even when trials execute concurrently.
 */

#include <iosfwd>

#include "steer/harness/resolve.hpp"

namespace steer::harness {

/// Runs one prompt/seed through the task's method. Per-record failures
/// land in record.error instead of aborting the run.
RunRecord run_one(const ResolvedTask& rt, const search::Prompt& prompt,
                  std::uint64_t seed, int index, bool timing);

/// Executes the full task. Records stream to `out` (when given) as one
/// JSON object per line, in index order regardless of completion order.
/// Deterministic given the task seed for tabular backends with timing off.
std::vector<RunRecord> run_experiment(const TaskSpec& task,
                                      const RunOptions& opts = {},
                                      std::ostream* out = nullptr);

/// The record's response as a search state (for score re-verification).
search::GenState state_from_record(const RunRecord& record);

/// Recomputes the stored guidance score from the stored tokens/text.
double recompute_score(const ResolvedTask& rt, const RunRecord& record);

/// Seed for record `index` of a run; exposed so evaluators can reproduce
/// individual trials.
std::uint64_t record_seed(std::uint64_t task_seed, int prompt_index,
                          int trial);

}  // namespace steer::harness
