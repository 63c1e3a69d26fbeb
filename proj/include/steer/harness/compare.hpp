#pragma once

/**
 * Multi-method comparison over a shared prompt set: per-method mean gold
 * reward, mean guidance score, induced KL, and token budget, plus paired
 * one-sided bootstrap tests for the cbs-vs-base and cbs-vs-bon orderings.
 *
 * Budget fairness is enforced up front: comparing bon(N) against
 * cbs(W,K,*) with N != W*K is refused unless the caller sets the override
 * flag, and the report always says which it was.
 */

#include <span>

#include "steer/harness/evaluate.hpp"
#include "steer/harness/run.hpp"

namespace steer::harness {

struct MethodSummary {
  std::string label;
  MethodDesc method;
  MeanStderr gold;      // over records with gold reward
  MeanStderr guidance;  // over guidance scores
  double kl = 0.0;      // induced KL vs the base distribution
  int kl_trials = 0;
  double mean_tokens = 0.0;
  int records = 0;
  int errors = 0;
};

struct PairwiseTest {
  std::string a;  // higher-mean candidate
  std::string b;
  double delta = 0.0;        // mean(a) - mean(b) on gold reward
  double p_one_sided = 1.0;  // P(delta <= 0) under the paired bootstrap
};

struct ComparisonReport {
  std::string task;
  std::vector<MethodSummary> methods;
  std::vector<PairwiseTest> pairwise;
  bool fairness_override = false;
  std::vector<std::string> fairness_notes;
};

void to_json(nlohmann::json& j, const MethodSummary& v);
void from_json(const nlohmann::json& j, MethodSummary& v);
void to_json(nlohmann::json& j, const PairwiseTest& v);
void from_json(const nlohmann::json& j, PairwiseTest& v);
void to_json(nlohmann::json& j, const ComparisonReport& v);
void from_json(const nlohmann::json& j, ComparisonReport& v);

struct CompareOptions {
  int bootstrap_resamples = 10'000;
  bool fairness_override = false;
  int kl_trials = 0;  // 0 disables the KL column
  RunOptions run;
};

/// One-sided paired bootstrap: resamples record indices with replacement
/// and reports the fraction of resamples where mean(a) - mean(b) <= 0
/// (add-one smoothed). `a` and `b` must be paired by index.
double bootstrap_p_greater(std::span<const double> a,
                           std::span<const double> b, int resamples,
                           std::uint64_t seed);

/// Runs every method over the task's prompts/trials and assembles the
/// report. The task's own `method` field is ignored in favor of `methods`.
ComparisonReport compare_methods(const TaskSpec& task,
                                 const std::vector<MethodDesc>& methods,
                                 const CompareOptions& opts = {});

}  // namespace steer::harness
