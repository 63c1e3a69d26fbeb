#pragma once

/**
 * Evaluators over enumerable tabular instances: exact expected reward by
 * enumeration, Monte Carlo estimates with standard errors, exact filtered
 * sequence distributions, and the induced-distribution KL estimate.
 */

#include <functional>
#include <map>

#include "steer/tabular/soft_mdp.hpp"

namespace steer::harness {

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
  int n = 0;
};

/// Sum over complete responses of P(y | prompt) * r(prompt, y) under the
/// policy's raw (unfiltered) distribution.
double expected_gold_reward_exact(const tabular::TabularLM& policy,
                                  const TokenSeq& prompt,
                                  const tabular::TerminalReward& reward,
                                  int horizon,
                                  std::size_t state_budget =
                                      tabular::kDefaultStateBudget);

/// Sample mean and standard error of `rollout_reward` over seeded trials;
/// trial i runs with seed hash(seed, i).
MeanStderr expected_gold_reward_mc(
    const std::function<double(std::uint64_t seed)>& rollout_reward,
    int trials, std::uint64_t seed);

/// Exact complete-sequence distribution induced by per-step filtered
/// sampling from the model (the distribution sample_base realizes).
std::map<TokenSeq, double> exact_sequence_distribution(
    const tabular::TabularLM& model, const TokenSeq& prompt,
    const SamplingParams& params, int horizon,
    std::size_t state_budget = tabular::kDefaultStateBudget);

/// Total variation distance between two distributions over the union of
/// their supports.
double total_variation(const std::map<TokenSeq, double>& p,
                       const std::map<TokenSeq, double>& q);

/// KL(empirical || exact) of a method's output distribution against the
/// base model's filtered sequence distribution, over `trials` seeded runs
/// (trial i uses seed hash(seed, i)). Cells in the base support that the
/// method never produced get an add-eps floor of 1/(10*trials) before the
/// empirical side renormalizes.
double estimate_induced_kl(
    const std::function<TokenSeq(std::uint64_t seed)>& run_method,
    const tabular::TabularLM& base, const TokenSeq& prompt,
    const SamplingParams& params, int horizon, int trials,
    std::uint64_t seed);

}  // namespace steer::harness
