#include "steer/harness/evaluate.hpp"

#include <cmath>

namespace steer::harness {

using tabular::TabularLM;

double expected_gold_reward_exact(const TabularLM& policy,
                                  const TokenSeq& prompt,
                                  const tabular::TerminalReward& reward,
                                  int horizon, std::size_t state_budget) {
  const std::size_t states =
      tabular::soft_mdp_state_count(policy.vocab(), horizon);
  if (states > state_budget) throw StateSpaceTooLarge(states, state_budget);

  double total = 0.0;
  for (const TokenSeq& y :
       tabular::enumerate_complete_responses(policy.vocab(), horizon)) {
    const double lp = policy.sequence_logprob(prompt, y);
    if (!std::isfinite(lp)) continue;
    total += std::exp(lp) * reward(prompt, y);
  }
  return total;
}

MeanStderr expected_gold_reward_mc(
    const std::function<double(std::uint64_t)>& rollout_reward, int trials,
    std::uint64_t seed) {
  if (trials < 1) throw Error("Monte Carlo needs at least one trial");
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < trials; ++i) {
    const double r = rollout_reward(seeds::derive(seed, 0, 0, i));
    sum += r;
    sum_sq += r * r;
  }
  MeanStderr out;
  out.n = trials;
  out.mean = sum / trials;
  if (trials > 1) {
    const double var = (sum_sq - sum * sum / trials) / (trials - 1);
    out.stderr_ = std::sqrt(std::max(0.0, var) / trials);
  }
  return out;
}

std::map<TokenSeq, double> exact_sequence_distribution(
    const TabularLM& model, const TokenSeq& prompt,
    const SamplingParams& params, int horizon, std::size_t state_budget) {
  const std::size_t states =
      tabular::soft_mdp_state_count(model.vocab(), horizon);
  if (states > state_budget) throw StateSpaceTooLarge(states, state_budget);

  std::map<TokenSeq, double> dist;
  for (const TokenSeq& y :
       tabular::enumerate_complete_responses(model.vocab(), horizon)) {
    double p = 1.0;
    TokenSeq prefix;
    for (TokenId tok : y) {
      const Distribution step = apply_sampling_filters(
          model.next_token_logprobs(prompt, prefix), params);
      p *= step[tok];
      if (p == 0.0) break;
      prefix.push_back(tok);
    }
    if (p > 0.0) dist[y] = p;
  }
  return dist;
}

double total_variation(const std::map<TokenSeq, double>& p,
                       const std::map<TokenSeq, double>& q) {
  double sum = 0.0;
  for (const auto& [key, pv] : p) {
    const auto it = q.find(key);
    sum += std::abs(pv - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [key, qv] : q) {
    if (!p.contains(key)) sum += qv;
  }
  return 0.5 * sum;
}

double estimate_induced_kl(
    const std::function<TokenSeq(std::uint64_t)>& run_method,
    const TabularLM& base, const TokenSeq& prompt,
    const SamplingParams& params, int horizon, int trials,
    std::uint64_t seed) {
  if (trials < 1) throw Error("KL estimate needs at least one trial");
  const std::map<TokenSeq, double> exact =
      exact_sequence_distribution(base, prompt, params, horizon);

  std::map<TokenSeq, double> counts;
  for (int i = 0; i < trials; ++i) {
    const TokenSeq y = run_method(seeds::derive(seed, 0, 0, i));
    if (!exact.contains(y)) {
      throw Error("method produced a sequence outside the base support");
    }
    counts[y] += 1.0;
  }

  // Empirical cells, with the add-eps floor on empty support cells, then
  // renormalized.
  const double eps = 1.0 / (10.0 * trials);
  std::map<TokenSeq, double> empirical;
  double total = 0.0;
  for (const auto& [y, p] : exact) {
    const auto it = counts.find(y);
    const double c = (it == counts.end()) ? eps : it->second;
    empirical[y] = c;
    total += c;
  }
  double kl = 0.0;
  for (const auto& [y, c] : empirical) {
    const double p_hat = c / total;
    kl += p_hat * std::log(p_hat / exact.at(y));
  }
  return kl;
}

}  // namespace steer::harness
