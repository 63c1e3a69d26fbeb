#pragma once

/**
 * Exact solver for the entropy-regularized token MDP.
 *
 * States are (prompt, prefix) pairs keyed by the full response prefix;
 * actions are next tokens; the dynamics append the action; the reward is
 * terminal, paid when the action is EOS. Backward induction computes
 *
 *   Q(s,a) = r(s,a) + beta * log pi_ref(a|s) + V(append(s,a))
 *   V(s)   = beta * logsumexp_a(Q(s,a) / beta)
 *
 * with V of post-EOS states fixed at 0. The partition normalizer
 * Z = sum_y pi_ref(y) * exp(r(y)/beta) is computed by a second,
 * independent route (exhaustive enumeration of complete responses) and is
 * the stored value; V(root) = beta*log Z is a cross-check, not the source.
 *
 * The tilted optimum pi*(a|s) = exp((Q-V)/beta) materializes as a plain
 * TabularLM keyed by full sequences, so it plugs into everything else.
 */

#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "steer/tabular/tabular_lm.hpp"

namespace steer::tabular {

/// Terminal reward over complete responses. Must be finite for every
/// complete response up to the horizon cap.
struct TerminalReward {
  std::function<double(const TokenSeq& prompt, const TokenSeq& response)> fn;

  double operator()(const TokenSeq& prompt, const TokenSeq& response) const {
    return fn(prompt, response);
  }
};

struct SoftMDPSpec {
  TabularLMPtr reference;  // pi_ref
  TerminalReward reward;
  double beta = 1.0;
  TokenSeq prompt;
  int horizon = 1;  // <= reference->horizon_cap()
};

struct ValueTables {
  /// V* keyed by response prefix (the prompt is fixed per SoftMDPSpec).
  std::map<TokenSeq, double> v;
  /// Q* keyed by (prefix, action); -inf where pi_ref gives the action
  /// probability zero.
  std::map<std::pair<TokenSeq, TokenId>, double> q;
  /// log Z from the exhaustive-sum route.
  double log_z = 0.0;

  double v_root() const { return v.at({}); }
};

/// All complete responses of the horizon-capped MDP: d non-EOS tokens
/// followed by EOS, for every d in [0, horizon).
std::vector<TokenSeq> enumerate_complete_responses(const Vocab& vocab,
                                                   int horizon);

/// Number of incomplete prefixes the solver would visit; used for the
/// enumeration budget check.
std::size_t soft_mdp_state_count(const Vocab& vocab, int horizon);

inline constexpr std::size_t kDefaultStateBudget = 1'000'000;

/// Backward induction plus the independent exhaustive log Z. Throws
/// StateSpaceTooLarge when the prefix count exceeds `state_budget`.
ValueTables soft_value_iteration(const SoftMDPSpec& spec,
                                 std::size_t state_budget =
                                     kDefaultStateBudget);

/// The optimal policy as a TabularLM whose context covers the whole
/// sequence (rows are exact log-probabilities; they normalize within 1e-9).
TabularLM optimal_policy(const ValueTables& tables, const SoftMDPSpec& spec);

/// Max over all complete y of |beta*(log pi*(y) - log pi_ref(y)) +
/// beta*log Z - r(y)|; the reward<->policy correspondence check.
double verify_duality(const SoftMDPSpec& spec, const ValueTables& tables,
                      const TabularLM& pi_star);

}  // namespace steer::tabular
