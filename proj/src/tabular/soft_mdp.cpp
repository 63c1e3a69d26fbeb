#include "steer/tabular/soft_mdp.hpp"

#include <algorithm>
#include <cmath>

namespace steer::tabular {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Reference conditionals under the solver's horizon: identical to the
/// model's own rows except that EOS is forced at depth horizon-1. Every
/// route below (recursion, exhaustive Z, duality check) goes through this
/// one view, so shortening the horizon below the model's cap stays
/// self-consistent.
std::vector<double> ref_logprobs(const TabularLM& ref, const TokenSeq& prompt,
                                 const TokenSeq& prefix, int horizon) {
  LogitVector row = ref.next_token_logits(prompt, prefix);
  const int depth = static_cast<int>(prefix.size());
  if (depth == horizon - 1) {
    for (TokenId id = 0; id < ref.vocab().size(); ++id) {
      if (id != ref.vocab().eos()) row[id] = kNegInf;
    }
    if (!std::isfinite(row[ref.vocab().eos()])) row[ref.vocab().eos()] = 0.0;
  }
  return log_softmax(row);
}

double ref_sequence_logprob(const TabularLM& ref, const TokenSeq& prompt,
                            const TokenSeq& response, int horizon) {
  double total = 0.0;
  TokenSeq prefix;
  for (TokenId tok : response) {
    total += ref_logprobs(ref, prompt, prefix, horizon)[tok];
    prefix.push_back(tok);
  }
  return total;
}

void check_spec(const SoftMDPSpec& spec) {
  if (!spec.reference) throw Error("soft MDP spec has no reference model");
  if (spec.beta <= 0.0) throw Error("beta must be positive");
  if (spec.horizon < 1 || spec.horizon > spec.reference->horizon_cap()) {
    throw Error("horizon must lie in [1, reference horizon cap]");
  }
  if (!spec.reward.fn) throw Error("soft MDP spec has no reward");
}

/// Stable beta * logsumexp(q / beta) over entries that may be -inf.
double soft_max_over_actions(const std::vector<double>& q, double beta) {
  double m = kNegInf;
  for (double v : q) m = std::max(m, v);
  if (!std::isfinite(m)) return kNegInf;
  double sum = 0.0;
  for (double v : q) {
    if (std::isfinite(v)) sum += std::exp((v - m) / beta);
  }
  return m + beta * std::log(sum);
}

void enumerate_prefixes_at_depth(const Vocab& vocab, int depth,
                                 const std::function<void(TokenSeq&)>& visit) {
  TokenSeq prefix(depth, 0);
  std::vector<TokenId> alphabet;
  for (TokenId id = 0; id < vocab.size(); ++id) {
    if (id != vocab.eos()) alphabet.push_back(id);
  }
  std::function<void(int)> rec = [&](int pos) {
    if (pos == depth) {
      visit(prefix);
      return;
    }
    for (TokenId id : alphabet) {
      prefix[pos] = id;
      rec(pos + 1);
    }
  };
  rec(0);
}

}  // namespace

std::vector<TokenSeq> enumerate_complete_responses(const Vocab& vocab,
                                                   int horizon) {
  std::vector<TokenSeq> out;
  for (int d = 0; d < horizon; ++d) {
    enumerate_prefixes_at_depth(vocab, d, [&](TokenSeq& prefix) {
      TokenSeq y = prefix;
      y.push_back(vocab.eos());
      out.push_back(std::move(y));
    });
  }
  return out;
}

std::size_t soft_mdp_state_count(const Vocab& vocab, int horizon) {
  const std::size_t branching = static_cast<std::size_t>(vocab.size()) - 1;
  std::size_t count = 0, layer = 1;
  for (int d = 0; d < horizon; ++d) {
    count += layer;
    if (layer > kDefaultStateBudget * 16) return count;  // saturate
    layer *= branching;
  }
  return count;
}

ValueTables soft_value_iteration(const SoftMDPSpec& spec,
                                 std::size_t state_budget) {
  check_spec(spec);
  const TabularLM& ref = *spec.reference;
  const Vocab& vocab = ref.vocab();
  const int horizon = spec.horizon;
  const double beta = spec.beta;

  const std::size_t states = soft_mdp_state_count(vocab, horizon);
  if (states > state_budget) throw StateSpaceTooLarge(states, state_budget);

  ValueTables tables;

  // Backward induction over incomplete prefixes, deepest first.
  for (int depth = horizon - 1; depth >= 0; --depth) {
    enumerate_prefixes_at_depth(vocab, depth, [&](TokenSeq& prefix) {
      const std::vector<double> logp =
          ref_logprobs(ref, spec.prompt, prefix, horizon);
      std::vector<double> q(vocab.size(), kNegInf);
      for (TokenId a = 0; a < vocab.size(); ++a) {
        if (!std::isfinite(logp[a])) continue;
        if (a == vocab.eos()) {
          TokenSeq complete = prefix;
          complete.push_back(a);
          // Terminal reward; V of the post-EOS state is 0.
          q[a] = spec.reward(spec.prompt, complete) + beta * logp[a];
        } else if (depth + 1 < horizon) {
          TokenSeq next = prefix;
          next.push_back(a);
          q[a] = beta * logp[a] + tables.v.at(next);
        }
      }
      tables.v[prefix] = soft_max_over_actions(q, beta);
      for (TokenId a = 0; a < vocab.size(); ++a) {
        tables.q[{prefix, a}] = q[a];
      }
    });
  }

  // Independent route for log Z: logsumexp over every complete response of
  // log pi_ref(y) + r(y)/beta. This is the stored value; V(root) is the
  // recursion's answer and the two are cross-checked in tests.
  double m = kNegInf;
  std::vector<double> terms;
  for (const TokenSeq& y : enumerate_complete_responses(vocab, horizon)) {
    const double lp = ref_sequence_logprob(ref, spec.prompt, y, horizon);
    if (!std::isfinite(lp)) continue;
    terms.push_back(lp + spec.reward(spec.prompt, y) / beta);
    m = std::max(m, terms.back());
  }
  if (terms.empty()) throw Error("reference model has empty support");
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - m);
  tables.log_z = m + std::log(sum);

  return tables;
}

TabularLM optimal_policy(const ValueTables& tables, const SoftMDPSpec& spec) {
  check_spec(spec);
  const Vocab& vocab = spec.reference->vocab();
  const int order =
      static_cast<int>(spec.prompt.size()) + spec.horizon;  // full-sequence keys
  TabularLM policy(vocab, order, spec.horizon);

  for (const auto& [prefix, v] : tables.v) {
    LogitVector row(vocab.size(), kNegInf);
    for (TokenId a = 0; a < vocab.size(); ++a) {
      const double q = tables.q.at({prefix, a});
      if (std::isfinite(q)) row[a] = (q - v) / spec.beta;
    }
    TokenSeq context = spec.prompt;
    context.insert(context.end(), prefix.begin(), prefix.end());
    policy.set_row(context, std::move(row));
  }
  return policy;
}

double verify_duality(const SoftMDPSpec& spec, const ValueTables& tables,
                      const TabularLM& pi_star) {
  check_spec(spec);
  const Vocab& vocab = spec.reference->vocab();
  double worst = 0.0;
  for (const TokenSeq& y :
       enumerate_complete_responses(vocab, spec.horizon)) {
    const double lp_ref =
        ref_sequence_logprob(*spec.reference, spec.prompt, y, spec.horizon);
    if (!std::isfinite(lp_ref)) continue;  // outside reference support
    const double lp_star = pi_star.sequence_logprob(spec.prompt, y);
    const double err = spec.beta * (lp_star - lp_ref) +
                       spec.beta * tables.log_z - spec.reward(spec.prompt, y);
    worst = std::max(worst, std::abs(err));
  }
  return worst;
}

}  // namespace steer::tabular
