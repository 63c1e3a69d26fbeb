#pragma once

/**
 * Built-in tabular instances the verify checks and tests run over.
 *
 * The weak-to-strong instance pairs a mildly a-averse order-1 reference
 * with its reward-tilted optimum (terminal reward: +1 per 'a') and a
 * distinct order-1 base whose expected gold reward sits strictly between
 * the two, so guided search has real headroom over plain sampling.
 *
 * The flat instance is an order-0 model over {a,b,c} whose EOS is masked
 * until the forced depth, giving exactly 27 equally-enumerable complete
 * sequences; it anchors the distribution-level tests.
 */

#include "steer/guidance/guidance.hpp"
#include "steer/harness/task.hpp"
#include "steer/tabular/soft_mdp.hpp"

namespace steer::harness {

tabular::TerminalReward make_reward(const RewardDesc& desc,
                                    const Vocab& vocab);

struct TabularInstance {
  tabular::TabularLMPtr reference;
  tabular::TabularLMPtr base;     // may equal reference
  tabular::TabularLMPtr pi_star;  // soft-VI optimum for (reference, reward)
  tabular::ValueTables tables;
  tabular::TerminalReward reward;
  double beta = 1.0;
  int horizon = 0;

  const Vocab& vocab() const { return reference->vocab(); }
  guidance::GuidancePair pair() const;
  tabular::SoftMDPSpec mdp(const TokenSeq& prompt = {}) const;
};

/// vocab {a,b,c,<eos>}, horizon 4, beta 1, reward +1 per 'a'.
TabularInstance make_w2s_instance();

/// 27-sequence order-0 instance (responses are exactly [t1,t2,t3,EOS]).
TabularInstance make_27seq_instance();

/// Seeded random instance for the duality sweeps: random order-1 rows,
/// a hash-based terminal reward in [-1, 1], the given beta.
TabularInstance make_random_instance(std::uint64_t seed, int vocab_size,
                                     int horizon, double beta);

}  // namespace steer::harness
