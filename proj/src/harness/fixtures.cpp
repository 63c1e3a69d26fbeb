#include "steer/harness/fixtures.hpp"

#include <cmath>

#include "steer/search/adapters.hpp"

namespace steer::harness {

using tabular::TabularLM;
using tabular::TerminalReward;

TerminalReward make_reward(const RewardDesc& desc, const Vocab& vocab) {
  TokenId target = -1;
  if (desc.kind != "constant") {
    for (TokenId id = 0; id < vocab.size(); ++id) {
      if (vocab.symbol(id) == desc.symbol) target = id;
    }
    if (target < 0) {
      throw Error("reward symbol \"" + desc.symbol + "\" not in vocabulary");
    }
  }
  const double value = desc.value;
  if (desc.kind == "count_symbol") {
    return {[target, value](const TokenSeq&, const TokenSeq& response) {
      double total = 0.0;
      for (TokenId id : response) {
        if (id == target) total += value;
      }
      return total;
    }};
  }
  if (desc.kind == "contains_symbol") {
    return {[target, value](const TokenSeq&, const TokenSeq& response) {
      for (TokenId id : response) {
        if (id == target) return value;
      }
      return 0.0;
    }};
  }
  if (desc.kind == "constant") {
    return {[value](const TokenSeq&, const TokenSeq&) { return value; }};
  }
  throw Error("unknown reward kind \"" + desc.kind + "\"");
}

guidance::GuidancePair TabularInstance::pair() const {
  return search::make_pair(pi_star, reference);
}

tabular::SoftMDPSpec TabularInstance::mdp(const TokenSeq& prompt) const {
  return {reference, reward, beta, prompt, horizon};
}

namespace {

TabularInstance finish_instance(std::shared_ptr<TabularLM> reference,
                                std::shared_ptr<TabularLM> base,
                                TerminalReward reward, double beta,
                                int horizon) {
  TabularInstance inst;
  inst.reference = std::move(reference);
  inst.base = base ? std::move(base) : inst.reference;
  inst.reward = std::move(reward);
  inst.beta = beta;
  inst.horizon = horizon;
  inst.tables = tabular::soft_value_iteration(inst.mdp());
  inst.pi_star = std::make_shared<TabularLM>(
      tabular::optimal_policy(inst.tables, inst.mdp()));
  return inst;
}

}  // namespace

TabularInstance make_w2s_instance() {
  Vocab vocab({"a", "b", "c", "<eos>"}, 3);
  const int horizon = 4;

  auto reference = std::make_shared<TabularLM>(vocab, 1, horizon);
  reference->set_row({}, {-0.4, 0.3, 0.3, -0.5});
  reference->set_row({0}, {-0.5, 0.4, 0.3, -0.2});
  reference->set_row({1}, {-0.4, 0.2, 0.3, -0.1});
  reference->set_row({2}, {-0.4, 0.3, 0.1, 0.0});

  auto base = std::make_shared<TabularLM>(vocab, 1, horizon);
  base->set_row({}, {0.0, 0.1, 0.0, -0.5});
  base->set_row({0}, {0.0, 0.2, 0.1, -0.2});
  base->set_row({1}, {0.1, 0.0, 0.1, -0.3});
  base->set_row({2}, {0.0, 0.1, -0.1, -0.4});

  TerminalReward reward =
      make_reward(RewardDesc{"count_symbol", "a", 1.0}, vocab);
  return finish_instance(std::move(reference), std::move(base),
                         std::move(reward), 1.0, horizon);
}

TabularInstance make_27seq_instance() {
  Vocab vocab({"a", "b", "c", "<eos>"}, 3);
  const int horizon = 4;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  // EOS stays masked until the horizon forces it, so every complete
  // response is [t1, t2, t3, <eos>]: 27 cells, all reachable.
  auto reference = std::make_shared<TabularLM>(vocab, 0, horizon);
  reference->set_row({}, {0.3, 0.0, -0.3, kNegInf});

  TerminalReward reward =
      make_reward(RewardDesc{"count_symbol", "a", 1.0}, vocab);
  return finish_instance(std::move(reference), nullptr, std::move(reward),
                         1.0, horizon);
}

TabularInstance make_random_instance(std::uint64_t seed, int vocab_size,
                                     int horizon, double beta) {
  if (vocab_size < 2 || vocab_size > 27) {
    throw Error("random instance vocab size must lie in [2, 27]");
  }
  std::vector<std::string> symbols;
  for (int i = 0; i + 1 < vocab_size; ++i) {
    symbols.push_back(std::string(1, static_cast<char>('a' + i)));
  }
  symbols.push_back("<eos>");
  Vocab vocab(symbols, vocab_size - 1);

  // Logits in [-1.5, 1.5] from a seeded stream; order-1 rows for every
  // single-token context plus the empty one.
  DrawRng rng(seeds::mix(seed));
  auto row = [&] {
    LogitVector logits(vocab_size);
    for (double& v : logits) v = -1.5 + 3.0 * rng.next_unit();
    return logits;
  };
  auto reference = std::make_shared<TabularLM>(vocab, 1, horizon);
  reference->set_row({}, row());
  for (TokenId id = 0; id + 1 < vocab_size; ++id) {
    reference->set_row({id}, row());
  }

  // Deterministic per-sequence reward in [-1, 1] keyed by the tokens.
  const std::uint64_t reward_seed = seeds::mix(seed ^ 0x5eedull);
  TerminalReward reward{[reward_seed](const TokenSeq&,
                                      const TokenSeq& response) {
    std::uint64_t h = reward_seed;
    for (TokenId id : response) {
      h = seeds::mix(h ^ static_cast<std::uint64_t>(id + 1));
    }
    return -1.0 + 2.0 * (static_cast<double>(h >> 11) * 0x1.0p-53);
  }};

  return finish_instance(std::move(reference), nullptr, std::move(reward),
                         beta, horizon);
}

}  // namespace steer::harness
