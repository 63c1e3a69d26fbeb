#pragma once

/**
 * Sampling-distribution plumbing: logit vectors, temperature / top-k /
 * top-p filtering, and seeded inverse-CDF draws.
 *
 * Filter order is fixed: temperature first, then top-k (ties to the lower
 * index), then top-p over the surviving entries, then one final
 * renormalization. The argmax always survives, so filtering can never
 * empty the support.
 */

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "steer/core/vocab.hpp"

namespace steer {

/// One unnormalized natural-log score per vocabulary entry. Entries may be
/// -inf (masked); at least one entry must be finite.
using LogitVector = std::vector<double>;

/// Probabilities over vocabulary indices, summing to 1 within 1e-12.
using Distribution = std::vector<double>;

/// top_k value meaning "keep every token".
inline constexpr int kTopKAll = std::numeric_limits<int>::max();

struct SamplingParams {
  double temperature = 0.7;
  int top_k = 50;
  double top_p = 1.0;
  std::uint64_t seed = 0;
};

/// Deterministic unit-interval stream. All randomness in the library flows
/// through explicit seeds into this type; equal seeds give bit-identical
/// streams on every platform.
class DrawRng {
 public:
  explicit DrawRng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 gen_;
};

/// log softmax(x) with max subtraction; -inf entries stay -inf.
std::vector<double> log_softmax(const LogitVector& logits);

/// softmax(x); -inf entries get probability 0.
Distribution softmax(const LogitVector& logits);

/// Temperature, top-k, top-p, renormalize. See header comment for order
/// and tie rules. Output support is a subset of the finite-logit support.
Distribution apply_sampling_filters(const LogitVector& logits,
                                    const SamplingParams& params);

/// Inverse-CDF sample over indices in ascending order; advances `rng`.
TokenId draw(const Distribution& dist, DrawRng& rng);

namespace seeds {

/// SplitMix64 finalizer; used to fold components into stream seeds.
std::uint64_t mix(std::uint64_t x);

/// Per-slot stream seed: hash of (run_seed, round, parent_slot,
/// sample_index). Equal budgets give equal streams across search methods,
/// which is what makes the degenerate-case equivalences bit-exact.
std::uint64_t derive(std::uint64_t run_seed, std::uint64_t round,
                     std::uint64_t parent_slot, std::uint64_t sample_index);

}  // namespace seeds

}  // namespace steer
