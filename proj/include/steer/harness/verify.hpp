#pragma once

/**
 * Invariant suite behind `steer verify` and the acceptance tests: the
 * reward/policy correspondence, bitwise telescoping, the value identity,
 * the degenerate-case search equivalences, and the per-step composition
 * identity. Every check reports its worst error.
 */

#include "steer/harness/fixtures.hpp"

namespace steer::harness {

struct CheckResult {
  std::string name;
  bool pass = false;
  double max_error = 0.0;
  std::string detail;
};

/// Correspondence, telescoping, value-identity, normalization and
/// partition cross-checks on one instance. `pi_star_override` swaps in a
/// different tuned model (a deliberately corrupted one fails loudly).
std::vector<CheckResult> verify_instance(
    const TabularInstance& instance,
    tabular::TabularLMPtr pi_star_override = nullptr);

/// Byte-exactness of bon vs single-beam infinite-chunk search and of
/// token beam vs exhaustive chunk search, on the built-in instances.
std::vector<CheckResult> verify_equivalences(std::uint64_t seed);

/// Per-step composition identity (beta = 1, base = untuned gives the
/// tuned rows) on the 27-sequence instance.
std::vector<CheckResult> verify_eft_identity();

/// The full built-in suite: random instances plus the two fixed ones,
/// then the equivalence and composition checks.
std::vector<CheckResult> run_verify(std::uint64_t seed, int random_instances = 12);

}  // namespace steer::harness
