#include "steer/core/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace steer {

namespace {

double max_finite(const LogitVector& logits) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : logits) {
    if (std::isfinite(v) && v > m) m = v;
  }
  return m;
}

}  // namespace

std::vector<double> log_softmax(const LogitVector& logits) {
  const double m = max_finite(logits);
  if (!std::isfinite(m)) {
    throw Error("logit vector has no finite entry");
  }
  double sum = 0.0;
  for (double v : logits) {
    if (std::isfinite(v)) sum += std::exp(v - m);
  }
  const double lse = m + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::isfinite(logits[i])
                 ? logits[i] - lse
                 : -std::numeric_limits<double>::infinity();
  }
  return out;
}

Distribution softmax(const LogitVector& logits) {
  const double m = max_finite(logits);
  if (!std::isfinite(m)) {
    throw Error("logit vector has no finite entry");
  }
  Distribution out(logits.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (std::isfinite(logits[i])) {
      out[i] = std::exp(logits[i] - m);
      sum += out[i];
    }
  }
  for (double& p : out) p /= sum;
  return out;
}

Distribution apply_sampling_filters(const LogitVector& logits,
                                    const SamplingParams& params) {
  if (params.temperature <= 0.0) throw Error("temperature must be positive");
  if (params.top_k < 1) throw Error("top_k must be >= 1");
  if (params.top_p <= 0.0 || params.top_p > 1.0) {
    throw Error("top_p must lie in (0, 1]");
  }

  LogitVector scaled(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    scaled[i] = std::isfinite(logits[i])
                    ? logits[i] / params.temperature
                    : -std::numeric_limits<double>::infinity();
  }
  const Distribution probs = softmax(scaled);

  // Indices by descending probability, ties to the lower index.
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return probs[a] > probs[b]; });

  std::size_t kept = std::min<std::size_t>(
      order.size(), static_cast<std::size_t>(params.top_k));

  // Nucleus truncation over the kept prefix: smallest prefix whose mass
  // (in pre-truncation probabilities) reaches top_p; if the kept entries
  // never reach it, keep them all.
  std::size_t selected = kept;
  double mass = 0.0;
  for (std::size_t i = 0; i < kept; ++i) {
    mass += probs[order[i]];
    if (mass >= params.top_p) {
      selected = i + 1;
      break;
    }
  }

  Distribution out(probs.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < selected; ++i) {
    if (probs[order[i]] <= 0.0) break;  // never admit zero-probability tokens
    out[order[i]] = probs[order[i]];
    total += probs[order[i]];
  }
  for (double& p : out) p /= total;
  return out;
}

TokenId draw(const Distribution& dist, DrawRng& rng) {
  const double u = rng.next_unit();
  double cum = 0.0;
  TokenId last_positive = -1;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0.0) continue;
    cum += dist[i];
    last_positive = static_cast<TokenId>(i);
    if (u < cum) return last_positive;
  }
  // Rounding left cum fractionally below 1; the draw lands on the top end.
  if (last_positive < 0) throw Error("draw from empty distribution");
  return last_positive;
}

namespace seeds {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t run_seed, std::uint64_t round,
                     std::uint64_t parent_slot, std::uint64_t sample_index) {
  std::uint64_t h = mix(run_seed);
  h = mix(h ^ round);
  h = mix(h ^ parent_slot);
  h = mix(h ^ sample_index);
  return h;
}

}  // namespace seeds

}  // namespace steer
