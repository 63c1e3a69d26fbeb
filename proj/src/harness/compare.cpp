#include "steer/harness/compare.hpp"

#include <cmath>

#include "steer/harness/evaluate.hpp"

namespace steer::harness {

using nlohmann::json;

void to_json(json& j, const MethodSummary& v) {
  j = json{{"label", v.label},
           {"method", v.method},
           {"gold", {{"mean", v.gold.mean}, {"stderr", v.gold.stderr_}, {"n", v.gold.n}}},
           {"guidance",
            {{"mean", v.guidance.mean}, {"stderr", v.guidance.stderr_}, {"n", v.guidance.n}}},
           {"kl", v.kl},
           {"kl_trials", v.kl_trials},
           {"mean_tokens", v.mean_tokens},
           {"records", v.records},
           {"errors", v.errors}};
}

void from_json(const json& j, MethodSummary& v) {
  v = MethodSummary{};
  j.at("label").get_to(v.label);
  j.at("method").get_to(v.method);
  v.gold = {j.at("gold").at("mean"), j.at("gold").at("stderr"),
            j.at("gold").at("n")};
  v.guidance = {j.at("guidance").at("mean"), j.at("guidance").at("stderr"),
                j.at("guidance").at("n")};
  j.at("kl").get_to(v.kl);
  j.at("kl_trials").get_to(v.kl_trials);
  j.at("mean_tokens").get_to(v.mean_tokens);
  j.at("records").get_to(v.records);
  j.at("errors").get_to(v.errors);
}

void to_json(json& j, const PairwiseTest& v) {
  j = json{{"a", v.a}, {"b", v.b}, {"delta", v.delta},
           {"p_one_sided", v.p_one_sided}};
}

void from_json(const json& j, PairwiseTest& v) {
  v = PairwiseTest{};
  j.at("a").get_to(v.a);
  j.at("b").get_to(v.b);
  j.at("delta").get_to(v.delta);
  j.at("p_one_sided").get_to(v.p_one_sided);
}

void to_json(json& j, const ComparisonReport& v) {
  j = json{{"task", v.task},
           {"methods", v.methods},
           {"pairwise", v.pairwise},
           {"fairness_override", v.fairness_override},
           {"fairness_notes", v.fairness_notes}};
}

void from_json(const json& j, ComparisonReport& v) {
  v = ComparisonReport{};
  j.at("task").get_to(v.task);
  j.at("methods").get_to(v.methods);
  j.at("pairwise").get_to(v.pairwise);
  j.at("fairness_override").get_to(v.fairness_override);
  j.at("fairness_notes").get_to(v.fairness_notes);
}

double bootstrap_p_greater(std::span<const double> a,
                           std::span<const double> b, int resamples,
                           std::uint64_t seed) {
  if (a.size() != b.size() || a.empty()) {
    throw Error("bootstrap needs paired, non-empty samples");
  }
  const std::size_t n = a.size();
  DrawRng rng(seeds::mix(seed ^ 0xb007ULL));
  double not_greater = 0.0;  // ties count half, so equal samples give ~0.5
  for (int r = 0; r < resamples; ++r) {
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t pick =
          static_cast<std::size_t>(rng.next_unit() * n);
      delta += a[pick] - b[pick];
    }
    if (delta < 0.0) {
      not_greater += 1.0;
    } else if (delta == 0.0) {
      not_greater += 0.5;
    }
  }
  return (not_greater + 1.0) / (resamples + 1.0);
}

ComparisonReport compare_methods(const TaskSpec& task,
                                 const std::vector<MethodDesc>& methods,
                                 const CompareOptions& opts) {
  ComparisonReport report;
  report.task = task.name;
  report.fairness_override = opts.fairness_override;

  // Budget fairness: bon(N) vs cbs(W,K,*) requires N = W*K.
  for (const MethodDesc& a : methods) {
    if (a.kind != "bon") continue;
    for (const MethodDesc& b : methods) {
      if (b.kind != "cbs") continue;
      if (a.n != b.beam_width * b.successors) {
        const std::string note = a.label() + " vs " + b.label() +
                                 " breaks the N = W*K budget match";
        if (!opts.fairness_override) {
          throw Error(note + " (set the override flag to compare anyway)");
        }
        report.fairness_notes.push_back(note);
      }
    }
  }

  struct PerMethod {
    MethodSummary summary;
    std::vector<double> gold;  // by record index (paired across methods)
  };
  std::vector<PerMethod> results;

  for (const MethodDesc& method : methods) {
    TaskSpec variant = task;
    variant.method = method;
    const std::vector<RunRecord> records =
        run_experiment(variant, opts.run, nullptr);

    PerMethod pm;
    pm.summary.label = method.label();
    pm.summary.method = method;
    pm.summary.records = static_cast<int>(records.size());

    double guidance_sum = 0.0, guidance_sq = 0.0;
    double gold_sum = 0.0, gold_sq = 0.0;
    double tokens_sum = 0.0;
    int gold_n = 0, guidance_n = 0;
    for (const RunRecord& record : records) {
      if (!record.error.empty()) {
        ++pm.summary.errors;
        continue;
      }
      guidance_sum += record.guidance_score;
      guidance_sq += record.guidance_score * record.guidance_score;
      ++guidance_n;
      tokens_sum += static_cast<double>(record.tokens_sampled);
      if (record.gold_reward) {
        pm.gold.push_back(*record.gold_reward);
        gold_sum += *record.gold_reward;
        gold_sq += *record.gold_reward * *record.gold_reward;
        ++gold_n;
      }
    }
    auto fold = [](double sum, double sq, int n) {
      MeanStderr out;
      out.n = n;
      if (n > 0) out.mean = sum / n;
      if (n > 1) {
        const double var = (sq - sum * sum / n) / (n - 1);
        out.stderr_ = std::sqrt(std::max(0.0, var) / n);
      }
      return out;
    };
    pm.summary.gold = fold(gold_sum, gold_sq, gold_n);
    pm.summary.guidance = fold(guidance_sum, guidance_sq, guidance_n);
    pm.summary.mean_tokens =
        guidance_n > 0 ? tokens_sum / guidance_n : 0.0;

    // Induced KL against the base distribution (enumerable bases only).
    if (opts.kl_trials > 0) {
      const ResolvedTask rt = resolve_task(variant, opts.run);
      if (rt.base_tabular && rt.prompts.size() == 1) {
        const search::Prompt& prompt = rt.prompts[0];
        pm.summary.kl = estimate_induced_kl(
            [&](std::uint64_t seed) {
              RunRecord r = run_one(rt, prompt, seed, 0, false);
              if (!r.error.empty()) throw Error(r.error);
              return r.response_tokens;
            },
            *rt.base_tabular, prompt.tokens, task.sampling,
            rt.base_tabular->horizon_cap(), opts.kl_trials,
            seeds::mix(task.seed ^ 0x1c1ULL));
        pm.summary.kl_trials = opts.kl_trials;
      }
    }

    results.push_back(std::move(pm));
  }

  // Paired orderings: every cbs entry against base and against bon.
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].summary.method.kind != "cbs") continue;
    for (std::size_t j = 0; j < results.size(); ++j) {
      const std::string& kind = results[j].summary.method.kind;
      if (kind != "base" && kind != "bon") continue;
      if (results[i].gold.size() != results[j].gold.size() ||
          results[i].gold.empty()) {
        continue;
      }
      PairwiseTest test;
      test.a = results[i].summary.label;
      test.b = results[j].summary.label;
      test.delta = results[i].summary.gold.mean - results[j].summary.gold.mean;
      test.p_one_sided =
          bootstrap_p_greater(results[i].gold, results[j].gold,
                              opts.bootstrap_resamples, task.seed);
      report.pairwise.push_back(test);
    }
  }

  for (PerMethod& pm : results) {
    report.methods.push_back(std::move(pm.summary));
  }
  return report;
}

}  // namespace steer::harness
