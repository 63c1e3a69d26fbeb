/**
 * steer: decoding-time alignment over tabular or remote language models.
 *
 *   steer verify   run the invariant suites over built-in fixtures
 *   steer run      execute one task (JSONL records per prompt/trial)
 *   steer compare  run several methods over one task, with significance
 *   steer oracle   print the exact value tables for a fixture
 */

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "steer/harness/compare.hpp"
#include "steer/harness/evaluate.hpp"
#include "steer/harness/run.hpp"
#include "steer/harness/verify.hpp"
#include "steer/tabular/fixture_io.hpp"

namespace {

using namespace steer;
using nlohmann::json;

struct GlobalFlags {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::string cache_dir;
  int parallelism = 1;
};

void add_globals(CLI::App* cmd, GlobalFlags& flags, bool needs_config) {
  auto* config =
      cmd->add_option("--config", flags.config, "task/compare document");
  if (needs_config) config->required();
  cmd->add_option("--seed", flags.seed, "override the run seed")
      ->each([&flags](const std::string&) { flags.seed_set = true; });
  cmd->add_option("--out", flags.out, "output path (default stdout)");
  cmd->add_option("--cache-dir", flags.cache_dir,
                  "disk cache for remote endpoints");
  cmd->add_option("--parallelism", flags.parallelism,
                  "concurrent prompts / chunk requests");
}

std::ostream& open_sink(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw Error("cannot open output path: " + path);
  return file;
}

int cmd_verify(const GlobalFlags& flags, int instances) {
  const auto checks =
      harness::run_verify(flags.seed_set ? flags.seed : 42, instances);
  bool all_pass = true;
  for (const auto& check : checks) {
    all_pass &= check.pass;
    std::printf("[%s] %-42s max_error=%.3e\n", check.pass ? "PASS" : "FAIL",
                check.name.c_str(), check.max_error);
  }
  std::printf("%zu checks, %s\n", checks.size(),
              all_pass ? "all passed" : "FAILURES PRESENT");
  return all_pass ? 0 : 1;
}

int cmd_run(const GlobalFlags& flags, bool timing) {
  harness::TaskSpec task = harness::load_task(flags.config);
  if (flags.seed_set) task.seed = flags.seed;
  harness::RunOptions opts;
  opts.parallelism = flags.parallelism;
  opts.cache_dir = flags.cache_dir;
  opts.timing = timing;
  std::ofstream file;
  std::ostream& out = open_sink(flags.out, file);
  const auto records = harness::run_experiment(task, opts, &out);
  int errors = 0;
  for (const auto& record : records) errors += record.error.empty() ? 0 : 1;
  std::fprintf(stderr, "%zu records, %d errors\n", records.size(), errors);
  return errors == 0 ? 0 : 2;
}

int cmd_compare(const GlobalFlags& flags) {
  std::ifstream in(flags.config);
  if (!in) throw Error("cannot open compare document: " + flags.config);
  const json doc = json::parse(in);

  harness::TaskSpec task = doc.at("task").get<harness::TaskSpec>();
  if (flags.seed_set) task.seed = flags.seed;
  const auto methods =
      doc.at("methods").get<std::vector<harness::MethodDesc>>();
  harness::CompareOptions opts;
  opts.bootstrap_resamples = doc.value("bootstrap_resamples", 10000);
  opts.fairness_override = doc.value("fairness_override", false);
  opts.kl_trials = doc.value("kl_trials", 0);
  opts.run.parallelism = flags.parallelism;
  opts.run.cache_dir = flags.cache_dir;

  const auto report = harness::compare_methods(task, methods, opts);
  std::ofstream file;
  std::ostream& out = open_sink(flags.out, file);
  out << json(report).dump(2) << '\n';
  return 0;
}

int cmd_oracle(const GlobalFlags& flags, const std::string& fixture,
               const std::string& reward_spec, double beta, int horizon,
               const std::string& prompt_text, bool full) {
  auto reference = std::make_shared<tabular::TabularLM>(
      tabular::load_fixture(fixture));

  harness::RewardDesc reward_desc;
  {
    std::istringstream iss(reward_spec);
    std::string field;
    std::getline(iss, reward_desc.kind, ':');
    if (std::getline(iss, field, ':')) reward_desc.symbol = field;
    if (std::getline(iss, field, ':')) reward_desc.value = std::stod(field);
  }
  tabular::SoftMDPSpec spec;
  spec.reference = reference;
  spec.reward = harness::make_reward(reward_desc, reference->vocab());
  spec.beta = beta;
  spec.prompt = encode(reference->vocab(), prompt_text);
  spec.horizon = horizon > 0 ? horizon : reference->horizon_cap();

  const auto tables = tabular::soft_value_iteration(spec);
  json out;
  out["fixture"] = fixture;
  out["beta"] = spec.beta;
  out["horizon"] = spec.horizon;
  out["prompt"] = prompt_text;
  out["log_z"] = tables.log_z;
  out["z"] = std::exp(tables.log_z);
  out["v_root"] = tables.v_root();
  out["v_root_minus_beta_log_z"] =
      tables.v_root() - spec.beta * tables.log_z;
  out["states"] = tables.v.size();
  if (full) {
    json values = json::object();
    for (const auto& [prefix, v] : tables.v) {
      values[decode(reference->vocab(), prefix)] = v;
    }
    out["v"] = values;
  }
  std::ofstream file;
  std::ostream& sink = open_sink(flags.out, file);
  sink << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decoding-time alignment engine"};
  app.require_subcommand(1);

  GlobalFlags flags;

  auto* verify = app.add_subcommand("verify", "run the invariant suites");
  int instances = 12;
  add_globals(verify, flags, false);
  verify->add_option("--instances", instances,
                     "random instances for the sweep checks");

  auto* run = app.add_subcommand("run", "execute one task");
  bool timing = false;
  add_globals(run, flags, true);
  run->add_flag("--timing", timing,
                "record wall time (breaks byte-exact reruns)");

  auto* compare = app.add_subcommand("compare", "run several methods");
  add_globals(compare, flags, true);

  auto* oracle = app.add_subcommand("oracle", "exact tables for a fixture");
  std::string fixture, reward_spec = "count_symbol:a", prompt_text;
  double beta = 1.0;
  int horizon = 0;
  bool full = false;
  add_globals(oracle, flags, false);
  oracle->add_option("--fixture", fixture, "reference model fixture")
      ->required();
  oracle->add_option("--reward", reward_spec, "kind:symbol[:value]");
  oracle->add_option("--beta", beta, "regularization strength");
  oracle->add_option("--horizon", horizon, "default: fixture horizon");
  oracle->add_option("--prompt", prompt_text, "prompt text");
  oracle->add_flag("--full", full, "dump the full value table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) return cmd_verify(flags, instances);
    if (run->parsed()) return cmd_run(flags, timing);
    if (compare->parsed()) return cmd_compare(flags);
    if (oracle->parsed()) {
      return cmd_oracle(flags, fixture, reward_spec, beta, horizon,
                        prompt_text, full);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "steer: %s\n", e.what());
    return 1;
  }
  return 0;
}
