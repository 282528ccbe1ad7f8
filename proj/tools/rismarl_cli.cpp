// rismarl command-line interface.
//
//   rismarl run --config FILE [--out DIR] [--seed S] [--episodes E] [--steps T]
//               [--fuzzy-agents N] [--discrete-bits B] [--swap-tau-convention]
//   rismarl summarize RESULTS_CSV [--out FILE]
//   rismarl complexity [--config FILE] [--fuzzy-agents N]
//   rismarl selftest [--seed S]
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure,
// 3 selftest failure.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "rismarl/harness/config.hpp"
#include "rismarl/harness/experiment.hpp"
#include "rismarl/harness/selftest.hpp"
#include "rismarl/harness/summarize.hpp"
#include "rismarl/marl/complexity.hpp"

namespace {

using namespace rismarl;

constexpr int kUsage = 1;
constexpr int kRuntime = 2;
constexpr int kSelftest = 3;

harness::ExperimentSpec load_spec(const std::string& path, const harness::Overrides& o) {
  auto spec = harness::spec_from_key_values(harness::read_config_file(path));
  harness::apply_overrides(spec, o);
  return spec;
}

int cmd_run(const std::string& config, const harness::Overrides& o, bool quiet) {
  const auto spec = load_spec(config, o);
  spec.validate();
  const auto result = harness::run_experiment(spec, [&](const std::string& msg) {
    if (!quiet) std::cerr << msg << "\n";
  });
  for (const auto& f : result.files) std::cout << f << "\n";
  return 0;
}

int cmd_summarize(const std::string& input, const std::string& out) {
  const auto table = harness::read_csv_file(input);
  const std::string csv = harness::summary_csv(harness::summarize(table));
  if (out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << csv;
  }
  return 0;
}

int cmd_complexity(const std::string& config, std::optional<int> fuzzy_agents) {
  harness::ExperimentSpec spec;
  spec.system = SystemConfig::paper();
  spec.trainer = harness::paper_trainer_config();
  if (!config.empty()) spec = harness::spec_from_key_values(harness::read_config_file(config));
  if (fuzzy_agents) spec.trainer.fuzzy_agents = *fuzzy_agents;
  const auto e = marl::complexity_estimate(spec.system, spec.trainer);
  const auto& s = spec.system;
  std::printf("L=%d K=%d R=%d M=%d U=%d N=%d N_F=%d\n", s.num_aps, s.num_ues, s.num_ris, s.ap_antennas,
              s.ue_antennas, s.ris_elements, spec.trainer.fuzzy_agents);
  std::printf("q_se = %.10g\n", e.q_se);
  auto terms = [](const char* name, const marl::ComplexityTerms& t) {
    std::printf("%s: first = %.10g (actor %.10g + critic %.10g), second = %.10g (actor %.10g + linear %.10g + se %.10g)\n",
                name, t.first(), t.first_quadratic, t.first_critic, t.second(), t.second_quadratic, t.second_linear,
                t.second_se);
  };
  terms("maddpg", e.maddpg_terms);
  terms("fl_maddpg", e.fl_terms);
  std::printf("maddpg = %.10g\nfl_maddpg = %.10g\nratio = %.10g\n", e.maddpg, e.fl_maddpg, e.ratio);
  return 0;
}

int cmd_selftest(std::uint64_t seed) {
  bool ok = true;
  for (const auto& c : harness::run_selftest(seed)) {
    std::printf("%s %s (worst %.3g, tolerance %.3g)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.worst,
                c.tolerance);
    ok = ok && c.passed;
  }
  return ok ? 0 : kSelftest;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RIS-aided cell-free MIMO precoding with (fuzzy) multi-agent RL"};
  app.require_subcommand(1);

  std::string config, out;
  harness::Overrides o;
  std::uint64_t seed = 0;
  int episodes = 0, steps = 0, fuzzy = 0, bits = 0;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "run an experiment described by a config file");
  run->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory");
  auto* o_seed = run->add_option("--seed", seed, "single seed replacing the config's seed list");
  auto* o_ep = run->add_option("--episodes", episodes, "training episodes")->check(CLI::PositiveNumber);
  auto* o_steps = run->add_option("--steps", steps, "steps per episode")->check(CLI::PositiveNumber);
  auto* o_fuzzy = run->add_option("--fuzzy-agents", fuzzy, "number of fuzzy agents")->check(CLI::PositiveNumber);
  auto* o_bits = run->add_option("--discrete-bits", bits, "phase resolution for *_discrete methods")
                     ->check(CLI::NonNegativeNumber);
  run->add_flag("--swap-tau-convention", o.swap_tau_convention,
                "soft update target <- tau*online + (1-tau)*target");
  run->add_flag("--quiet", quiet, "no progress messages");

  std::string input, summary_out;
  auto* sum = app.add_subcommand("summarize", "aggregate results.csv across seeds");
  sum->add_option("results", input, "results.csv")->required()->check(CLI::ExistingFile);
  sum->add_option("--out", summary_out, "write the summary here instead of stdout");

  std::string cx_config;
  int cx_fuzzy = 0;
  auto* cx = app.add_subcommand("complexity", "evaluate the per-iteration complexity estimates");
  cx->add_option("--config", cx_config, "config file (default: paper profile)")->check(CLI::ExistingFile);
  auto* o_cx_fuzzy = cx->add_option("--fuzzy-agents", cx_fuzzy, "number of fuzzy agents")->check(CLI::PositiveNumber);

  std::uint64_t st_seed = 0;
  auto* st = app.add_subcommand("selftest", "run the oracle self-checks");
  st->add_option("--seed", st_seed, "seed of the random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*run) {
      if (!out.empty()) o.out = out;
      if (*o_seed) o.seed = seed;
      if (*o_ep) o.episodes = episodes;
      if (*o_steps) o.steps = steps;
      if (*o_fuzzy) o.fuzzy_agents = fuzzy;
      if (*o_bits) o.discrete_bits = bits;
      return cmd_run(config, o, quiet);
    }
    if (*sum) return cmd_summarize(input, summary_out);
    if (*cx) return cmd_complexity(cx_config, *o_cx_fuzzy ? std::optional<int>(cx_fuzzy) : std::nullopt);
    if (*st) return cmd_selftest(st_seed);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
