#pragma once

// Experiment orchestration. Output directory layout:
//
//   config.cfg        effective settings in the config grammar
//   metadata.json     method labels and conventions
//   results.csv       experiment,method,sweep_variable,sweep_value,seed,
//                     realizations,mean_sum_se,std_sum_se
//   realizations.csv  experiment,method,sweep_variable,sweep_value,seed,
//                     realization,sum_se
//   trace.csv         algo,seed,episode,step,reward,sum_se,critic_loss,actor_obj
//                     (sweeps write one trace_<variable>_<value>.csv per cell)
//   membership.csv    algo,seed,sweep_value,episode,fuzzy_agent,physical_agent,
//                     mean_xi_bar
//   checkpoints/      <method>_seed<s>[_<variable><value>]/ agent<i>_{actor,critic}.json,
//                     fuzzy.json
//
// Every method of a (sweep value, seed) cell is evaluated on the same fresh
// realizations. Trained policies run noise-free for `eval_steps` steps and
// report the sum-SE after the last step.

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rismarl/baselines.hpp"
#include "rismarl/harness/config.hpp"
#include "rismarl/harness/csv.hpp"
#include "rismarl/marl/trainer.hpp"
#include "rismarl/serialization.hpp"

namespace rismarl::harness {

constexpr int kCsvSchemaVersion = 1;

struct Realization {
  Topology topo;
  ChannelSet ch;
};

inline std::vector<Realization> sample_realizations(const SystemConfig& sys, int count, Rng& rng) {
  std::vector<Realization> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Realization r;
    r.topo = sample_topology(sys, rng);
    r.ch = sample_channels(sys, r.topo, rng);
    out.push_back(std::move(r));
  }
  return out;
}

// Sum-SE of one centralized method on one realization.
inline double evaluate_baseline(const std::string& method, const Realization& r, const SystemConfig& sys,
                                const ExperimentSpec& spec, Rng& phase_rng) {
  using namespace baselines;
  const auto unit = PhaseShiftConfig::unit(sys.num_ris, sys.ris_elements);
  if (method == "mmse" || method == "zf" || method == "mrt") {
    const auto agg = aggregate_channel(r.ch, unit);
    if (method == "mmse") return sum_se(agg, mmse_precoder(agg, sys.max_power, sys.noise_power), sys.noise_power);
    if (method == "zf") return sum_se(agg, zf_precoder(agg, sys.max_power), sys.noise_power);
    return sum_se(agg, mrt_precoder(agg, sys.max_power), sys.noise_power);
  }
  if (method == "random_phase") {
    const auto agg = aggregate_channel(r.ch, random_phases(sys, phase_rng));
    return sum_se(agg, mmse_precoder(agg, sys.max_power, sys.noise_power), sys.noise_power);
  }
  const auto ao = ao_optimize(r.ch, sys, spec.ao_iters, spec.ao_grid);
  if (method == "ao_grid") return sum_se(r.ch, ao.phases, ao.precoders, sys.noise_power);
  if (method == "ao_grid_discrete") {
    const auto agg = aggregate_channel(r.ch, quantize_phases(ao.phases, spec.trainer.discrete_bits));
    return sum_se(agg, mmse_precoder(agg, sys.max_power, sys.noise_power), sys.noise_power);
  }
  throw ConfigError("unknown baseline '" + method + "'");
}

struct ResultRow {
  std::string method;
  double sweep_value = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> per_realization;
  double mean = 0.0;
  double std = 0.0;
};

struct ExperimentOutput {
  std::vector<std::string> files;
  std::vector<ResultRow> results;
};

inline std::pair<double, double> mean_and_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

inline void save_checkpoint(const std::filesystem::path& dir, const marl::Trainer& tr) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < tr.agents().size(); ++i) {
    io::write_json((dir / ("agent" + std::to_string(i) + "_actor.json")).string(), io::to_json(tr.agents()[i].actor));
    io::write_json((dir / ("agent" + std::to_string(i) + "_critic.json")).string(), io::to_json(tr.agents()[i].critic));
  }
  if (tr.algorithm() == marl::Algorithm::fl_maddpg)
    io::write_json((dir / "fuzzy.json").string(), io::to_json(tr.fuzzy_map()));
}

inline std::string cell_suffix(const ExperimentSpec& spec, double value) {
  return spec.variable().empty() ? "" : "_" + spec.variable() + "_" + fmt(value);
}

inline io::json run_metadata(const ExperimentSpec& spec) {
  return {{"format", "rismarl-run"},
          {"version", 1},
          {"csv_schema_version", kCsvSchemaVersion},
          {"experiment", to_string(spec.id)},
          {"sweep_variable", spec.variable()},
          {"methods", spec.methods},
          {"power_normalization",
           "mmse/zf/mrt: common scaling so the most loaded AP uses its full budget, then per-AP projection; "
           "learned precoders: per-AP projection of the decoded action"},
          {"classical_phases", "mmse/zf/mrt use unit RIS phases; random_phase uses uniform phases with MMSE"},
          {"ao_grid",
           "stand-in alternating optimization: MMSE precoding with grid coordinate descent over RIS elements"},
          {"ao_grid_discrete", "ao_grid phases quantized to discrete_bits bits, then MMSE precoding"},
          {"evaluation", "sum-SE after eval_steps noise-free policy steps, per fresh realization"}};
}

using Logger = std::function<void(const std::string&)>;

inline ExperimentOutput run_experiment(const ExperimentSpec& spec, const Logger& log = {}) {
  spec.validate();
  namespace fs = std::filesystem;
  const fs::path out(spec.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw std::runtime_error("cannot create output directory " + spec.out_dir);

  ExperimentOutput result;
  auto record = [&](const fs::path& p) { result.files.push_back(p.string()); };
  {
    std::ofstream cfg(out / "config.cfg");
    if (!cfg) throw std::runtime_error("cannot write " + (out / "config.cfg").string());
    cfg << describe(spec);
    record(out / "config.cfg");
  }
  io::write_json((out / "metadata.json").string(), run_metadata(spec));
  record(out / "metadata.json");

  const std::string exp = to_string(spec.id);
  const std::string var = spec.variable();
  CsvWriter results((out / "results.csv").string(), {"experiment", "method", "sweep_variable", "sweep_value", "seed",
                                                      "realizations", "mean_sum_se", "std_sum_se"});
  record(out / "results.csv");
  CsvWriter reals((out / "realizations.csv").string(),
                  {"experiment", "method", "sweep_variable", "sweep_value", "seed", "realization", "sum_se"});
  record(out / "realizations.csv");
  bool any_fuzzy = false, any_trained = false;
  for (const auto& m : spec.methods) {
    any_fuzzy = any_fuzzy || m.rfind("fl_maddpg", 0) == 0;
    any_trained = any_trained || is_trained_method(m) || (spec.id == ExperimentId::convergence && m == "ao_grid");
  }
  std::optional<CsvWriter> membership;
  if (any_fuzzy) {
    membership.emplace((out / "membership.csv").string(), std::vector<std::string>{"algo", "seed", "sweep_value",
                                                                                  "episode", "fuzzy_agent",
                                                                                  "physical_agent", "mean_xi_bar"});
    record(out / "membership.csv");
  }
  const std::vector<std::string> trace_header{"algo", "seed", "episode", "step", "reward", "sum_se", "critic_loss",
                                              "actor_obj"};

  for (double value : spec.sweep_values) {
    const SystemConfig sys = spec.cell_system(value);
    std::optional<CsvWriter> trace;
    if (any_trained) {
      const fs::path p = out / (var.empty() ? "trace.csv" : "trace" + cell_suffix(spec, value) + ".csv");
      trace.emplace(p.string(), trace_header);
      record(p);
    }
    for (std::uint64_t seed : spec.seeds) {
      Rng eval_rng = make_rng(seed, 100);
      Rng phase_rng = make_rng(seed, 101);
      const auto realizations = sample_realizations(sys, spec.eval_realizations, eval_rng);
      for (const auto& method : spec.methods) {
        if (log) log(exp + " " + (var.empty() ? "" : var + "=" + fmt(value) + " ") + "seed " + std::to_string(seed) +
                     ": " + method);
        ResultRow row;
        row.method = method;
        row.sweep_value = value;
        row.seed = seed;
        if (is_trained_method(method)) {
          marl::TrainerConfig tc = spec.trainer;
          if (!is_discrete_method(method)) tc.discrete_bits = 0;
          const auto algo = method.rfind("fl_maddpg", 0) == 0 ? marl::Algorithm::fl_maddpg : marl::Algorithm::maddpg;
          marl::Trainer tr(algo, sys, tc, seed);
          const auto rows = tr.train();
          for (const auto& t : rows)
            trace->row({method, std::to_string(seed), std::to_string(t.episode), std::to_string(t.step),
                        fmt(t.reward), fmt(t.sum_se), fmt(t.critic_loss), fmt(t.actor_obj)});
          if (membership)
            for (const auto& m : tr.membership_log())
              for (Eigen::Index i = 0; i < m.mean_xi_bar.rows(); ++i)
                for (Eigen::Index p = 0; p < m.mean_xi_bar.cols(); ++p)
                  membership->row({method, std::to_string(seed), fmt(value), std::to_string(m.episode),
                                   std::to_string(i), std::to_string(p), fmt(m.mean_xi_bar(i, p))});
          if (spec.checkpoints)
            save_checkpoint(out / "checkpoints" / (method + "_seed" + std::to_string(seed) + cell_suffix(spec, value)),
                            tr);
          for (const auto& r : realizations) row.per_realization.push_back(tr.rollout(r.topo, r.ch, spec.rollout_steps()).back());
        } else {
          for (const auto& r : realizations) row.per_realization.push_back(evaluate_baseline(method, r, sys, spec, phase_rng));
          if (spec.id == ExperimentId::convergence && method == "ao_grid") {
            const auto ao = baselines::ao_optimize(realizations.front().ch, sys, spec.ao_iters, spec.ao_grid);
            for (std::size_t i = 0; i < ao.trace.size(); ++i)
              trace->row({method, std::to_string(seed), "0", std::to_string(i), fmt(ao.trace[i]), fmt(ao.trace[i]),
                          "0", "0"});
          }
        }
        for (std::size_t i = 0; i < row.per_realization.size(); ++i) {
          const double se = row.per_realization[i];
          if (!std::isfinite(se) || se < 0.0)
            throw NumericalError(method + ": invalid sum-SE " + fmt(se) + " on realization " + std::to_string(i));
          reals.row({exp, method, var, fmt(value), std::to_string(seed), std::to_string(i), fmt(se)});
        }
        std::tie(row.mean, row.std) = mean_and_std(row.per_realization);
        results.row({exp, method, var, fmt(value), std::to_string(seed), std::to_string(row.per_realization.size()),
                     fmt(row.mean), fmt(row.std)});
        result.results.push_back(std::move(row));
      }
    }
  }
  return result;
}

}  // namespace rismarl::harness
