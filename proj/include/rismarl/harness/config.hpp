#pragma once

// Flat experiment configuration.
//
//   # comment
//   key = value          one entry per line; '#' starts a comment anywhere
//   seeds = 0, 1, 2      lists are comma separated
//
// `profile` (desk | paper) selects the defaults every other key overrides and
// may appear anywhere in the file. Keys:
//
//   experiment           convergence | antennas_sweep | ris_count_sweep |
//                        ris_elements_sweep | baselines_table
//   sweep_values         list; defaults depend on the experiment
//   seeds                list of distinct non-negative integers
//   methods              list of fl_maddpg, maddpg, ao_grid, mmse, zf, mrt,
//                        random_phase; a "_discrete" suffix on fl_maddpg,
//                        maddpg or ao_grid uses discrete_bits-bit phases
//   eval_realizations    fresh realizations per evaluation (>= 100)
//   eval_steps           rollout length of a frozen policy (default: steps)
//   ao_iters, ao_grid    alternating-optimization rounds and angle grid size
//   checkpoints          true | false
//   num_aps num_ues num_ris ap_antennas ue_antennas ris_elements
//   max_power_dbm noise_power_dbm area_side path_loss_intercept_db
//   path_loss_slope min_distance
//   episodes steps fuzzy_agents gamma_precoder gamma_phase tau_precoder
//   tau_phase swap_tau_convention batch buffer_precoder buffer_phase noise_std
//   noise_decay lr_actor lr_critic hidden_precoder hidden_phase discrete_bits
//   standardize_states reward_scale divergence_limit updates_per_step
//   actor_preact_penalty output_init redeploy_each_episode

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rismarl/marl/trainer.hpp"
#include "rismarl/system_model.hpp"

namespace rismarl::harness {

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline KeyValues parse_key_values(std::istream& in, const std::string& source = "config") {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, value).second)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return kv;
}

inline KeyValues parse_key_values(const std::string& text) {
  std::istringstream in(text);
  return parse_key_values(in);
}

inline KeyValues read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  return parse_key_values(f, path);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  return d;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  return i;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: '" + key + "' expects true or false, got '" + v + "'");
}

enum class ExperimentId { convergence, antennas_sweep, ris_count_sweep, ris_elements_sweep, baselines_table };

inline std::string to_string(ExperimentId e) {
  switch (e) {
    case ExperimentId::convergence: return "convergence";
    case ExperimentId::antennas_sweep: return "antennas_sweep";
    case ExperimentId::ris_count_sweep: return "ris_count_sweep";
    case ExperimentId::ris_elements_sweep: return "ris_elements_sweep";
    case ExperimentId::baselines_table: return "baselines_table";
  }
  return "";
}

inline ExperimentId experiment_from_string(const std::string& s) {
  for (auto e : {ExperimentId::convergence, ExperimentId::antennas_sweep, ExperimentId::ris_count_sweep,
                 ExperimentId::ris_elements_sweep, ExperimentId::baselines_table})
    if (to_string(e) == s) return e;
  throw ConfigError("unknown experiment '" + s + "'");
}

// Swept SystemConfig field, empty for single-cell experiments.
inline std::string sweep_variable(ExperimentId e) {
  switch (e) {
    case ExperimentId::antennas_sweep: return "ap_antennas";
    case ExperimentId::ris_count_sweep: return "num_ris";
    case ExperimentId::ris_elements_sweep: return "ris_elements";
    default: return "";
  }
}

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"fl_maddpg",          "maddpg",         "ao_grid",
                                          "mmse",               "zf",             "mrt",
                                          "random_phase",       "fl_maddpg_discrete", "maddpg_discrete",
                                          "ao_grid_discrete"};
  return m;
}

inline bool is_trained_method(const std::string& m) { return m.rfind("fl_maddpg", 0) == 0 || m.rfind("maddpg", 0) == 0; }
inline bool is_discrete_method(const std::string& m) {
  return m.size() > 9 && m.compare(m.size() - 9, 9, "_discrete") == 0;
}

// Defaults of the CI-scale profile.
inline marl::TrainerConfig desk_trainer_config() {
  marl::TrainerConfig t;
  t.episodes = 200;
  t.steps = 20;
  t.fuzzy_agents = 1;
  // with the retaining convention the target tracks the online critic and
  // the discounted TD targets run away on this profile
  t.swap_tau_convention = true;
  return t;
}

inline marl::TrainerConfig paper_trainer_config() {
  marl::TrainerConfig t;
  t.episodes = 200;
  t.steps = 100;
  t.fuzzy_agents = 2;
  return t;
}

struct ExperimentSpec {
  ExperimentId id = ExperimentId::convergence;
  std::string profile = "desk";
  SystemConfig system = SystemConfig::desk();
  marl::TrainerConfig trainer = desk_trainer_config();
  std::vector<double> sweep_values;
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::string> methods;
  int eval_realizations = 100;
  int eval_steps = 0;  // 0: trainer steps
  int ao_iters = 3;
  int ao_grid = 8;
  bool checkpoints = false;
  std::string out_dir = "out";

  std::string variable() const { return sweep_variable(id); }
  int rollout_steps() const { return eval_steps > 0 ? eval_steps : trainer.steps; }

  // System configuration of one sweep cell.
  SystemConfig cell_system(double value) const {
    SystemConfig c = system;
    const int v = static_cast<int>(value);
    switch (id) {
      case ExperimentId::antennas_sweep: c.ap_antennas = v; break;
      case ExperimentId::ris_count_sweep: c.num_ris = v; break;
      case ExperimentId::ris_elements_sweep: c.ris_elements = v; break;
      default: break;
    }
    return c;
  }

  void validate() const {
    system.validate();
    trainer.validate();
    if (sweep_values.empty()) throw ConfigError("experiment: sweep values must be nonempty");
    if (!variable().empty())
      for (double v : sweep_values) {
        if (v != static_cast<int>(v) || v < (id == ExperimentId::ris_count_sweep ? 0 : 1))
          throw ConfigError("experiment: sweep value " + std::to_string(v) + " is not a valid " + variable());
        cell_system(v).validate();
      }
    if (seeds.empty()) throw ConfigError("experiment: need at least one seed");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
      throw ConfigError("experiment: seeds must be distinct");
    if (methods.empty()) throw ConfigError("experiment: need at least one method");
    for (const auto& m : methods) {
      if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end())
        throw ConfigError("experiment: unknown method '" + m + "'");
      if (is_discrete_method(m) && trainer.discrete_bits < 1)
        throw ConfigError("experiment: method '" + m + "' needs discrete_bits >= 1");
    }
    if (eval_realizations < 100) throw ConfigError("experiment: eval_realizations must be >= 100");
    if (eval_steps < 0) throw ConfigError("experiment: eval_steps must be >= 0");
    if (ao_iters < 1 || ao_grid < 2) throw ConfigError("experiment: need ao_iters >= 1 and ao_grid >= 2");
    if (system.ue_antennas != 1) throw ConfigError("experiment: only U = 1 is supported");
  }
};

inline std::vector<double> default_sweep_values(ExperimentId id) {
  switch (id) {
    case ExperimentId::antennas_sweep: return {2, 4, 8};
    case ExperimentId::ris_count_sweep: return {1, 2, 3, 4};
    case ExperimentId::ris_elements_sweep: return {4, 8, 16};
    default: return {0};
  }
}

inline std::vector<std::string> default_methods(ExperimentId id) {
  if (id == ExperimentId::convergence) return {"fl_maddpg", "maddpg", "ao_grid"};
  return {"fl_maddpg", "maddpg", "ao_grid", "mmse", "zf", "mrt", "random_phase"};
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& s : split_list(v)) out.push_back(static_cast<int>(parse_int(key, s)));
  if (out.empty()) throw ConfigError("config: '" + key + "' expects a nonempty list");
  return out;
}

inline ExperimentSpec spec_from_key_values(const KeyValues& kv) {
  ExperimentSpec spec;
  if (auto it = kv.find("profile"); it != kv.end()) {
    if (it->second == "desk") {
      spec.system = SystemConfig::desk();
      spec.trainer = desk_trainer_config();
    } else if (it->second == "paper") {
      spec.system = SystemConfig::paper();
      spec.trainer = paper_trainer_config();
    } else {
      throw ConfigError("unknown profile '" + it->second + "'");
    }
    spec.profile = it->second;
  }
  if (auto it = kv.find("experiment"); it != kv.end()) spec.id = experiment_from_string(it->second);
  spec.sweep_values = default_sweep_values(spec.id);
  spec.methods = default_methods(spec.id);

  auto& s = spec.system;
  auto& t = spec.trainer;
  for (const auto& [key, v] : kv) {
    if (key == "profile" || key == "experiment") continue;
    if (key == "sweep_values") {
      spec.sweep_values.clear();
      for (const auto& x : split_list(v)) spec.sweep_values.push_back(parse_double(key, x));
    } else if (key == "seeds") {
      spec.seeds.clear();
      for (const auto& x : split_list(v)) {
        const long long i = parse_int(key, x);
        if (i < 0) throw ConfigError("config: seeds must be non-negative");
        spec.seeds.push_back(static_cast<std::uint64_t>(i));
      }
    } else if (key == "methods") {
      spec.methods = split_list(v);
    } else if (key == "eval_realizations") {
      spec.eval_realizations = static_cast<int>(parse_int(key, v));
    } else if (key == "eval_steps") {
      spec.eval_steps = static_cast<int>(parse_int(key, v));
    } else if (key == "ao_iters") {
      spec.ao_iters = static_cast<int>(parse_int(key, v));
    } else if (key == "ao_grid") {
      spec.ao_grid = static_cast<int>(parse_int(key, v));
    } else if (key == "checkpoints") {
      spec.checkpoints = parse_bool(key, v);
    } else if (key == "num_aps") {
      s.num_aps = static_cast<int>(parse_int(key, v));
    } else if (key == "num_ues") {
      s.num_ues = static_cast<int>(parse_int(key, v));
    } else if (key == "num_ris") {
      s.num_ris = static_cast<int>(parse_int(key, v));
    } else if (key == "ap_antennas") {
      s.ap_antennas = static_cast<int>(parse_int(key, v));
    } else if (key == "ue_antennas") {
      s.ue_antennas = static_cast<int>(parse_int(key, v));
    } else if (key == "ris_elements") {
      s.ris_elements = static_cast<int>(parse_int(key, v));
    } else if (key == "max_power_dbm") {
      s.max_power = dbm_to_watts(parse_double(key, v));
    } else if (key == "noise_power_dbm") {
      s.noise_power = dbm_to_watts(parse_double(key, v));
    } else if (key == "area_side") {
      s.area_side = parse_double(key, v);
    } else if (key == "path_loss_intercept_db") {
      s.path_loss.intercept_db = parse_double(key, v);
    } else if (key == "path_loss_slope") {
      s.path_loss.slope = parse_double(key, v);
    } else if (key == "min_distance") {
      s.path_loss.min_distance = parse_double(key, v);
    } else if (key == "episodes") {
      t.episodes = static_cast<int>(parse_int(key, v));
    } else if (key == "steps") {
      t.steps = static_cast<int>(parse_int(key, v));
    } else if (key == "fuzzy_agents") {
      t.fuzzy_agents = static_cast<int>(parse_int(key, v));
    } else if (key == "gamma_precoder") {
      t.gamma_precoder = parse_double(key, v);
    } else if (key == "gamma_phase") {
      t.gamma_phase = parse_double(key, v);
    } else if (key == "tau_precoder") {
      t.tau_precoder = parse_double(key, v);
    } else if (key == "tau_phase") {
      t.tau_phase = parse_double(key, v);
    } else if (key == "swap_tau_convention") {
      t.swap_tau_convention = parse_bool(key, v);
    } else if (key == "batch") {
      t.batch = static_cast<int>(parse_int(key, v));
    } else if (key == "buffer_precoder") {
      t.buffer_precoder = static_cast<int>(parse_int(key, v));
    } else if (key == "buffer_phase") {
      t.buffer_phase = static_cast<int>(parse_int(key, v));
    } else if (key == "noise_std") {
      t.noise_std = parse_double(key, v);
    } else if (key == "noise_decay") {
      t.noise_decay = parse_double(key, v);
    } else if (key == "lr_actor") {
      t.lr_actor = parse_double(key, v);
    } else if (key == "lr_critic") {
      t.lr_critic = parse_double(key, v);
    } else if (key == "hidden_precoder") {
      t.hidden_precoder = parse_int_list(key, v);
    } else if (key == "hidden_phase") {
      t.hidden_phase = parse_int_list(key, v);
    } else if (key == "discrete_bits") {
      t.discrete_bits = static_cast<int>(parse_int(key, v));
    } else if (key == "redeploy_each_episode") {
      t.redeploy_each_episode = parse_bool(key, v);
    } else if (key == "standardize_states") {
      t.standardize_states = parse_bool(key, v);
    } else if (key == "reward_scale") {
      t.reward_scale = parse_double(key, v);
    } else if (key == "divergence_limit") {
      t.divergence_limit = parse_double(key, v);
    } else if (key == "updates_per_step") {
      t.updates_per_step = static_cast<int>(parse_int(key, v));
    } else if (key == "actor_preact_penalty") {
      t.actor_preact_penalty = parse_double(key, v);
    } else if (key == "output_init") {
      t.output_init = parse_double(key, v);
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  return spec;
}

// Command-line overrides applied on top of a parsed spec.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> episodes;
  std::optional<int> steps;
  std::optional<int> fuzzy_agents;
  std::optional<int> discrete_bits;
  bool swap_tau_convention = false;
};

inline void apply_overrides(ExperimentSpec& spec, const Overrides& o) {
  if (o.seed) spec.seeds = {*o.seed};
  if (o.out) spec.out_dir = *o.out;
  if (o.episodes) spec.trainer.episodes = *o.episodes;
  if (o.steps) spec.trainer.steps = *o.steps;
  if (o.fuzzy_agents) spec.trainer.fuzzy_agents = *o.fuzzy_agents;
  if (o.discrete_bits) spec.trainer.discrete_bits = *o.discrete_bits;
  if (o.swap_tau_convention) spec.trainer.swap_tau_convention = true;
}

// Flat dump of the effective settings, in the config grammar.
inline std::string describe(const ExperimentSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  auto list = [](const auto& v) {
    std::ostringstream l;
    l.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) l << (i ? ", " : "") << v[i];
    return l.str();
  };
  const auto& s = spec.system;
  const auto& t = spec.trainer;
  os << "profile = " << spec.profile << "\n"
     << "experiment = " << to_string(spec.id) << "\n"
     << "sweep_values = " << list(spec.sweep_values) << "\n"
     << "seeds = " << list(spec.seeds) << "\n"
     << "methods = " << list(spec.methods) << "\n"
     << "eval_realizations = " << spec.eval_realizations << "\n"
     << "eval_steps = " << spec.rollout_steps() << "\n"
     << "ao_iters = " << spec.ao_iters << "\n"
     << "ao_grid = " << spec.ao_grid << "\n"
     << "checkpoints = " << (spec.checkpoints ? "true" : "false") << "\n"
     << "num_aps = " << s.num_aps << "\nnum_ues = " << s.num_ues << "\nnum_ris = " << s.num_ris
     << "\nap_antennas = " << s.ap_antennas << "\nue_antennas = " << s.ue_antennas
     << "\nris_elements = " << s.ris_elements << "\nmax_power_dbm = " << watts_to_dbm(s.max_power)
     << "\nnoise_power_dbm = " << watts_to_dbm(s.noise_power) << "\narea_side = " << s.area_side
     << "\npath_loss_intercept_db = " << s.path_loss.intercept_db << "\npath_loss_slope = " << s.path_loss.slope
     << "\nmin_distance = " << s.path_loss.min_distance << "\n"
     << "episodes = " << t.episodes << "\nsteps = " << t.steps << "\nfuzzy_agents = " << t.fuzzy_agents
     << "\ngamma_precoder = " << t.gamma_precoder << "\ngamma_phase = " << t.gamma_phase
     << "\ntau_precoder = " << t.tau_precoder << "\ntau_phase = " << t.tau_phase
     << "\nswap_tau_convention = " << (t.swap_tau_convention ? "true" : "false") << "\nbatch = " << t.batch
     << "\nbuffer_precoder = " << t.buffer_precoder << "\nbuffer_phase = " << t.buffer_phase
     << "\nnoise_std = " << t.noise_std << "\nnoise_decay = " << t.noise_decay << "\nlr_actor = " << t.lr_actor
     << "\nlr_critic = " << t.lr_critic << "\nhidden_precoder = " << list(t.hidden_precoder)
     << "\nhidden_phase = " << list(t.hidden_phase) << "\ndiscrete_bits = " << t.discrete_bits
     << "\nstandardize_states = " << (t.standardize_states ? "true" : "false")
     << "\nreward_scale = " << t.reward_scale << "\ndivergence_limit = " << t.divergence_limit
     << "\nupdates_per_step = " << t.updates_per_step << "\nactor_preact_penalty = " << t.actor_preact_penalty
     << "\noutput_init = " << t.output_init
     << "\nredeploy_each_episode = " << (t.redeploy_each_episode ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace rismarl::harness
