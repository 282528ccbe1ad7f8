#pragma once

// Seed-level aggregation of results.csv: mean and sample standard deviation
// across seeds per (method, sweep value), plus percentage gains over the ZF
// and AO rows of the same sweep value when present.

#include <map>
#include <string>
#include <vector>

#include "rismarl/harness/csv.hpp"
#include "rismarl/harness/experiment.hpp"

namespace rismarl::harness {

struct SummaryRow {
  std::string method;
  std::string sweep_variable;
  std::string sweep_value;
  int seeds = 0;
  double mean = 0.0;
  double std = 0.0;
  std::optional<double> gain_vs_zf_pct;
  std::optional<double> gain_vs_ao_pct;
};

inline std::vector<SummaryRow> summarize(const CsvTable& t) {
  const int c_method = t.column("method");
  const int c_value = t.column("sweep_value");
  const int c_mean = t.column("mean_sum_se");
  int c_var = -1;
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == "sweep_variable") c_var = static_cast<int>(i);

  std::vector<std::pair<std::string, std::string>> order;  // (value, method) first seen
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  std::map<std::string, std::string> variable_of;
  for (const auto& r : t.rows) {
    const auto key = std::make_pair(r[static_cast<std::size_t>(c_value)], r[static_cast<std::size_t>(c_method)]);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(parse_double("mean_sum_se", r[static_cast<std::size_t>(c_mean)]));
    if (c_var >= 0) variable_of[key.first] = r[static_cast<std::size_t>(c_var)];
  }
  std::vector<SummaryRow> out;
  for (const auto& key : order) {
    SummaryRow s;
    s.sweep_value = key.first;
    s.method = key.second;
    s.sweep_variable = variable_of.count(key.first) ? variable_of[key.first] : "";
    const auto& v = groups[key];
    s.seeds = static_cast<int>(v.size());
    std::tie(s.mean, s.std) = mean_and_std(v);
    out.push_back(s);
  }
  auto mean_of = [&](const std::string& value, const std::string& method) -> std::optional<double> {
    for (const auto& s : out)
      if (s.sweep_value == value && s.method == method) return s.mean;
    return std::nullopt;
  };
  for (auto& s : out) {
    if (auto zf = mean_of(s.sweep_value, "zf"); zf && *zf > 0.0) s.gain_vs_zf_pct = 100.0 * (s.mean / *zf - 1.0);
    if (auto ao = mean_of(s.sweep_value, "ao_grid"); ao && *ao > 0.0) s.gain_vs_ao_pct = 100.0 * (s.mean / *ao - 1.0);
  }
  return out;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string s = "method,sweep_variable,sweep_value,seeds,mean_sum_se,std_sum_se,gain_vs_zf_pct,gain_vs_ao_pct\n";
  for (const auto& r : rows) {
    s += r.method + "," + r.sweep_variable + "," + r.sweep_value + "," + std::to_string(r.seeds) + "," + fmt(r.mean) +
         "," + fmt(r.std) + "," + (r.gain_vs_zf_pct ? fmt(*r.gain_vs_zf_pct) : "") + "," +
         (r.gain_vs_ao_pct ? fmt(*r.gain_vs_ao_pct) : "") + "\n";
  }
  return s;
}

}  // namespace rismarl::harness
