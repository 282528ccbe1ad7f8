#pragma once

// JSON encodings for replayable realizations and checkpoints.
//
//   topology  {"format": "rismarl-topology", "version": 1, "aps": [[x, y], ...],
//              "ues": [...], "ris": [...], "ap_ue": [[d, ...], ...],
//              "ap_ris": [[...]], "ris_ue": [[...]]}
//   channels  {"format": "rismarl-channels", "version": 1,
//              "dims": {"L", "K", "R", "M", "U", "N"},
//              "beta_direct" / "beta_ap_ris" / "beta_ris_ue": real matrices,
//              "direct": [H_{l,k}^H for l, k], "ap_ris": [G_{l,r} for l, r],
//              "ris_ue": [F_{r,k}^H for r, k]}
//   mlp       {"format": "rismarl-mlp", "version": 1, "widths": [...],
//              "output_activation": "tanh" | "linear", "leaky_slope": s,
//              "layers": [{"weight": row-major out*in values, "bias": [...]}]}
//   fuzzy     {"format": "rismarl-fuzzy", "version": 1, "n", "action_dim",
//              "state_dim", "anchors": row-major n*d_s values}
//
// Real matrices are arrays of rows; complex matrices are arrays of rows of
// [re, im] pairs. Doubles are written with round-trip precision.

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "rismarl/fuzzy.hpp"
#include "rismarl/mlp.hpp"
#include "rismarl/system_model.hpp"

namespace rismarl::io {

using json = nlohmann::json;

namespace detail {

inline void check_header(const json& j, const std::string& format, int version) {
  if (!j.contains("format") || j.at("format") != format)
    throw ConfigError("expected a " + format + " document");
  if (j.value("version", 0) != version)
    throw ConfigError(format + ": unsupported version " + std::to_string(j.value("version", 0)));
}

inline json real_matrix(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix real_matrix(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw ConfigError("real matrix: wrong row count");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw ConfigError("real matrix: wrong column count");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

inline json complex_matrix(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CMatrix complex_matrix(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw ConfigError("complex matrix: wrong row count");
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw ConfigError("complex matrix: wrong column count");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& z = row.at(static_cast<std::size_t>(c));
      m(i, c) = cdouble(z.at(0).get<double>(), z.at(1).get<double>());
    }
  }
  return m;
}

inline json points(const std::vector<Point>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(json::array({p.x, p.y}));
  return a;
}

inline std::vector<Point> points(const json& j) {
  std::vector<Point> pts;
  for (const auto& p : j) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return pts;
}

}  // namespace detail

inline json to_json(const Topology& t) {
  return {{"format", "rismarl-topology"},
          {"version", 1},
          {"aps", detail::points(t.aps)},
          {"ues", detail::points(t.ues)},
          {"ris", detail::points(t.ris)},
          {"ap_ue", detail::real_matrix(t.ap_ue)},
          {"ap_ris", detail::real_matrix(t.ap_ris)},
          {"ris_ue", detail::real_matrix(t.ris_ue)}};
}

inline Topology topology_from_json(const json& j) {
  detail::check_header(j, "rismarl-topology", 1);
  Topology t;
  t.aps = detail::points(j.at("aps"));
  t.ues = detail::points(j.at("ues"));
  t.ris = detail::points(j.at("ris"));
  const auto L = static_cast<Eigen::Index>(t.aps.size()), K = static_cast<Eigen::Index>(t.ues.size()),
             R = static_cast<Eigen::Index>(t.ris.size());
  t.ap_ue = detail::real_matrix(j.at("ap_ue"), L, K);
  t.ap_ris = R > 0 ? detail::real_matrix(j.at("ap_ris"), L, R) : Matrix(L, 0);
  t.ris_ue = R > 0 ? detail::real_matrix(j.at("ris_ue"), R, K) : Matrix(0, K);
  return t;
}

inline json to_json(const ChannelSet& ch) {
  json j = {{"format", "rismarl-channels"},
            {"version", 1},
            {"dims",
             {{"L", ch.num_aps},
              {"K", ch.num_ues},
              {"R", ch.num_ris},
              {"M", ch.ap_antennas},
              {"U", ch.ue_antennas},
              {"N", ch.ris_elements}}},
            {"beta_direct", detail::real_matrix(ch.beta_direct)},
            {"beta_ap_ris", detail::real_matrix(ch.beta_ap_ris)},
            {"beta_ris_ue", detail::real_matrix(ch.beta_ris_ue)}};
  for (const char* key : {"direct", "ap_ris", "ris_ue"}) j[key] = json::array();
  for (const auto& m : ch.direct) j["direct"].push_back(detail::complex_matrix(m));
  for (const auto& m : ch.ap_ris) j["ap_ris"].push_back(detail::complex_matrix(m));
  for (const auto& m : ch.ris_ue) j["ris_ue"].push_back(detail::complex_matrix(m));
  return j;
}

inline ChannelSet channels_from_json(const json& j) {
  detail::check_header(j, "rismarl-channels", 1);
  const auto& d = j.at("dims");
  const int L = d.at("L"), K = d.at("K"), R = d.at("R"), M = d.at("M"), U = d.at("U"), N = d.at("N");
  auto ch = ChannelSet::zeros(L, K, R, M, U, N);
  ch.beta_direct = detail::real_matrix(j.at("beta_direct"), L, K);
  if (R > 0) {
    ch.beta_ap_ris = detail::real_matrix(j.at("beta_ap_ris"), L, R);
    ch.beta_ris_ue = detail::real_matrix(j.at("beta_ris_ue"), R, K);
  }
  auto load = [](const json& arr, std::vector<CMatrix>& out, Eigen::Index rows, Eigen::Index cols) {
    if (arr.size() != out.size()) throw ConfigError("channels: wrong number of matrices");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::complex_matrix(arr.at(i), rows, cols);
  };
  load(j.at("direct"), ch.direct, U, M);
  load(j.at("ap_ris"), ch.ap_ris, N, M);
  load(j.at("ris_ue"), ch.ris_ue, U, N);
  return ch;
}

inline json to_json(const nn::MlpParams& p) {
  json layers = json::array();
  for (const auto& l : p.layers) {
    json w = json::array();
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    json b = json::array();
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) b.push_back(l.bias(r));
    layers.push_back({{"weight", std::move(w)}, {"bias", std::move(b)}});
  }
  return {{"format", "rismarl-mlp"},
          {"version", 1},
          {"widths", p.widths()},
          {"output_activation", nn::to_string(p.output)},
          {"leaky_slope", p.leaky_slope},
          {"layers", std::move(layers)}};
}

inline nn::MlpParams mlp_from_json(const json& j) {
  detail::check_header(j, "rismarl-mlp", 1);
  const auto widths = j.at("widths").get<std::vector<int>>();
  const auto& layers = j.at("layers");
  if (widths.size() < 2 || layers.size() != widths.size() - 1) throw ConfigError("mlp: widths/layers mismatch");
  nn::MlpParams p;
  p.output = nn::activation_from_string(j.at("output_activation").get<std::string>());
  p.leaky_slope = j.at("leaky_slope").get<double>();
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const int in = widths[i], out = widths[i + 1];
    const auto& w = layers.at(i).at("weight");
    const auto& b = layers.at(i).at("bias");
    if (static_cast<int>(w.size()) != in * out || static_cast<int>(b.size()) != out)
      throw ConfigError("mlp: layer " + std::to_string(i) + " has wrong parameter count");
    nn::DenseLayer layer{Matrix(out, in), Vector(out)};
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) layer.weight(r, c) = w.at(static_cast<std::size_t>(r * in + c)).get<double>();
      layer.bias(r) = b.at(static_cast<std::size_t>(r)).get<double>();
    }
    p.layers.push_back(std::move(layer));
  }
  p.touch();
  return p;
}

inline json to_json(const fuzzy::FuzzyMap& fm) {
  json a = json::array();
  for (Eigen::Index r = 0; r < fm.anchors.rows(); ++r)
    for (Eigen::Index c = 0; c < fm.anchors.cols(); ++c) a.push_back(fm.anchors(r, c));
  return {{"format", "rismarl-fuzzy"},
          {"version", 1},
          {"n", fm.num_fuzzy()},
          {"action_dim", fm.action_dim},
          {"state_dim", fm.state_dim()},
          {"anchors", std::move(a)}};
}

// Anchors only; call mapping_matrix with current states to rebuild Xi.
inline fuzzy::FuzzyMap fuzzy_from_json(const json& j) {
  detail::check_header(j, "rismarl-fuzzy", 1);
  fuzzy::FuzzyMap fm;
  const int n = j.at("n"), ds = j.at("state_dim");
  fm.action_dim = j.at("action_dim");
  const auto& a = j.at("anchors");
  if (static_cast<int>(a.size()) != n * ds) throw ConfigError("fuzzy: wrong anchor count");
  fm.anchors.resize(n, ds);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < ds; ++c) fm.anchors(r, c) = a.at(static_cast<std::size_t>(r * ds + c)).get<double>();
  return fm;
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(1) << '\n';
}

inline json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  return json::parse(f);
}

}  // namespace rismarl::io
