/*
 Copyright 2026 The sgrl Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef SGRL_CONFIG_HPP
#define SGRL_CONFIG_HPP

#include "sgrl/simkit.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace sgrl {

namespace yaml_detail {

inline YAML::Node scalar(double v) { return YAML::Node(format_number(v)); }

inline YAML::Node vector(const Vec &v) {
  YAML::Node n(YAML::NodeType::Sequence);
  for (Eigen::Index i = 0; i < v.size(); ++i) n.push_back(scalar(v(i)));
  n.SetStyle(YAML::EmitterStyle::Flow);
  return n;
}

inline YAML::Node matrix(const Mat &m) {
  YAML::Node n(YAML::NodeType::Sequence);
  for (Eigen::Index r = 0; r < m.rows(); ++r) n.push_back(vector(m.row(r).transpose()));
  n.SetStyle(YAML::EmitterStyle::Flow);
  return n;
}

template <class T> YAML::Node list(const std::vector<T> &v) {
  YAML::Node n(YAML::NodeType::Sequence);
  for (const auto &e : v) {
    if constexpr (std::is_same_v<T, double>) n.push_back(scalar(e));
    else n.push_back(e);
  }
  n.SetStyle(YAML::EmitterStyle::Flow);
  return n;
}

inline double as_double(const YAML::Node &n, const std::string &key) {
  try {
    const auto s = n.as<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return n.as<double>();
  } catch (const YAML::Exception &) {
    throw ConfigError("'" + key + "' must be a number");
  }
}

template <class T> T as(const YAML::Node &n, const std::string &key) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception &) {
    throw ConfigError("'" + key + "' has the wrong type");
  }
}

inline Vec as_vector(const YAML::Node &n, const std::string &key) {
  if (n.IsScalar()) return Vec::Constant(1, as_double(n, key));
  if (!n.IsSequence()) throw ConfigError("'" + key + "' must be a list of numbers");
  Vec v(static_cast<Eigen::Index>(n.size()));
  for (std::size_t i = 0; i < n.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = as_double(n[i], key);
  return v;
}

inline Mat as_matrix(const YAML::Node &n, const std::string &key) {
  if (!n.IsSequence() || n.size() == 0) throw ConfigError("'" + key + "' must be a list of rows");
  const Vec first = as_vector(n[0], key);
  Mat m(static_cast<Eigen::Index>(n.size()), first.size());
  for (std::size_t r = 0; r < n.size(); ++r) {
    const Vec row = as_vector(n[r], key);
    if (row.size() != m.cols()) throw ConfigError("'" + key + "' has ragged rows");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

template <class T> std::vector<T> as_list(const YAML::Node &n, const std::string &key) {
  if (!n.IsSequence()) throw ConfigError("'" + key + "' must be a list");
  std::vector<T> out;
  for (const auto &e : n) {
    if constexpr (std::is_same_v<T, double>) out.push_back(as_double(e, key));
    else out.push_back(as<T>(e, key));
  }
  return out;
}

/// Rejects keys outside `allowed` so typos do not pass silently.
inline void check_keys(const YAML::Node &n, std::initializer_list<std::string_view> allowed,
                       const std::string &where) {
  if (!n.IsMap()) throw ConfigError("'" + where + "' must be a mapping");
  for (const auto &kv : n) {
    const auto k = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ConfigError("unknown key '" + (where.empty() ? k : where + "." + k) + "'");
  }
}

inline YAML::Node encode(const ConstraintDecl &c) {
  YAML::Node n;
  n["label"] = c.label;
  n["kind"] = to_string(c.kind);
  if (c.kind == ConstraintKind::halfspace) {
    n["normal"] = vector(c.normal);
    n["offset"] = scalar(c.offset);
  } else {
    n["coords"] = list(c.coords);
    n["center"] = vector(c.center);
    n["radius"] = scalar(c.radius);
  }
  n["relative_degree"] = c.relative_degree;
  n["alphas"] = list(c.alphas);
  n["enforced"] = c.enforced;
  n["adaptive"] = c.adaptive;
  n["gain"] = scalar(c.gain);
  n["gamma3"] = scalar(c.gamma3);
  return n;
}

inline ConstraintDecl decode_constraint(const YAML::Node &n, const std::string &where) {
  check_keys(n,
             {"label", "kind", "normal", "offset", "coords", "center", "radius",
              "relative_degree", "alphas", "enforced", "adaptive", "gain", "gamma3"},
             where);
  ConstraintDecl c;
  if (!n["label"]) throw ConfigError("'" + where + "' needs a label");
  c.label = as<std::string>(n["label"], where + ".label");
  if (n["kind"]) c.kind = parse_constraint_kind(as<std::string>(n["kind"], where + ".kind"));
  if (n["normal"]) c.normal = as_vector(n["normal"], where + ".normal");
  if (n["offset"]) c.offset = as_double(n["offset"], where + ".offset");
  if (n["coords"]) c.coords = as_list<int>(n["coords"], where + ".coords");
  if (n["center"]) c.center = as_vector(n["center"], where + ".center");
  if (n["radius"]) c.radius = as_double(n["radius"], where + ".radius");
  if (n["relative_degree"]) c.relative_degree = as<int>(n["relative_degree"], where);
  if (n["alphas"]) c.alphas = as_list<double>(n["alphas"], where + ".alphas");
  if (n["enforced"]) c.enforced = as<bool>(n["enforced"], where + ".enforced");
  if (n["adaptive"]) c.adaptive = as<bool>(n["adaptive"], where + ".adaptive");
  if (n["gain"]) c.gain = as_double(n["gain"], where + ".gain");
  if (n["gamma3"]) c.gamma3 = as_double(n["gamma3"], where + ".gamma3");
  return c;
}

inline YAML::Node encode(const FaultSignal &f) {
  YAML::Node n;
  switch (f.kind) {
  case FaultKind::zero:
    n["kind"] = "zero";
    n["channels"] = f.channels;
    break;
  case FaultKind::constant: {
    n["kind"] = "constant";
    Vec v(f.channels);
    for (int i = 0; i < f.channels; ++i) v(i) = f.channel_params[static_cast<std::size_t>(i)].offset;
    n["values"] = vector(v);
    break;
  }
  case FaultKind::sinusoid_sum:
    n["kind"] = "sinusoid";
    for (const auto &c : f.channel_params) {
      YAML::Node ch;
      ch["offset"] = scalar(c.offset);
      YAML::Node hs(YAML::NodeType::Sequence);
      for (const auto &h : c.harmonics) {
        YAML::Node hn;
        hn["sin"] = scalar(h.sin_amplitude);
        hn["cos"] = scalar(h.cos_amplitude);
        hn["frequency"] = scalar(h.frequency);
        hn.SetStyle(YAML::EmitterStyle::Flow);
        hs.push_back(hn);
      }
      ch["harmonics"] = hs;
      n["channels"].push_back(ch);
    }
    break;
  case FaultKind::table:
    n["kind"] = "table";
    n["times"] = list(f.table.times);
    for (const auto &v : f.table.values) n["values"].push_back(vector(v));
    break;
  }
  return n;
}

inline FaultSignal decode_fault(const YAML::Node &n) {
  if (n.IsScalar()) {
    const auto s = n.as<std::string>();
    if (s == "zero") return FaultSignal::zero(1);
    if (s == "paper-sinusoid") return FaultSignal::paper_sinusoid();
    throw ConfigError("unknown fault preset '" + s + "' (zero, paper-sinusoid)");
  }
  check_keys(n, {"kind", "channels", "values", "times"}, "fault");
  const auto kind = n["kind"] ? as<std::string>(n["kind"], "fault.kind") : std::string("zero");
  try {
    if (kind == "zero")
      return FaultSignal::zero(n["channels"] ? as<int>(n["channels"], "fault.channels") : 1);
    if (kind == "constant") return FaultSignal::constant(as_vector(n["values"], "fault.values"));
    if (kind == "sinusoid") {
      std::vector<FaultChannel> chans;
      if (!n["channels"] || !n["channels"].IsSequence())
        throw ConfigError("'fault.channels' must list the sinusoid channels");
      for (const auto &ch : n["channels"]) {
        check_keys(ch, {"offset", "harmonics"}, "fault.channels");
        FaultChannel c;
        if (ch["offset"]) c.offset = as_double(ch["offset"], "fault.channels.offset");
        if (ch["harmonics"])
          for (const auto &h : ch["harmonics"]) {
            check_keys(h, {"sin", "cos", "frequency"}, "fault.channels.harmonics");
            Harmonic hh;
            if (h["sin"]) hh.sin_amplitude = as_double(h["sin"], "fault harmonic sin");
            if (h["cos"]) hh.cos_amplitude = as_double(h["cos"], "fault harmonic cos");
            if (h["frequency"]) hh.frequency = as_double(h["frequency"], "fault harmonic frequency");
            c.harmonics.push_back(hh);
          }
        chans.push_back(std::move(c));
      }
      return FaultSignal::sinusoid_sum(std::move(chans));
    }
    if (kind == "table") {
      FaultTable t;
      t.times = as_list<double>(n["times"], "fault.times");
      for (const auto &row : n["values"]) t.values.push_back(as_vector(row, "fault.values"));
      return FaultSignal::from_table(std::move(t));
    }
  } catch (const ConstructionError &e) {
    throw ConfigError(std::string("fault: ") + e.what());
  }
  throw ConfigError("unknown fault kind '" + kind + "'");
}

} // namespace yaml_detail

/// Serializes a configuration; every number is written in shortest round-trip form.
inline YAML::Node to_yaml(const ScenarioConfig &c) {
  using namespace yaml_detail;
  YAML::Node n;
  n["name"] = c.name;
  n["mode"] = to_string(c.mode);
  n["seed"] = c.seed;
  n["horizon"] = scalar(c.horizon);
  n["dt"] = scalar(c.dt);
  n["control_frequency"] = scalar(c.control_frequency);
  n["record_stride"] = c.record_stride;
  n["x0"] = vector(c.x0);
  if (c.Q.size()) n["Q"] = matrix(c.Q);
  if (c.R.size()) n["R"] = matrix(c.R);
  n["barrier_form"] = c.barrier_form == BarrierForm::reciprocal ? "reciprocal" : "shifted-square";

  YAML::Node sys;
  sys["kind"] = c.system.kind;
  sys["mass"] = scalar(c.system.mass);
  sys["length"] = scalar(c.system.length);
  sys["gravity"] = scalar(c.system.gravity);
  sys["axes"] = c.system.axes;
  n["system"] = sys;

  YAML::Node sg;
  sg["mu"] = scalar(c.safeguard.mu);
  sg["decay"] = scalar(c.safeguard.decay);
  sg["growth"] = scalar(c.safeguard.growth);
  sg["gain_bound"] = scalar(c.safeguard.gain_bound);
  n["safeguard"] = sg;

  YAML::Node obs;
  obs["enabled"] = c.observer.enabled;
  if (c.observer.gain.size()) obs["gain"] = matrix(c.observer.gain);
  n["observer"] = obs;

  YAML::Node L;
  YAML::Node gains;
  gains["kc1"] = scalar(c.learner.gains.kc1);
  gains["kc2"] = scalar(c.learner.gains.kc2);
  gains["ka1"] = scalar(c.learner.gains.ka1);
  gains["ka2"] = scalar(c.learner.gains.ka2);
  gains["beta"] = scalar(c.learner.gains.beta);
  L["gains"] = gains;
  L["initial_weights"] = vector(c.learner.initial_weights);
  YAML::Node mons(YAML::NodeType::Sequence);
  for (const auto &[i, j] : c.learner.monomials) mons.push_back(list(std::vector<int>{i, j}));
  mons.SetStyle(YAML::EmitterStyle::Flow);
  L["monomials"] = mons;
  L["gamma0"] = scalar(c.learner.gamma0);
  L["actor_bound"] = scalar(c.learner.actor_bound);
  L["box_lo"] = vector(c.learner.box_lo);
  L["box_hi"] = vector(c.learner.box_hi);
  L["grid"] = list(c.learner.grid);
  L["lambda_c"] = scalar(c.learner.lambda_c);
  L["penalty_weight"] = scalar(c.learner.penalty_weight);
  n["learner"] = L;

  YAML::Node tr;
  tr["kp"] = scalar(c.tracking.kp);
  tr["kd"] = scalar(c.tracking.kd);
  tr["target"] = vector(c.tracking.target);
  tr["rate"] = vector(c.tracking.rate);
  n["tracking"] = tr;

  n["fault"] = encode(c.fault);

  n["constraints"] = YAML::Node(YAML::NodeType::Sequence);
  for (const auto &d : c.constraints) n["constraints"].push_back(encode(d));

  YAML::Node of;
  of["count"] = c.obstacles.count;
  of["radius"] = scalar(c.obstacles.radius);
  of["lo"] = vector(c.obstacles.lo);
  of["hi"] = vector(c.obstacles.hi);
  of["clearance"] = scalar(c.obstacles.clearance);
  of["coords"] = list(c.obstacles.coords);
  of["relative_degree"] = c.obstacles.relative_degree;
  of["alphas"] = list(c.obstacles.alphas);
  of["enforced"] = c.obstacles.enforced;
  of["adaptive"] = c.obstacles.adaptive;
  of["gain"] = scalar(c.obstacles.gain);
  of["gamma3"] = scalar(c.obstacles.gamma3);
  n["obstacles"] = of;
  return n;
}

/// Reads a configuration; absent keys keep the values already in `base`.
inline ScenarioConfig from_yaml(const YAML::Node &n, ScenarioConfig base = {}) {
  using namespace yaml_detail;
  check_keys(n,
             {"name", "mode", "seed", "horizon", "dt", "control_frequency", "record_stride", "x0",
              "Q", "R", "barrier_form", "system", "safeguard", "observer", "learner", "tracking",
              "fault", "constraints", "obstacles"},
             "");
  ScenarioConfig c = std::move(base);
  if (n["name"]) c.name = as<std::string>(n["name"], "name");
  if (n["mode"]) c.mode = parse_controller_mode(as<std::string>(n["mode"], "mode"));
  if (n["seed"]) c.seed = as<std::uint64_t>(n["seed"], "seed");
  if (n["horizon"]) c.horizon = as_double(n["horizon"], "horizon");
  if (n["dt"]) c.dt = as_double(n["dt"], "dt");
  if (n["control_frequency"]) c.control_frequency = as_double(n["control_frequency"], "control_frequency");
  if (n["record_stride"]) c.record_stride = as<int>(n["record_stride"], "record_stride");
  if (n["x0"]) c.x0 = as_vector(n["x0"], "x0");
  if (n["Q"]) c.Q = as_matrix(n["Q"], "Q");
  if (n["R"]) c.R = as_matrix(n["R"], "R");
  if (n["barrier_form"]) {
    const auto s = as<std::string>(n["barrier_form"], "barrier_form");
    if (s == "reciprocal") c.barrier_form = BarrierForm::reciprocal;
    else if (s == "shifted-square") c.barrier_form = BarrierForm::shifted_square;
    else throw ConfigError("unknown barrier form '" + s + "'");
  }
  if (const auto s = n["system"]) {
    check_keys(s, {"kind", "mass", "length", "gravity", "axes"}, "system");
    if (s["kind"]) c.system.kind = as<std::string>(s["kind"], "system.kind");
    if (s["mass"]) c.system.mass = as_double(s["mass"], "system.mass");
    if (s["length"]) c.system.length = as_double(s["length"], "system.length");
    if (s["gravity"]) c.system.gravity = as_double(s["gravity"], "system.gravity");
    if (s["axes"]) c.system.axes = as<int>(s["axes"], "system.axes");
  }
  if (const auto s = n["safeguard"]) {
    check_keys(s, {"mu", "decay", "growth", "gain_bound"}, "safeguard");
    if (s["mu"]) c.safeguard.mu = as_double(s["mu"], "safeguard.mu");
    if (s["decay"]) c.safeguard.decay = as_double(s["decay"], "safeguard.decay");
    if (s["growth"]) c.safeguard.growth = as_double(s["growth"], "safeguard.growth");
    if (s["gain_bound"]) c.safeguard.gain_bound = as_double(s["gain_bound"], "safeguard.gain_bound");
  }
  if (const auto s = n["observer"]) {
    check_keys(s, {"enabled", "gain"}, "observer");
    if (s["enabled"]) c.observer.enabled = as<bool>(s["enabled"], "observer.enabled");
    if (s["gain"]) c.observer.gain = as_matrix(s["gain"], "observer.gain");
  }
  if (const auto s = n["learner"]) {
    check_keys(s,
               {"gains", "initial_weights", "monomials", "gamma0", "actor_bound", "box_lo",
                "box_hi", "grid", "lambda_c", "penalty_weight"},
               "learner");
    auto &L = c.learner;
    if (const auto g = s["gains"]) {
      check_keys(g, {"kc1", "kc2", "ka1", "ka2", "beta"}, "learner.gains");
      if (g["kc1"]) L.gains.kc1 = as_double(g["kc1"], "learner.gains.kc1");
      if (g["kc2"]) L.gains.kc2 = as_double(g["kc2"], "learner.gains.kc2");
      if (g["ka1"]) L.gains.ka1 = as_double(g["ka1"], "learner.gains.ka1");
      if (g["ka2"]) L.gains.ka2 = as_double(g["ka2"], "learner.gains.ka2");
      if (g["beta"]) L.gains.beta = as_double(g["beta"], "learner.gains.beta");
    }
    if (s["initial_weights"]) L.initial_weights = as_vector(s["initial_weights"], "learner.initial_weights");
    if (s["monomials"]) {
      L.monomials.clear();
      for (const auto &m : s["monomials"]) {
        const auto ij = as_list<int>(m, "learner.monomials");
        if (ij.size() != 2) throw ConfigError("'learner.monomials' entries are index pairs");
        L.monomials.emplace_back(ij[0], ij[1]);
      }
    }
    if (s["gamma0"]) L.gamma0 = as_double(s["gamma0"], "learner.gamma0");
    if (s["actor_bound"]) L.actor_bound = as_double(s["actor_bound"], "learner.actor_bound");
    if (s["box_lo"]) L.box_lo = as_vector(s["box_lo"], "learner.box_lo");
    if (s["box_hi"]) L.box_hi = as_vector(s["box_hi"], "learner.box_hi");
    if (s["grid"]) L.grid = as_list<int>(s["grid"], "learner.grid");
    if (s["lambda_c"]) L.lambda_c = as_double(s["lambda_c"], "learner.lambda_c");
    if (s["penalty_weight"]) L.penalty_weight = as_double(s["penalty_weight"], "learner.penalty_weight");
  }
  if (const auto s = n["tracking"]) {
    check_keys(s, {"kp", "kd", "target", "rate"}, "tracking");
    if (s["kp"]) c.tracking.kp = as_double(s["kp"], "tracking.kp");
    if (s["kd"]) c.tracking.kd = as_double(s["kd"], "tracking.kd");
    if (s["target"]) c.tracking.target = as_vector(s["target"], "tracking.target");
    if (s["rate"]) c.tracking.rate = as_vector(s["rate"], "tracking.rate");
  }
  if (n["fault"]) c.fault = decode_fault(n["fault"]);
  if (const auto s = n["constraints"]) {
    if (!s.IsSequence()) throw ConfigError("'constraints' must be a list");
    c.constraints.clear();
    for (std::size_t i = 0; i < s.size(); ++i)
      c.constraints.push_back(decode_constraint(s[i], "constraints[" + std::to_string(i) + "]"));
  }
  if (const auto s = n["obstacles"]) {
    check_keys(s,
               {"count", "radius", "lo", "hi", "clearance", "coords", "relative_degree", "alphas",
                "enforced", "adaptive", "gain", "gamma3"},
               "obstacles");
    auto &o = c.obstacles;
    if (s["count"]) o.count = as<int>(s["count"], "obstacles.count");
    if (s["radius"]) o.radius = as_double(s["radius"], "obstacles.radius");
    if (s["lo"]) o.lo = as_vector(s["lo"], "obstacles.lo");
    if (s["hi"]) o.hi = as_vector(s["hi"], "obstacles.hi");
    if (s["clearance"]) o.clearance = as_double(s["clearance"], "obstacles.clearance");
    if (s["coords"]) o.coords = as_list<int>(s["coords"], "obstacles.coords");
    if (s["relative_degree"]) o.relative_degree = as<int>(s["relative_degree"], "obstacles.relative_degree");
    if (s["alphas"]) o.alphas = as_list<double>(s["alphas"], "obstacles.alphas");
    if (s["enforced"]) o.enforced = as<bool>(s["enforced"], "obstacles.enforced");
    if (s["adaptive"]) o.adaptive = as<bool>(s["adaptive"], "obstacles.adaptive");
    if (s["gain"]) o.gain = as_double(s["gain"], "obstacles.gain");
    if (s["gamma3"]) o.gamma3 = as_double(s["gamma3"], "obstacles.gamma3");
  }
  return c;
}

inline std::string to_yaml_string(const ScenarioConfig &c) {
  YAML::Emitter out;
  out << to_yaml(c);
  return std::string(out.c_str()) + "\n";
}

inline ScenarioConfig parse_config(const std::string &text, ScenarioConfig base = {}) {
  try {
    return from_yaml(YAML::Load(text), std::move(base));
  } catch (const YAML::Exception &e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

inline ScenarioConfig load_config(const std::string &path, ScenarioConfig base = {}) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

inline void save_config(const ScenarioConfig &c, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << to_yaml_string(c);
  if (!os) throw Error("failed writing '" + path + "'");
}

/**
 * @brief Applies one `key=value` override.
 *
 * Keys are dotted paths into the YAML layout (`safeguard.mu`,
 * `learner.gains.ka2`); list items are addressed by index or, for
 * constraints, by label (`constraints.theta.gain`). The value is parsed as
 * YAML. Shorthands:
 *   Ks     all constraint and obstacle gains
 *   fault  zero | paper-sinusoid
 *   fc, T, mu, Y, gamma, dt, seed, mode
 *   x0     replaces the leading state entries
 */
inline ScenarioConfig apply_override(const ScenarioConfig &cfg, std::string_view assignment) {
  using namespace yaml_detail;
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  YAML::Node value;
  try {
    value = YAML::Load(text);
  } catch (const YAML::Exception &) {
    value = YAML::Node(text);
  }

  ScenarioConfig c = cfg;
  if (key == "Ks") {
    const double k = as_double(value, key);
    for (auto &d : c.constraints) d.gain = k;
    c.obstacles.gain = k;
    return c;
  }
  if (key == "x0") {
    Vec head;
    if (value.IsScalar() && text.find(',') != std::string::npos) {
      std::vector<double> parts;
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) parts.push_back(as_double(YAML::Node(item), key));
      head = Eigen::Map<const Vec>(parts.data(), static_cast<Eigen::Index>(parts.size()));
    } else {
      head = as_vector(value, key);
    }
    if (c.x0.size() == 0) c.x0 = Vec::Zero(head.size());
    if (head.size() > c.x0.size())
      throw ConfigError("x0 override has " + std::to_string(head.size()) + " entries, state has " +
                        std::to_string(c.x0.size()));
    c.x0.head(head.size()) = head;
    return c;
  }
  static const std::vector<std::pair<std::string, std::string>> aliases = {
      {"fc", "control_frequency"}, {"T", "horizon"},          {"mu", "safeguard.mu"},
      {"Y", "safeguard.decay"},    {"gamma", "safeguard.growth"}};
  for (const auto &[a, full] : aliases)
    if (key == a) key = full;

  std::vector<std::string> path;
  {
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) {
      if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
      path.push_back(part);
    }
  }

  YAML::Node root = to_yaml(c);
  std::vector<YAML::Node> chain{root};
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    YAML::Node cur = chain.back();
    YAML::Node next;
    if (cur.IsSequence()) {
      bool found = false;
      for (std::size_t j = 0; j < cur.size(); ++j) {
        if (std::to_string(j) == path[i] ||
            (cur[j].IsMap() && cur[j]["label"] && cur[j]["label"].as<std::string>() == path[i])) {
          next = cur[j];
          found = true;
          break;
        }
      }
      if (!found) throw ConfigError("override key '" + key + "': no item '" + path[i] + "'");
    } else if (cur.IsMap() && cur[path[i]]) {
      next = cur[path[i]];
    } else {
      throw ConfigError("unknown override key '" + key + "'");
    }
    chain.push_back(next);
  }
  YAML::Node parent = chain.back();
  const auto &leaf = path.back();
  if (parent.IsSequence()) {
    std::size_t idx = 0;
    try {
      idx = std::stoul(leaf);
    } catch (const std::exception &) {
      throw ConfigError("override key '" + key + "': '" + leaf + "' is not an index");
    }
    if (idx >= parent.size()) throw ConfigError("override key '" + key + "': index out of range");
    parent[idx] = value;
  } else if (parent.IsMap() && parent[leaf]) {
    parent[leaf] = value;
  } else if (parent.IsMap() && path.size() == 1 && (leaf == "Q" || leaf == "R")) {
    parent[leaf] = value;
  } else {
    throw ConfigError("unknown override key '" + key + "'");
  }
  return from_yaml(root, ScenarioConfig{});
}

inline ScenarioConfig apply_overrides(ScenarioConfig cfg, const std::vector<std::string> &sets) {
  for (const auto &s : sets) cfg = apply_override(cfg, s);
  return cfg;
}

} // namespace sgrl

#endif // SGRL_CONFIG_HPP
