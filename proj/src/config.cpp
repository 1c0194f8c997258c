// Copyright 2026 The ncsched Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ncsched/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <span>
#include <sstream>

#include "ncsched/csv.hpp"
#include "ncsched/errors.hpp"

namespace ncsched {

namespace {

// ---- scalars ---------------------------------------------------------------

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double parse_double(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) throw ConfigError(field, "expected a number");
  const std::string& s = node.Scalar();
  if (s == ".inf" || s == ".Inf" || s == "inf" || s == "+.inf") {
    return std::numeric_limits<double>::infinity();
  }
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || std::isnan(v)) {
    throw ConfigError(field, "expected a number, got '" + s + "'");
  }
  return v;
}

template <typename Int>
Int parse_int(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) throw ConfigError(field, "expected an integer");
  const std::string& s = node.Scalar();
  Int v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw ConfigError(field, "expected an integer, got '" + s + "'");
  }
  return v;
}

std::string parse_string(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) throw ConfigError(field, "expected a string");
  return node.Scalar();
}

std::vector<double> parse_doubles(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence()) throw ConfigError(field, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(parse_double(node[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

// Mapping reader that rejects keys nobody asked for.
class Section {
 public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(path_, "expected a mapping");
  }

  YAML::Node take(const std::string& key) {
    seen_.insert(key);
    if (!node_ || node_.IsNull()) return YAML::Node();
    return node_[key];
  }
  std::string field(const std::string& key) const { return join(path_, key); }
  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  void opt(const std::string& key, double& out) {
    if (auto n = take(key)) out = parse_double(n, field(key));
  }
  void opt(const std::string& key, int& out) {
    if (auto n = take(key)) out = parse_int<int>(n, field(key));
  }
  void opt(const std::string& key, std::int64_t& out) {
    if (auto n = take(key)) out = parse_int<std::int64_t>(n, field(key));
  }
  void opt(const std::string& key, std::uint64_t& out) {
    if (auto n = take(key)) out = parse_int<std::uint64_t>(n, field(key));
  }
  void opt(const std::string& key, std::string& out) {
    if (auto n = take(key)) out = parse_string(n, field(key));
  }
  void opt(const std::string& key, std::vector<double>& out) {
    if (auto n = take(key)) out = parse_doubles(n, field(key));
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

// ---- structured fields -----------------------------------------------------

ChannelModel parse_channel(const YAML::Node& node, const std::string& path, ChannelModel fallback) {
  Section sec(node, path);
  const bool list = sec.has("erasures");
  const bool uniform = sec.has("epsilon") || sec.has("receivers");
  if (list && uniform) {
    throw ConfigError(path, "give either erasures or epsilon/receivers, not both");
  }
  try {
    if (list) {
      std::vector<double> e;
      sec.opt("erasures", e);
      sec.finish();
      return ChannelModel(std::move(e));
    }
    double eps = fallback.worst_erasure();
    int n = fallback.receivers();
    sec.opt("epsilon", eps);
    sec.opt("receivers", n);
    sec.finish();
    if (n < 1) throw ConfigError(join(path, "receivers"), "must be >= 1");
    if (!(eps >= 0.0 && eps <= 1.0)) throw ConfigError(join(path, "epsilon"), "must lie in [0, 1]");
    if (!uniform) return fallback;
    return ChannelModel::homogeneous(eps, n);
  } catch (const std::domain_error& e) {
    throw ConfigError(path, e.what());
  }
}

PolicyKind parse_policy(const YAML::Node& node, const std::string& path) {
  if (node.IsScalar()) return policy_from_name(parse_string(node, path));
  Section sec(node, path);
  std::string kind = "optimal";
  sec.opt("kind", kind);
  PolicyKind policy;
  try {
    policy = policy_from_name(kind);
  } catch (const ConfigError&) {
    throw ConfigError(sec.field("kind"), "unknown policy '" + kind + "'");
  }
  if (auto* v = std::get_if<VarianceConstrainedPolicy>(&policy)) {
    sec.opt("variance_bound", v->variance_bound);
  }
  if (auto* l = std::get_if<LearningPolicy>(&policy)) {
    sec.opt("delta", l->delta);
    sec.opt("eps_init", l->eps_init);
  }
  sec.finish();
  return policy;
}

FlowSpec parse_flow(const YAML::Node& node, const std::string& path, int index) {
  Section sec(node, path);
  FlowSpec f;
  f.id = index;
  sec.opt("id", f.id);
  sec.opt("lambda", f.lambda);
  sec.opt("q", f.q);
  sec.opt("w", f.w);
  if (auto ch = sec.take("channel")) f.channel = parse_channel(ch, sec.field("channel"), f.channel);
  if (auto arr = sec.take("arrivals")) {
    Section a(arr, sec.field("arrivals"));
    std::string kind = "binomial";
    a.opt("kind", kind);
    if (kind == "binomial") {
      f.arrivals.kind = ArrivalKind::kBinomial;
    } else if (kind == "poisson") {
      f.arrivals.kind = ArrivalKind::kPoisson;
    } else {
      throw ConfigError(a.field("kind"), "expected binomial or poisson");
    }
    a.opt("trials", f.arrivals.trials);
    a.finish();
  }
  sec.finish();
  return f;
}

// ---- emitting --------------------------------------------------------------

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  return format_double(v);
}

void emit_doubles(YAML::Emitter& out, std::span<const double> values) {
  out << YAML::Flow << YAML::BeginSeq;
  for (double v : values) out << num(v);
  out << YAML::EndSeq;
}

void emit_channel(YAML::Emitter& out, const ChannelModel& channel) {
  out << YAML::BeginMap;
  if (channel.is_homogeneous()) {
    out << YAML::Key << "epsilon" << YAML::Value << num(channel.worst_erasure());
    out << YAML::Key << "receivers" << YAML::Value << channel.receivers();
  } else {
    out << YAML::Key << "erasures" << YAML::Value;
    emit_doubles(out, channel.erasures());
  }
  out << YAML::EndMap;
}

void emit_policy(YAML::Emitter& out, const PolicyKind& policy) {
  out << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << policy_name(policy);
  if (const auto* v = std::get_if<VarianceConstrainedPolicy>(&policy)) {
    out << YAML::Key << "variance_bound" << YAML::Value << num(v->variance_bound);
  }
  if (const auto* l = std::get_if<LearningPolicy>(&policy)) {
    out << YAML::Key << "delta" << YAML::Value << num(l->delta);
    out << YAML::Key << "eps_init" << YAML::Value << num(l->eps_init);
  }
  out << YAML::EndMap;
}

void emit_flow(YAML::Emitter& out, const FlowSpec& f) {
  out << YAML::BeginMap;
  out << YAML::Key << "id" << YAML::Value << f.id;
  out << YAML::Key << "lambda" << YAML::Value << num(f.lambda);
  out << YAML::Key << "q" << YAML::Value << num(f.q);
  out << YAML::Key << "w" << YAML::Value << num(f.w);
  out << YAML::Key << "channel" << YAML::Value;
  emit_channel(out, f.channel);
  out << YAML::Key << "arrivals" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value
      << (f.arrivals.kind == ArrivalKind::kPoisson ? "poisson" : "binomial");
  out << YAML::Key << "trials" << YAML::Value << f.arrivals.trials;
  out << YAML::EndMap << YAML::EndMap;
}

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

void check_probabilities(const std::vector<double>& values, const std::string& field) {
  for (double v : values) require(v >= 0.0 && v <= 1.0, field, "values must lie in [0, 1]");
}

}  // namespace

std::string experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kSolve: return "solve";
    case ExperimentKind::kSimulate: return "simulate";
    case ExperimentKind::kLearn: return "learn";
    case ExperimentKind::kMultiflow: return "multiflow";
    case ExperimentKind::kRegion: return "region";
    case ExperimentKind::kThreshold: return "threshold";
  }
  return "solve";
}

ExperimentKind experiment_from_name(std::string_view name) {
  for (auto k : {ExperimentKind::kSolve, ExperimentKind::kSimulate, ExperimentKind::kLearn,
                 ExperimentKind::kMultiflow, ExperimentKind::kRegion, ExperimentKind::kThreshold}) {
    if (experiment_name(k) == name) return k;
  }
  throw ConfigError("experiment", "unknown experiment '" + std::string(name) + "'");
}

ExperimentConfig parse_config(std::string_view yaml) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::Exception& e) {
    throw ConfigError("", std::string("malformed YAML: ") + e.what());
  }
  ExperimentConfig c;
  Section top(root, "");
  std::string kind = experiment_name(c.kind);
  top.opt("experiment", kind);
  c.kind = experiment_from_name(kind);
  top.opt("seed", c.seed);
  top.opt("output_dir", c.output_dir);
  top.opt("horizon", c.horizon);
  if (auto n = top.take("channel")) c.channel = parse_channel(n, "channel", c.channel);
  if (auto n = top.take("policy")) c.policy = parse_policy(n, "policy");

  if (auto n = top.take("solve")) {
    Section s(n, "solve");
    s.opt("epsilon_grid", c.solve.epsilon_grid);
    s.finish();
  }
  if (auto n = top.take("simulate")) {
    Section s(n, "simulate");
    if (auto p = s.take("policies")) {
      require(p.IsSequence(), "simulate.policies", "expected a list");
      c.simulate.policies.clear();
      for (std::size_t i = 0; i < p.size(); ++i) {
        c.simulate.policies.push_back(
            parse_policy(p[i], "simulate.policies[" + std::to_string(i) + "]"));
      }
    }
    s.opt("epsilon_grid", c.simulate.epsilon_grid);
    s.opt("replications", c.simulate.replications);
    s.finish();
  }
  if (auto n = top.take("learn")) {
    Section s(n, "learn");
    s.opt("deltas", c.learn.deltas);
    s.opt("frames", c.learn.frames);
    s.finish();
  }
  if (auto n = top.take("multiflow")) {
    Section s(n, "multiflow");
    if (auto fl = s.take("flows")) {
      require(fl.IsSequence() || fl.IsNull(), "multiflow.flows", "expected a list");
      c.multiflow.flows.clear();
      for (std::size_t i = 0; i < fl.size(); ++i) {
        c.multiflow.flows.push_back(
            parse_flow(fl[i], "multiflow.flows[" + std::to_string(i) + "]", static_cast<int>(i)));
      }
    }
    s.opt("rho", c.multiflow.rho);
    s.opt("frames", c.multiflow.frames);
    s.opt("lambda_grid", c.multiflow.lambda_grid);
    s.opt("sweep_frames", c.multiflow.sweep_frames);
    s.opt("slope_threshold", c.multiflow.slope_threshold);
    std::string service = "backlog_aware";
    s.opt("service", service);
    if (service == "backlog_aware") {
      c.multiflow.service = ServiceModel::kBacklogAware;
    } else if (service == "saturated") {
      c.multiflow.service = ServiceModel::kSaturated;
    } else {
      throw ConfigError("multiflow.service", "expected backlog_aware or saturated");
    }
    s.finish();
  }
  if (auto n = top.take("region")) {
    Section s(n, "region");
    s.opt("q_grid", c.region.q_grid);
    s.opt("lambda", c.region.lambda);
    s.opt("frames", c.region.frames);
    s.finish();
  }
  if (auto n = top.take("threshold")) {
    Section s(n, "threshold");
    s.opt("t_min", c.threshold.t_min);
    s.opt("t_max", c.threshold.t_max);
    s.opt("n_min", c.threshold.n_min);
    s.opt("n_max", c.threshold.n_max);
    s.finish();
  }
  top.finish();
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "experiment" << YAML::Value << experiment_name(c.kind);
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "output_dir" << YAML::Value << YAML::DoubleQuoted << c.output_dir;
  out << YAML::Key << "horizon" << YAML::Value << c.horizon;
  out << YAML::Key << "channel" << YAML::Value;
  emit_channel(out, c.channel);
  out << YAML::Key << "policy" << YAML::Value;
  emit_policy(out, c.policy);

  out << YAML::Key << "solve" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "epsilon_grid" << YAML::Value;
  emit_doubles(out, c.solve.epsilon_grid);
  out << YAML::EndMap;

  out << YAML::Key << "simulate" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "policies" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : c.simulate.policies) emit_policy(out, p);
  out << YAML::EndSeq;
  out << YAML::Key << "epsilon_grid" << YAML::Value;
  emit_doubles(out, c.simulate.epsilon_grid);
  out << YAML::Key << "replications" << YAML::Value << c.simulate.replications;
  out << YAML::EndMap;

  out << YAML::Key << "learn" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "deltas" << YAML::Value;
  emit_doubles(out, c.learn.deltas);
  out << YAML::Key << "frames" << YAML::Value << c.learn.frames;
  out << YAML::EndMap;

  const auto& m = c.multiflow;
  out << YAML::Key << "multiflow" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "flows" << YAML::Value << YAML::BeginSeq;
  for (const auto& f : m.flows) emit_flow(out, f);
  out << YAML::EndSeq;
  out << YAML::Key << "rho" << YAML::Value << num(m.rho);
  out << YAML::Key << "frames" << YAML::Value << m.frames;
  out << YAML::Key << "lambda_grid" << YAML::Value;
  emit_doubles(out, m.lambda_grid);
  out << YAML::Key << "sweep_frames" << YAML::Value << m.sweep_frames;
  out << YAML::Key << "slope_threshold" << YAML::Value << num(m.slope_threshold);
  out << YAML::Key << "service" << YAML::Value
      << (m.service == ServiceModel::kSaturated ? "saturated" : "backlog_aware");
  out << YAML::EndMap;

  out << YAML::Key << "region" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "q_grid" << YAML::Value;
  emit_doubles(out, c.region.q_grid);
  out << YAML::Key << "lambda" << YAML::Value << num(c.region.lambda);
  out << YAML::Key << "frames" << YAML::Value << c.region.frames;
  out << YAML::EndMap;

  out << YAML::Key << "threshold" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "t_min" << YAML::Value << c.threshold.t_min;
  out << YAML::Key << "t_max" << YAML::Value << c.threshold.t_max;
  out << YAML::Key << "n_min" << YAML::Value << c.threshold.n_min;
  out << YAML::Key << "n_max" << YAML::Value << c.threshold.n_max;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void validate_config(const ExperimentConfig& c) {
  require(!c.output_dir.empty(), "output_dir", "must not be empty");
  require(c.horizon >= 0, "horizon", "must be >= 0");
  require(c.horizon <= 100000, "horizon", "must be <= 100000");
  validate_policy(c.policy);

  switch (c.kind) {
    case ExperimentKind::kSolve:
      check_probabilities(c.solve.epsilon_grid, "solve.epsilon_grid");
      break;
    case ExperimentKind::kSimulate:
      require(c.horizon >= 1, "horizon", "simulation needs T >= 1");
      require(!c.simulate.policies.empty(), "simulate.policies", "must not be empty");
      require(!c.simulate.epsilon_grid.empty(), "simulate.epsilon_grid", "must not be empty");
      check_probabilities(c.simulate.epsilon_grid, "simulate.epsilon_grid");
      require(c.simulate.replications >= 1, "simulate.replications", "must be >= 1");
      for (const auto& p : c.simulate.policies) {
        require(!std::holds_alternative<LearningPolicy>(p), "simulate.policies",
                "learning runs use the learn experiment");
        validate_policy(p);
      }
      break;
    case ExperimentKind::kLearn:
      require(c.horizon >= 1, "horizon", "learning needs T >= 1");
      require(std::holds_alternative<LearningPolicy>(c.policy), "policy.kind",
              "learn experiment needs the learning policy");
      require(c.learn.frames >= 1, "learn.frames", "must be >= 1");
      require(!c.learn.deltas.empty(), "learn.deltas", "must not be empty");
      for (double d : c.learn.deltas) require(d >= 0.0, "learn.deltas", "values must be >= 0");
      require(c.channel.is_homogeneous(), "channel",
              "learning estimates a single erasure probability; use epsilon/receivers");
      break;
    case ExperimentKind::kMultiflow:
    case ExperimentKind::kRegion: {
      const auto& m = c.multiflow;
      require(c.horizon >= 1, "horizon", "multi-flow runs need T >= 1");
      require(m.rho > 0.0 && std::isfinite(m.rho), "multiflow.rho", "must be positive");
      require(m.frames >= 1, "multiflow.frames", "must be >= 1");
      require(m.sweep_frames >= 1, "multiflow.sweep_frames", "must be >= 1");
      require(m.slope_threshold >= 0.0, "multiflow.slope_threshold", "must be >= 0");
      for (double l : m.lambda_grid) require(l >= 0.0, "multiflow.lambda_grid", "values must be >= 0");
      std::set<int> ids;
      for (std::size_t i = 0; i < m.flows.size(); ++i) {
        const std::string path = "multiflow.flows[" + std::to_string(i) + "]";
        try {
          validate_flow(m.flows[i], c.horizon);
        } catch (const ConfigError& e) {
          const auto dot = e.field().find('.');
          throw ConfigError(path + (dot == std::string::npos ? "" : e.field().substr(dot)),
                            e.message());
        }
        require(ids.insert(m.flows[i].id).second, path + ".id", "flow ids must be unique");
      }
      if (c.kind == ExperimentKind::kRegion) {
        require(m.flows.size() == 2, "multiflow.flows", "region sweeps need exactly two flows");
        require(!c.region.q_grid.empty(), "region.q_grid", "must not be empty");
        check_probabilities(c.region.q_grid, "region.q_grid");
        require(c.region.lambda >= 0.0, "region.lambda", "must be >= 0");
        require(c.region.frames >= 1, "region.frames", "must be >= 1");
      }
      break;
    }
    case ExperimentKind::kThreshold:
      require(c.threshold.t_min >= 1, "threshold.t_min", "must be >= 1");
      require(c.threshold.t_max >= c.threshold.t_min, "threshold.t_max", "must be >= t_min");
      require(c.threshold.n_min >= 1, "threshold.n_min", "must be >= 1");
      require(c.threshold.n_max >= c.threshold.n_min, "threshold.n_max", "must be >= n_min");
      break;
  }
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ncsched
