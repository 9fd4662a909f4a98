#include "lanechange/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace lanechange::config {
namespace {

/// Typed access to one TOML table that remembers which keys were read, so
/// leftovers can be reported as unknown.
class Reader {
 public:
  Reader(const toml::table& table, std::string path) : table_(table), path_(std::move(path)) {}

  template <typename T>
  void get(std::string_view key, T& out) {
    const toml::node* node = table_.get(key);
    seen_.insert(std::string(key));
    if (!node) return;
    std::optional<T> v;
    if constexpr (std::is_same_v<T, double>) {
      if (node->is_number()) v = node->value<double>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (auto i = node->value<std::int64_t>(); i && *i >= 0) v = static_cast<std::uint64_t>(*i);
    } else {
      v = node->value<T>();
    }
    if (!v) throw ConfigError(where(key) + ": wrong type");
    out = *v;
  }

  template <typename T>
  void get(std::string_view key, std::optional<T>& out) {
    if (!table_.get(key)) {
      seen_.insert(std::string(key));
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  template <typename T>
  void require(std::string_view key, T& out) {
    if (!table_.get(key)) throw ConfigError(where(key) + ": missing");
    get(key, out);
  }

  /// Nested table, or nullptr when absent.
  const toml::table* table(std::string_view key) {
    seen_.insert(std::string(key));
    const toml::node* node = table_.get(key);
    if (!node) return nullptr;
    if (!node->is_table()) throw ConfigError(where(key) + ": expected a table");
    return node->as_table();
  }

  const toml::array* array(std::string_view key) {
    seen_.insert(std::string(key));
    const toml::node* node = table_.get(key);
    if (!node) return nullptr;
    if (!node->is_array()) throw ConfigError(where(key) + ": expected an array");
    return node->as_array();
  }

  std::string where(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  void finish() const {
    for (const auto& [key, _] : table_) {
      if (!seen_.count(std::string(key.str()))) {
        throw ConfigError("unknown key '" + where(key.str()) + "'");
      }
    }
  }

 private:
  const toml::table& table_;
  std::string path_;
  std::set<std::string> seen_;
};

toml::table parse_text(std::string_view text) {
  try {
    return toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML syntax error at line " << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void read_params(Reader& parent, ManeuverParams& p) {
  const toml::table* t = parent.table("params");
  if (!t) return;
  Reader r(*t, "params");
  r.get("alpha", p.alpha);
  r.get("beta", p.beta);
  r.get("v_d", p.v_d);
  r.get("delta_tol", p.delta_tol);
  r.get("d_start", p.d_start);
  r.get("T_th", p.T_th);
  r.get("D_th", p.D_th);
  r.get("gamma", p.gamma);
  r.get("lambda_tf", p.lambda_tf);
  r.get("L_f", p.L_f);
  r.get("L_r", p.L_r);
  r.get("t_lat", p.t_lat);
  r.get("relaxation", p.relaxation);
  r.get("selfish_fallback", p.selfish_fallback);
  r.get("abort_wait", p.abort_wait);
  r.get("relax_seed_duration", p.relax_seed_duration);
  r.finish();
}

void read_bounds(Reader& parent, ControlBounds& b, SpeedBounds& s) {
  if (const toml::table* t = parent.table("bounds")) {
    Reader r(*t, "bounds");
    r.get("u_min", b.u_min);
    r.get("u_max", b.u_max);
    r.finish();
  }
  if (const toml::table* t = parent.table("speeds")) {
    Reader r(*t, "speeds");
    r.get("v_min", s.v_min);
    r.get("v_max", s.v_max);
    r.finish();
  }
}

void read_normal(Reader& parent, std::string_view key, sim::Normal& n) {
  const toml::table* t = parent.table(key);
  if (!t) return;
  Reader r(*t, parent.where(key));
  r.get("mean", n.mean);
  r.get("std", n.std);
  r.finish();
}

sim::Mode read_mode(Reader& r, std::string_view key, sim::Mode fallback) {
  std::string name(sim::to_string(fallback));
  r.get(key, name);
  auto mode = sim::parse_mode(name);
  if (!mode) throw ConfigError(r.where(key) + ": unknown mode '" + name + "'");
  return *mode;
}

/// Re-raises invariant violations from validate() as configuration errors.
template <typename F>
void check(F&& validate) {
  try {
    validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

sim::SimConfig ExperimentSpec::cell_config(const Cell& cell, std::uint64_t seed) const {
  sim::SimConfig c = base;
  c.seed = seed;
  c.mode = cell.mode;
  if (cell.gamma) c.params.gamma = *cell.gamma;
  if (cell.relaxation) c.params.relaxation = *cell.relaxation;
  if (cell.selfish_fallback) c.params.selfish_fallback = *cell.selfish_fallback;
  return c;
}

CaseSpec parse_case(std::string_view text) {
  const toml::table root = parse_text(text);
  Reader r(root, "");
  CaseSpec c;
  r.get("name", c.name);
  r.get("t0", c.t0);
  r.require("x_U", c.U.x);
  r.require("v_U", c.U.v);
  r.require("x_C", c.C.x);
  r.require("v_C", c.C.v);
  r.get("d_start", c.d_start);
  r.get("relaxed", c.relaxed);
  r.get("tf", c.tf);
  r.get("sample_dt", c.sample_dt);
  if (const toml::table* t = r.table("safety")) {
    Reader s(*t, "safety");
    s.get("delta", c.safety.delta);
    s.get("phi", c.safety.phi);
    s.finish();
  }
  read_params(r, c.params);
  read_bounds(r, c.bounds, c.speeds);
  r.finish();

  check([&] {
    c.params.validate();
    c.bounds.validate();
    c.speeds.validate();
    c.safety.validate();
  });
  if (c.relaxed && !(c.tf > c.t0)) throw ConfigError("relaxed case needs tf > t0");
  if (!(c.sample_dt > 0.0)) throw ConfigError("sample_dt must be positive");
  if (!(c.U.x > c.C.x)) throw ConfigError("U must be ahead of C");
  return c;
}

ExperimentSpec parse_experiment(std::string_view text) {
  const toml::table root = parse_text(text);
  Reader r(root, "");
  ExperimentSpec e;
  r.get("name", e.name);
  r.get("output_dir", e.output_dir);

  if (const toml::array* seeds = r.array("seeds")) {
    for (const toml::node& n : *seeds) {
      auto v = n.value<std::int64_t>();
      if (!v || *v < 0) throw ConfigError("seeds: expected non-negative integers");
      e.seeds.push_back(static_cast<std::uint64_t>(*v));
    }
  }
  sim::SimConfig& b = e.base;
  if (const toml::table* t = r.table("sim")) {
    Reader s(*t, "sim");
    s.get("highway_length", b.highway_length);
    s.get("flow", b.flow);
    s.get("v_desired_spawn", b.v_desired_spawn);
    s.get("vU", b.vU);
    s.get("dt", b.dt);
    s.get("duration", b.duration);
    s.get("vehicle_length", b.vehicle_length);
    s.get("measurement_point", b.measurement_point);
    s.get("warmup", b.warmup);
    s.get("measurement_window", b.measurement_window);
    s.get("delta", b.delta);
    s.get("u_spawn_time", b.u_spawn_time);
    s.get("u_spawn_x", b.u_spawn_x);
    s.get("penetration", b.penetration);
    s.get("trace_interval", b.trace_interval);
    std::string rule = "constant_speed";
    s.get("cooperative_set", rule);
    if (rule == "constant_speed") {
      b.set_rule = CooperativeSetRule::kConstantSpeed;
    } else if (rule == "minmax") {
      b.set_rule = CooperativeSetRule::kMinMax;
    } else {
      throw ConfigError("sim.cooperative_set: expected 'constant_speed' or 'minmax'");
    }
    read_normal(s, "d_start", b.d_start);
    read_normal(s, "phi", b.phi);
    s.finish();
  }
  read_params(r, b.params);
  read_bounds(r, b.bounds, b.speeds);

  if (const toml::array* cells = r.array("cells")) {
    for (const toml::node& n : *cells) {
      if (!n.is_table()) throw ConfigError("cells: expected tables");
      Reader c(*n.as_table(), "cells");
      Cell cell;
      cell.mode = read_mode(c, "mode", sim::Mode::kSystemCentric);
      cell.label = std::string(sim::to_string(cell.mode));
      c.get("label", cell.label);
      c.get("gamma", cell.gamma);
      c.get("relaxation", cell.relaxation);
      c.get("selfish_fallback", cell.selfish_fallback);
      c.finish();
      e.cells.push_back(cell);
    }
  }
  r.finish();

  if (e.seeds.empty()) throw ConfigError("experiment needs at least one seed");
  if (e.cells.empty()) throw ConfigError("experiment needs at least one cell");
  std::set<std::string> labels;
  for (const Cell& cell : e.cells) {
    if (!labels.insert(cell.label).second) throw ConfigError("duplicate cell label " + cell.label);
    check([&] { e.cell_config(cell, e.seeds.front()).validate(); });
  }
  return e;
}

CaseSpec load_case(const std::filesystem::path& path) { return parse_case(slurp(path)); }

ExperimentSpec load_experiment(const std::filesystem::path& path) {
  return parse_experiment(slurp(path));
}

}  // namespace lanechange::config
