// Copyright 2026 The Gibbs Control Authors
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

// Experiment configuration: JSON in, validated settings out. Every error
// names the offending field and the line it sits on.

#ifndef GIBBS_CONTROL_HARNESS_CONFIG_HPP_
#define GIBBS_CONTROL_HARNESS_CONFIG_HPP_

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gibbs_control/core.hpp"
#include "gibbs_control/diffusion.hpp"
#include "gibbs_control/envs.hpp"

namespace gibbs::harness {

using Json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Source lines of every key and array element

/// Maps dotted paths ("mppi.temperature", "diffusion.data[2]") to the
/// 1-based line where the key or element starts. Assumes text that already
/// parsed as JSON.
inline std::map<std::string, std::size_t> json_key_lines(std::string_view text) {
  struct Frame {
    bool array = false;
    std::string prefix;
    bool expecting = true;  // key (object) or element (array)
    std::size_t index = 0;
    std::string key;
  };
  std::map<std::string, std::size_t> lines;
  std::vector<Frame> stack;
  std::size_t line = 1;
  auto join = [](const std::string& a, const std::string& b) {
    return a.empty() ? b : a + "." + b;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == ':') continue;

    std::string value_path;
    if (!stack.empty()) {
      Frame& f = stack.back();
      if (f.array) {
        value_path = f.prefix + "[" + std::to_string(f.index) + "]";
        if (f.expecting && c != ']') {
          lines.emplace(value_path, line);
          f.expecting = false;
        }
      } else {
        value_path = join(f.prefix, f.key);
      }
    }

    if (c == '"') {
      std::string s;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\') ++i;
        if (i < text.size()) s += text[i];
      }
      if (!stack.empty() && !stack.back().array && stack.back().expecting) {
        stack.back().key = s;
        stack.back().expecting = false;
        lines.emplace(join(stack.back().prefix, s), line);
      }
    } else if (c == '{' || c == '[') {
      stack.push_back({c == '[', value_path, true, 0, {}});
    } else if (c == '}' || c == ']') {
      if (!stack.empty()) stack.pop_back();
    } else if (c == ',') {
      if (!stack.empty()) {
        stack.back().expecting = true;
        if (stack.back().array) ++stack.back().index;
      }
    }
  }
  return lines;
}

/// A parsed config document plus where its fields came from.
struct ConfigSource {
  std::string name;
  Json document;
  std::map<std::string, std::size_t> lines;

  // "name:line" for the path, falling back to its nearest located parent.
  std::string where(std::string path) const {
    while (true) {
      if (auto it = lines.find(path); it != lines.end()) {
        return name + ":" + std::to_string(it->second);
      }
      const auto cut = path.find_last_of(".[");
      if (cut == std::string::npos) return name + ":1";
      path.resize(cut);
    }
  }

  [[noreturn]] void fail(const std::string& path, const std::string& message) const {
    throw ConfigError(where(path) + ": " + (path.empty() ? "config" : path) + ": " +
                      message);
  }
};

inline ConfigSource parse_config_text(const std::string& text,
                                      const std::string& name) {
  ConfigSource src;
  src.name = name;
  try {
    src.document = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min(e.byte, text.size()); ++i) {
      if (text[i] == '\n') ++line;
    }
    throw ConfigError(name + ":" + std::to_string(line) + ": invalid JSON: " +
                      e.what());
  }
  src.lines = json_key_lines(text);
  if (!src.document.is_object()) src.fail("", "top level must be an object");
  return src;
}

/// Typed, strict access to one JSON object. finish() rejects keys that were
/// never read.
class Section {
 public:
  Section(const ConfigSource& src, const Json& node, std::string path)
      : src_(src), node_(node), path_(std::move(path)) {
    if (!node_.is_object()) src_.fail(path_, "must be an object");
  }

  std::string path_of(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    src_.fail(path_of(key), message);
  }
  bool has(const std::string& key) const { return node_.contains(key); }

  double number(const std::string& key, double fallback) {
    const Json* v = lookup(key);
    if (!v) return fallback;
    if (!v->is_number()) fail(key, "must be a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const Json* v = lookup(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) fail(key, "must be a nonnegative integer");
    return v->get<std::uint64_t>();
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    return static_cast<std::size_t>(unsigned_integer(key, fallback));
  }

  bool flag(const std::string& key, bool fallback) {
    const Json* v = lookup(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(key, "must be true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const Json* v = lookup(key);
    if (!v) return fallback;
    if (!v->is_string()) fail(key, "must be a string");
    return v->get<std::string>();
  }

  Vector numbers(const std::string& key, const Vector& fallback) {
    const Json* v = lookup(key);
    if (!v) return fallback;
    if (v->is_number()) return {number_at(*v, key)};
    if (!v->is_array() || v->empty()) fail(key, "must be a non-empty number array");
    Vector out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      out.push_back(number_at((*v)[i], key + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key,
                                   const std::vector<std::string>& fallback) {
    const Json* v = lookup(key);
    if (!v) return fallback;
    if (!v->is_array() || v->empty()) fail(key, "must be a non-empty string array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_string()) {
        fail(key + "[" + std::to_string(i) + "]", "must be a string");
      }
      out.push_back((*v)[i].get<std::string>());
    }
    return out;
  }

  // Array of points; bare numbers become 1D points.
  std::vector<Vector> points(const std::string& key,
                             const std::vector<Vector>& fallback) {
    const Json* v = lookup(key);
    if (!v) return fallback;
    if (!v->is_array() || v->empty()) fail(key, "must be a non-empty array");
    std::vector<Vector> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string at = key + "[" + std::to_string(i) + "]";
      const Json& e = (*v)[i];
      if (e.is_number()) {
        out.push_back({number_at(e, at)});
      } else if (e.is_array() && !e.empty()) {
        Vector p;
        for (std::size_t j = 0; j < e.size(); ++j) {
          p.push_back(number_at(e[j], at + "[" + std::to_string(j) + "]"));
        }
        out.push_back(std::move(p));
      } else {
        fail(at, "must be a number or a non-empty number array");
      }
      if (out.back().size() != out.front().size()) {
        fail(at, "all points must have the same dimension");
      }
    }
    return out;
  }

  std::optional<Section> child(const std::string& key) {
    const Json* v = lookup(key);
    if (!v) return std::nullopt;
    return Section(src_, *v, path_of(key));
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!read_.count(it.key())) fail(it.key(), "unknown field");
    }
  }

 private:
  const Json* lookup(const std::string& key) {
    read_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  double number_at(const Json& v, const std::string& key) const {
    if (!v.is_number()) fail(key, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }

  const ConfigSource& src_;
  const Json& node_;
  std::string path_;
  std::set<std::string> read_;
};

// ---------------------------------------------------------------------------
// Settings

enum class Method { kMppi, kMppiRegularized, kPg, kPgExp, kDiffuse, kPlan, kVerify };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kMppi: return "mppi";
    case Method::kMppiRegularized: return "mppi-regularized";
    case Method::kPg: return "pg";
    case Method::kPgExp: return "pg-exp";
    case Method::kDiffuse: return "diffuse";
    case Method::kPlan: return "plan";
    case Method::kVerify: return "verify";
  }
  return "?";
}

// CLI subcommand that runs a method.
inline const char* subcommand_of(Method m) {
  switch (m) {
    case Method::kMppi:
    case Method::kMppiRegularized: return "mppi";
    case Method::kPg:
    case Method::kPgExp: return "pg";
    default: return to_string(m);
  }
}

inline std::optional<Method> parse_method(const std::string& s) {
  for (Method m : {Method::kMppi, Method::kMppiRegularized, Method::kPg,
                   Method::kPgExp, Method::kDiffuse, Method::kPlan, Method::kVerify}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

struct EnvironmentSettings {
  std::string name = "pendulum";
  DoubleIntegratorParams double_integrator;
  PendulumParams pendulum;
  NavigationParams navigation;
  std::optional<Vector> initial_state;

  Environment build() const {
    Environment env = name == "double_integrator" ? gibbs::double_integrator(double_integrator)
                      : name == "pendulum"        ? gibbs::pendulum(pendulum)
                                                  : point_mass_navigation(navigation);
    if (initial_state) env.initial_state = *initial_state;
    return env;
  }
};

namespace detail {

template <typename F>
void visit_params(DoubleIntegratorParams& p, F&& f) {
  f("dt", p.dt);
  f("position_weight", p.position_weight);
  f("velocity_weight", p.velocity_weight);
  f("control_weight", p.control_weight);
  f("terminal_weight", p.terminal_weight);
  f("process_noise", p.process_noise);
}

template <typename F>
void visit_params(PendulumParams& p, F&& f) {
  f("dt", p.dt);
  f("gravity", p.gravity);
  f("length", p.length);
  f("angle_weight", p.angle_weight);
  f("velocity_weight", p.velocity_weight);
  f("control_weight", p.control_weight);
  f("terminal_weight", p.terminal_weight);
  f("process_noise", p.process_noise);
}

template <typename F>
void visit_params(NavigationParams& p, F&& f) {
  f("dt", p.dt);
  f("start", p.start);
  f("goal", p.goal);
  f("obstacle_center", p.obstacle.center);
  f("obstacle_radius", p.obstacle.radius);
  f("goal_weight", p.goal_weight);
  f("control_weight", p.control_weight);
  f("terminal_weight", p.terminal_weight);
  f("obstacle_weight", p.obstacle_weight);
  f("obstacle_sharpness", p.obstacle_sharpness);
  f("process_noise", p.process_noise);
}

template <typename P>
void read_params(Section& s, P& p) {
  visit_params(p, [&s](const char* key, auto& field) {
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, double>) {
      field = s.number(key, field);
      if (field < 0.0) s.fail(key, "must be nonnegative");
    } else {
      const Vector v = s.numbers(key, Vector(field.begin(), field.end()));
      if (v.size() != 2) s.fail(key, "must have 2 entries");
      field = {v[0], v[1]};
    }
  });
  visit_params(p, [&s](const char* key, auto& field) {
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, double>) {
      const std::string k = key;
      if ((k == "dt" || k == "length" || k == "obstacle_radius" ||
           k == "obstacle_sharpness") && !(field > 0.0)) {
        s.fail(key, "must be positive");
      }
    }
  });
}

template <typename P>
Json params_json(P p) {
  Json j = Json::object();
  visit_params(p, [&j](const char* key, auto& field) { j[key] = field; });
  return j;
}

inline void require_positive(Section& s, const std::string& key, double v) {
  if (!(v > 0.0)) s.fail(key, "must be positive");
}

inline void require_at_least(Section& s, const std::string& key, std::size_t v,
                             std::size_t lo) {
  if (v < lo) s.fail(key, "must be >= " + std::to_string(lo));
}

inline void require_positive_all(Section& s, const std::string& key, const Vector& v) {
  for (double x : v) {
    if (!(x > 0.0)) s.fail(key, "entries must be positive");
  }
}

}  // namespace detail

struct MppiSettings {
  std::size_t samples = 1024;
  std::size_t horizon = 50;
  std::size_t iterations = 1;
  std::size_t steps = 150;
  double temperature = 1.0;
  Vector variance{4.0};  // per control dimension
};

struct PgSettings {
  std::size_t samples = 256;
  std::size_t horizon = 20;
  std::size_t iterations = 50;
  double temperature = 1.0;
  Vector variance{1.0};
  double learning_rate = 0.1;
};

struct DiffusionSettings {
  DiffusionKind kind = DiffusionKind::kVE;
  SamplerKind sampler = SamplerKind::kAncestral;
  std::size_t steps = 1000;
  double sigma_min = 0.01;
  double sigma_max = 4.0;
  double beta_min = 1e-4;
  double beta_max = 0.02;
  std::vector<Vector> data{{-1.0}, {1.0}};
  double bandwidth = 0.0;
  std::size_t paths = 20000;
  std::size_t dsm_samples = 100000;

  NoiseSchedule schedule() const {
    return kind == DiffusionKind::kVE
               ? NoiseSchedule::ve_geometric(sigma_min, sigma_max, steps)
               : NoiseSchedule::vp_linear(beta_min, beta_max, steps);
  }
};

struct PlannerSettings {
  std::size_t demonstrations = 200;
  double scattered_fraction = 0.5;
  bool randomized_demonstrations = false;
  std::uint64_t demonstration_seed = 20261019;
  double bandwidth = 0.05;
  std::size_t horizon = 4;
  std::size_t window_stride = 2;
  double sigma_min = 0.01;
  double sigma_max = 0.7;
  std::size_t diffusion_steps = 30;
  double guidance_scale = 5.0;
  std::size_t episodes = 50;
  double goal_radius = 0.1;
  std::size_t step_cap = 80;
  std::optional<double> min_success_rate;
};

inline const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names = {
      "gaussian", "jensen", "free-energy", "mppi-equivalence", "pg-identity",
      "score-identity"};
  return names;
}

struct VerifySettings {
  std::vector<std::string> suites{"gaussian"};
};

struct ExperimentConfig {
  Method method = Method::kMppi;
  std::uint64_t seed = 0;
  std::string output_dir = "runs";
  EnvironmentSettings environment;
  MppiSettings mppi;
  PgSettings pg;
  DiffusionSettings diffusion;
  PlannerSettings planner;
  VerifySettings verify;

  bool uses_environment() const {
    return method != Method::kDiffuse && method != Method::kVerify;
  }
};

// ---------------------------------------------------------------------------
// Loading

namespace detail {

inline void read_environment(Section& s, EnvironmentSettings& e, Method method) {
  e.name = s.text("name", method == Method::kPlan ? "navigation" : e.name);
  if (e.name != "double_integrator" && e.name != "pendulum" && e.name != "navigation") {
    s.fail("name", "unknown environment '" + e.name +
                       "' (double_integrator, pendulum, navigation)");
  }
  if (method == Method::kPlan && e.name != "navigation") {
    s.fail("name", "plan requires the navigation environment");
  }
  if (auto p = s.child("params")) {
    if (e.name == "double_integrator") read_params(*p, e.double_integrator);
    if (e.name == "pendulum") read_params(*p, e.pendulum);
    if (e.name == "navigation") read_params(*p, e.navigation);
    p->finish();
  }
  if (s.has("initial_state")) {
    if (method == Method::kPlan) {
      s.fail("initial_state", "plan starts from params.start");
    }
    e.initial_state = s.numbers("initial_state", {});
    if (e.initial_state->size() != 2) s.fail("initial_state", "must have 2 entries");
  }
  s.finish();
}

inline void read_mppi(Section& s, MppiSettings& m, std::size_t control_dim) {
  m.samples = s.count("samples", m.samples);
  m.horizon = s.count("horizon", m.horizon);
  m.iterations = s.count("iterations", m.iterations);
  m.steps = s.count("steps", m.steps);
  m.temperature = s.number("temperature", m.temperature);
  m.variance = s.numbers("variance", control_dim == 2 ? Vector{0.25, 0.25} : m.variance);
  require_at_least(s, "samples", m.samples, 1);
  require_at_least(s, "horizon", m.horizon, 1);
  require_at_least(s, "iterations", m.iterations, 1);
  require_at_least(s, "steps", m.steps, 1);
  require_positive(s, "temperature", m.temperature);
  require_positive_all(s, "variance", m.variance);
  if (m.variance.size() != control_dim) {
    s.fail("variance", "needs " + std::to_string(control_dim) + " entries");
  }
  s.finish();
}

inline void read_pg(Section& s, PgSettings& p, std::size_t control_dim) {
  p.samples = s.count("samples", p.samples);
  p.horizon = s.count("horizon", p.horizon);
  p.iterations = s.count("iterations", p.iterations);
  p.temperature = s.number("temperature", p.temperature);
  p.variance = s.numbers("variance", control_dim == 2 ? Vector{0.25, 0.25} : p.variance);
  p.learning_rate = s.number("learning_rate", p.learning_rate);
  require_at_least(s, "samples", p.samples, 1);
  require_at_least(s, "horizon", p.horizon, 1);
  require_at_least(s, "iterations", p.iterations, 1);
  require_positive(s, "temperature", p.temperature);
  require_positive_all(s, "variance", p.variance);
  require_positive(s, "learning_rate", p.learning_rate);
  if (p.variance.size() != control_dim) {
    s.fail("variance", "needs " + std::to_string(control_dim) + " entries");
  }
  s.finish();
}

inline void read_diffusion(Section& s, DiffusionSettings& d) {
  const std::string kind = s.text("kind", to_string(d.kind));
  if (kind != "ve" && kind != "vp") s.fail("kind", "must be \"ve\" or \"vp\"");
  d.kind = kind == "ve" ? DiffusionKind::kVE : DiffusionKind::kVP;
  const std::string sampler = s.text("sampler", to_string(d.sampler));
  if (sampler != to_string(SamplerKind::kAncestral) &&
      sampler != to_string(SamplerKind::kReverseDiffusion)) {
    s.fail("sampler", "must be \"ancestral\" or \"reverse\"");
  }
  d.sampler = sampler == to_string(SamplerKind::kAncestral)
                  ? SamplerKind::kAncestral
                  : SamplerKind::kReverseDiffusion;
  d.steps = s.count("steps", d.steps);
  d.sigma_min = s.number("sigma_min", d.sigma_min);
  d.sigma_max = s.number("sigma_max", d.sigma_max);
  d.beta_min = s.number("beta_min", d.beta_min);
  d.beta_max = s.number("beta_max", d.beta_max);
  d.data = s.points("data", d.data);
  d.bandwidth = s.number("bandwidth", d.bandwidth);
  d.paths = s.count("paths", d.paths);
  d.dsm_samples = s.count("dsm_samples", d.dsm_samples);
  require_at_least(s, "steps", d.steps, 1);
  require_at_least(s, "paths", d.paths, 2);
  require_at_least(s, "dsm_samples", d.dsm_samples, 2);
  if (d.bandwidth < 0.0) s.fail("bandwidth", "must be nonnegative");
  if (d.kind == DiffusionKind::kVE) {
    require_positive(s, "sigma_min", d.sigma_min);
    if (!(d.sigma_max > d.sigma_min)) s.fail("sigma_max", "must exceed sigma_min");
  } else {
    if (d.beta_min < 0.0) s.fail("beta_min", "must be nonnegative");
    if (!(d.beta_max >= d.beta_min && d.beta_max < 1.0)) {
      s.fail("beta_max", "must lie in [beta_min, 1)");
    }
  }
  s.finish();
}

inline void read_planner(Section& s, PlannerSettings& p) {
  p.demonstrations = s.count("demonstrations", p.demonstrations);
  p.scattered_fraction = s.number("scattered_fraction", p.scattered_fraction);
  p.randomized_demonstrations =
      s.flag("randomized_demonstrations", p.randomized_demonstrations);
  p.demonstration_seed = s.unsigned_integer("demonstration_seed", p.demonstration_seed);
  p.bandwidth = s.number("bandwidth", p.bandwidth);
  p.horizon = s.count("horizon", p.horizon);
  p.window_stride = s.count("window_stride", p.window_stride);
  p.sigma_min = s.number("sigma_min", p.sigma_min);
  p.sigma_max = s.number("sigma_max", p.sigma_max);
  p.diffusion_steps = s.count("diffusion_steps", p.diffusion_steps);
  p.guidance_scale = s.number("guidance_scale", p.guidance_scale);
  p.episodes = s.count("episodes", p.episodes);
  p.goal_radius = s.number("goal_radius", p.goal_radius);
  p.step_cap = s.count("step_cap", p.step_cap);
  if (s.has("min_success_rate")) {
    p.min_success_rate = s.number("min_success_rate", 0.0);
    if (*p.min_success_rate < 0.0 || *p.min_success_rate > 1.0) {
      s.fail("min_success_rate", "must lie in [0, 1]");
    }
  }
  require_at_least(s, "demonstrations", p.demonstrations, 1);
  if (p.scattered_fraction < 0.0 || p.scattered_fraction > 1.0) {
    s.fail("scattered_fraction", "must lie in [0, 1]");
  }
  if (p.bandwidth < 0.0) s.fail("bandwidth", "must be nonnegative");
  require_at_least(s, "horizon", p.horizon, 1);
  require_at_least(s, "window_stride", p.window_stride, 1);
  require_positive(s, "sigma_min", p.sigma_min);
  if (!(p.sigma_max > p.sigma_min)) s.fail("sigma_max", "must exceed sigma_min");
  require_at_least(s, "diffusion_steps", p.diffusion_steps, 1);
  if (p.guidance_scale < 0.0) s.fail("guidance_scale", "must be nonnegative");
  require_at_least(s, "episodes", p.episodes, 1);
  require_positive(s, "goal_radius", p.goal_radius);
  require_at_least(s, "step_cap", p.step_cap, 1);
  s.finish();
}

inline void read_verify(Section& s, VerifySettings& v) {
  v.suites = s.strings("suites", v.suites);
  const auto& known = verify_suite_names();
  for (std::size_t i = 0; i < v.suites.size(); ++i) {
    if (std::find(known.begin(), known.end(), v.suites[i]) == known.end()) {
      s.fail("suites[" + std::to_string(i) + "]", "unknown suite '" + v.suites[i] + "'");
    }
  }
  s.finish();
}

}  // namespace detail

// The section key each method reads.
inline const char* section_key(Method m) {
  switch (m) {
    case Method::kMppi:
    case Method::kMppiRegularized: return "mppi";
    case Method::kPg:
    case Method::kPgExp: return "pg";
    case Method::kDiffuse: return "diffusion";
    case Method::kPlan: return "planner";
    case Method::kVerify: return "verify";
  }
  return "";
}

inline ExperimentConfig load_config(const ConfigSource& src) {
  ExperimentConfig cfg;
  Section top(src, src.document, "");
  if (!top.has("method")) top.fail("method", "missing");
  const std::string method = top.text("method", "");
  const auto m = parse_method(method);
  if (!m) {
    top.fail("method", "unknown method '" + method +
                           "' (mppi, mppi-regularized, pg, pg-exp, diffuse, "
                           "plan, verify)");
  }
  cfg.method = *m;
  cfg.seed = top.unsigned_integer("seed", cfg.seed);
  cfg.output_dir = top.text("output_dir", cfg.output_dir);

  std::size_t control_dim = 1;
  if (cfg.uses_environment()) {
    if (auto env = top.child("environment")) {
      detail::read_environment(*env, cfg.environment, cfg.method);
    } else {
      Json empty = Json::object();
      Section none(src, empty, "environment");
      detail::read_environment(none, cfg.environment, cfg.method);
    }
    control_dim = cfg.environment.build().dynamics.control_dim;
  }

  const std::string key = section_key(cfg.method);
  Json empty = Json::object();
  std::optional<Section> section = top.child(key);
  Section body = section ? *section : Section(src, empty, key);
  switch (cfg.method) {
    case Method::kMppi:
    case Method::kMppiRegularized:
      detail::read_mppi(body, cfg.mppi, control_dim);
      break;
    case Method::kPg:
    case Method::kPgExp:
      detail::read_pg(body, cfg.pg, control_dim);
      break;
    case Method::kDiffuse:
      detail::read_diffusion(body, cfg.diffusion);
      break;
    case Method::kPlan:
      detail::read_planner(body, cfg.planner);
      break;
    case Method::kVerify:
      detail::read_verify(body, cfg.verify);
      break;
  }
  top.finish();
  return cfg;
}

inline ExperimentConfig load_config_text(const std::string& text,
                                         const std::string& name = "config") {
  return load_config(parse_config_text(text, name));
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Resolved snapshot

/// Every setting the run reads, defaults filled in. Loading this back gives
/// the same ExperimentConfig.
inline Json to_json(const ExperimentConfig& cfg) {
  Json j = Json::object();
  j["method"] = to_string(cfg.method);
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  if (cfg.uses_environment()) {
    Json env = Json::object();
    const auto& e = cfg.environment;
    env["name"] = e.name;
    if (e.name == "double_integrator") env["params"] = detail::params_json(e.double_integrator);
    if (e.name == "pendulum") env["params"] = detail::params_json(e.pendulum);
    if (e.name == "navigation") env["params"] = detail::params_json(e.navigation);
    if (e.initial_state) env["initial_state"] = *e.initial_state;
    j["environment"] = env;
  }
  Json s = Json::object();
  switch (cfg.method) {
    case Method::kMppi:
    case Method::kMppiRegularized: {
      const auto& m = cfg.mppi;
      s["samples"] = m.samples;
      s["horizon"] = m.horizon;
      s["iterations"] = m.iterations;
      s["steps"] = m.steps;
      s["temperature"] = m.temperature;
      s["variance"] = m.variance;
      break;
    }
    case Method::kPg:
    case Method::kPgExp: {
      const auto& p = cfg.pg;
      s["samples"] = p.samples;
      s["horizon"] = p.horizon;
      s["iterations"] = p.iterations;
      s["temperature"] = p.temperature;
      s["variance"] = p.variance;
      s["learning_rate"] = p.learning_rate;
      break;
    }
    case Method::kDiffuse: {
      const auto& d = cfg.diffusion;
      s["kind"] = to_string(d.kind);
      s["sampler"] = to_string(d.sampler);
      s["steps"] = d.steps;
      if (d.kind == DiffusionKind::kVE) {
        s["sigma_min"] = d.sigma_min;
        s["sigma_max"] = d.sigma_max;
      } else {
        s["beta_min"] = d.beta_min;
        s["beta_max"] = d.beta_max;
      }
      s["data"] = d.data;
      s["bandwidth"] = d.bandwidth;
      s["paths"] = d.paths;
      s["dsm_samples"] = d.dsm_samples;
      break;
    }
    case Method::kPlan: {
      const auto& p = cfg.planner;
      s["demonstrations"] = p.demonstrations;
      s["scattered_fraction"] = p.scattered_fraction;
      s["randomized_demonstrations"] = p.randomized_demonstrations;
      s["demonstration_seed"] = p.demonstration_seed;
      s["bandwidth"] = p.bandwidth;
      s["horizon"] = p.horizon;
      s["window_stride"] = p.window_stride;
      s["sigma_min"] = p.sigma_min;
      s["sigma_max"] = p.sigma_max;
      s["diffusion_steps"] = p.diffusion_steps;
      s["guidance_scale"] = p.guidance_scale;
      s["episodes"] = p.episodes;
      s["goal_radius"] = p.goal_radius;
      s["step_cap"] = p.step_cap;
      if (p.min_success_rate) s["min_success_rate"] = *p.min_success_rate;
      break;
    }
    case Method::kVerify:
      s["suites"] = cfg.verify.suites;
      break;
  }
  j[section_key(cfg.method)] = s;
  return j;
}

}  // namespace gibbs::harness

#endif  // GIBBS_CONTROL_HARNESS_CONFIG_HPP_
