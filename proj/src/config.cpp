#include "setquant/config.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace setquant {

using nlohmann::json;

const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> v{
      "val-delta", "val-eps", "val-eps-delta", "qnt-vs",
      "qnt-dp",    "qnt-ae",  "qnt-spe",       "oracle"};
  return v;
}

const std::vector<std::string>& known_systems() {
  static const std::vector<std::string> v{
      "lead_follow", "three_vehicle", "toy_shift", "toy_shrink",
      "toy_threshold", "toy_two_basins", "flip", "identity"};
  return v;
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> k{
      "system.name", "system.state_box", "system.action_box", "system.facets",
      "system.sv_policy", "system.region", "algorithm", "hyper.epsilon",
      "hyper.beta", "hyper.delta0", "hyper.gamma", "hyper.delta_min",
      "hyper.K", "hyper.N", "hyper.omega_bar", "hyper.dt",
      "hyper.min_feature_scale", "options.prioritized",
      "options.priority_power", "options.replay", "options.adversarial",
      "options.boundary_band", "options.trajectories",
      "options.propose_full_first", "options.oracle_steps",
      "options.seed_point", "seed", "output_dir"};
  return k;
}

Hyper defaults_for(const std::string& system) {
  Hyper h;
  if (system == "lead_follow") {
    h.delta0 = 4.0;
    h.delta_min = 1.0;
    h.K = 40;
    h.N = 2000000;
  } else if (system == "three_vehicle") {
    h.delta0 = 5.0;
    h.delta_min = 2.5;
    h.K = 40;
    h.N = 2000000;
  } else if (system == "toy_threshold") {
    h.delta0 = 2.0;
    h.delta_min = 0.25;
    h.K = 10;
    h.N = 200000;
  } else if (system == "toy_two_basins") {
    // A coarser first cover swallows the unsafe gap together with the
    // basin edges next to it.
    h.delta0 = 0.5;
    h.delta_min = 0.25;
    h.K = 10;
    h.N = 200000;
  } else {
    h.delta0 = 0.5;
    h.delta_min = 0.25;
    h.K = 10;
    h.N = 200000;
  }
  return h;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

[[noreturn]] void parse_error(const std::string& key, const std::string& what) {
  throw ConfigError("E-PARSE", key + ": " + what);
}

[[noreturn]] void domain_error(const std::string& key, const std::string& what) {
  throw ConfigError("E-DOMAIN", key + ": " + what);
}

double get_number(const std::string& key, const json& v) {
  if (!v.is_number()) parse_error(key, "expected a number");
  return v.get<double>();
}

std::size_t get_count(const std::string& key, const json& v) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer()) domain_error(key, "must be non-negative");
  parse_error(key, "expected an integer");
}

bool get_bool(const std::string& key, const json& v) {
  if (!v.is_boolean()) parse_error(key, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const std::string& key, const json& v) {
  if (!v.is_string()) parse_error(key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> get_vector(const std::string& key, const json& v) {
  if (!v.is_array()) parse_error(key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(get_number(key, x));
  return out;
}

BoxRegion get_box(const std::string& key, const json& v) {
  if (!v.is_array() || v.size() != 2)
    parse_error(key, "expected [[lower...], [upper...]]");
  auto lo = get_vector(key, v[0]);
  auto hi = get_vector(key, v[1]);
  try {
    return BoxRegion(std::move(lo), std::move(hi));
  } catch (const std::invalid_argument& e) {
    domain_error(key, e.what());
  }
}

std::vector<FacetClass> get_facets(const std::string& key, const json& v) {
  if (!v.is_array()) parse_error(key, "expected an array of face labels");
  std::vector<FacetClass> out;
  for (const auto& x : v) {
    const auto s = get_string(key, x);
    if (s == "unsafe") out.push_back(FacetClass::Unsafe);
    else if (s == "truncate") out.push_back(FacetClass::Truncate);
    else domain_error(key, "face label must be unsafe or truncate");
  }
  return out;
}

std::uint64_t get_seed(const json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) domain_error("seed", "must be non-negative");
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (!s.empty() && std::all_of(s.begin(), s.end(), ::isdigit)) {
      try {
        return std::stoull(s);
      } catch (const std::out_of_range&) {
        domain_error("seed", "exceeds 64 bits");
      }
    }
  }
  parse_error("seed", "expected a 64-bit unsigned integer");
}

json box_json(const BoxRegion& b) { return json::array({b.lower(), b.upper()}); }

json facets_json(const std::vector<FacetClass>& f) {
  json a = json::array();
  for (auto c : f) a.push_back(c == FacetClass::Unsafe ? "unsafe" : "truncate");
  return a;
}

void apply(RunConfig& c, const std::string& key, const json& v) {
  if (key == "system.name") return;
  if (key == "system.state_box") c.system.state_box = get_box(key, v);
  else if (key == "system.action_box") c.system.action_box = get_box(key, v);
  else if (key == "system.facets") c.system.facets = get_facets(key, v);
  else if (key == "system.sv_policy") c.system.sv_policy = get_string(key, v);
  else if (key == "system.region") c.system.region = get_box(key, v);
  else if (key == "algorithm") c.algorithm = get_string(key, v);
  else if (key == "hyper.epsilon") c.hyper.epsilon = get_number(key, v);
  else if (key == "hyper.beta") c.hyper.beta = get_number(key, v);
  else if (key == "hyper.delta0") c.hyper.delta0 = get_number(key, v);
  else if (key == "hyper.gamma") c.hyper.gamma = get_number(key, v);
  else if (key == "hyper.delta_min") c.hyper.delta_min = get_number(key, v);
  else if (key == "hyper.K") c.hyper.K = get_count(key, v);
  else if (key == "hyper.N") c.hyper.N = get_count(key, v);
  else if (key == "hyper.min_feature_scale")
    c.hyper.min_feature_scale = get_number(key, v);
  else if (key == "hyper.omega_bar") c.omega_bar = get_number(key, v);
  else if (key == "hyper.dt") c.dt = get_number(key, v);
  else if (key == "options.prioritized") c.options.prioritized = get_bool(key, v);
  else if (key == "options.priority_power")
    c.options.priority_power = get_number(key, v);
  else if (key == "options.replay") c.options.replay = get_bool(key, v);
  else if (key == "options.adversarial") c.options.adversarial = get_bool(key, v);
  else if (key == "options.boundary_band")
    c.options.boundary_band = get_bool(key, v);
  else if (key == "options.trajectories")
    c.options.trajectories = get_bool(key, v);
  else if (key == "options.propose_full_first")
    c.options.propose_full_first = get_bool(key, v);
  else if (key == "options.oracle_steps")
    c.options.oracle_steps = get_count(key, v);
  else if (key == "options.seed_point") c.options.seed_point = get_vector(key, v);
  else if (key == "seed") c.seed = get_seed(v);
  else if (key == "output_dir") c.output_dir = get_string(key, v);
}

void check_domains(const RunConfig& c) {
  const auto& algs = known_algorithms();
  if (std::find(algs.begin(), algs.end(), c.algorithm) == algs.end())
    domain_error("algorithm", "unknown algorithm '" + c.algorithm + "'");
  try {
    c.hyper.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("E-DOMAIN", std::string("hyper: ") + e.what());
  }
  if (!(c.omega_bar >= 0.0)) domain_error("hyper.omega_bar", "must be >= 0");
  if (!(c.dt > 0.0)) domain_error("hyper.dt", "must be > 0");
  if (!(c.options.priority_power >= 1.0))
    domain_error("options.priority_power", "must be >= 1");
  if (c.system.sv_policy != "brake" && c.system.sv_policy != "idm")
    domain_error("system.sv_policy", "must be brake or idm");
  ScenarioSystem sys;
  try {
    sys = build_system(c);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("E-DOMAIN", std::string("system: ") + e.what());
  }
  if (c.system.region) {
    const auto& r = *c.system.region;
    if (r.dim() != sys.dim() || !sys.state_box.contains(r.lower(), 1e-12) ||
        !sys.state_box.contains(r.upper(), 1e-12))
      domain_error("system.region", "must be a sub-box of the state box");
  }
  if (c.options.seed_point &&
      (c.options.seed_point->size() != sys.dim() ||
       !sys.state_box.contains(*c.options.seed_point)))
    domain_error("options.seed_point", "must lie in the state box");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  std::map<std::string, json> values;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      parse_error("line " + std::to_string(lineno), "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto val = trim(line.substr(eq + 1));
    if (key.empty()) parse_error("line " + std::to_string(lineno), "empty key");
    if (!known_keys().count(key))
      throw ConfigError("E-UNKNOWN-KEY", "unknown key '" + key + "'");
    if (values.count(key)) parse_error(key, "given twice");
    json v = json::parse(val, nullptr, false);
    if (v.is_discarded()) v = val;  // bare word
    values[key] = std::move(v);
  }
  if (!values.count("system.name"))
    throw ConfigError("E-MISSING-KEY", "system.name is required");
  if (!values.count("algorithm"))
    throw ConfigError("E-MISSING-KEY", "algorithm is required");
  if (!values.count("seed"))
    throw ConfigError("E-MISSING-SEED",
                      "seed is required; runs never default to wall-clock seeds");

  RunConfig c;
  c.system.name = get_string("system.name", values["system.name"]);
  const auto& systems = known_systems();
  if (std::find(systems.begin(), systems.end(), c.system.name) == systems.end())
    domain_error("system.name", "unknown system '" + c.system.name + "'");
  c.hyper = defaults_for(c.system.name);
  for (const auto& [key, v] : values) apply(c, key, v);
  check_domains(c);
  return c;
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  auto put = [&](const std::string& k, const json& v) {
    os << k << " = " << v.dump() << '\n';
  };
  put("system.name", c.system.name);
  if (c.system.state_box) put("system.state_box", box_json(*c.system.state_box));
  if (c.system.action_box) put("system.action_box", box_json(*c.system.action_box));
  if (c.system.facets) put("system.facets", facets_json(*c.system.facets));
  put("system.sv_policy", c.system.sv_policy);
  if (c.system.region) put("system.region", box_json(*c.system.region));
  put("algorithm", c.algorithm);
  put("hyper.epsilon", c.hyper.epsilon);
  put("hyper.beta", c.hyper.beta);
  put("hyper.delta0", c.hyper.delta0);
  put("hyper.gamma", c.hyper.gamma);
  put("hyper.delta_min", c.hyper.delta_min);
  put("hyper.K", c.hyper.K);
  put("hyper.N", c.hyper.N);
  put("hyper.min_feature_scale", c.hyper.min_feature_scale);
  put("hyper.omega_bar", c.omega_bar);
  put("hyper.dt", c.dt);
  put("options.prioritized", c.options.prioritized);
  put("options.priority_power", c.options.priority_power);
  put("options.replay", c.options.replay);
  put("options.adversarial", c.options.adversarial);
  put("options.boundary_band", c.options.boundary_band);
  put("options.trajectories", c.options.trajectories);
  put("options.propose_full_first", c.options.propose_full_first);
  put("options.oracle_steps", c.options.oracle_steps);
  if (c.options.seed_point) put("options.seed_point", *c.options.seed_point);
  put("seed", c.seed);
  put("output_dir", c.output_dir);
  return os.str();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_digest(const RunConfig& config) {
  RunConfig c = config;
  c.output_dir.clear();
  return fnv1a_hex(serialize_config(c));
}

std::string comparison_digest(const RunConfig& config) {
  const auto sys = build_system(config);
  json j;
  j["system"] = config.system.name;
  j["state_box"] = box_json(sys.state_box);
  j["action_box"] = box_json(sys.action_box);
  j["facets"] = facets_json(sys.facets);
  j["dt"] = sys.dt;
  j["omega_bar"] = sys.omega_bar;
  j["resolution"] = config.hyper.delta_min;
  return fnv1a_hex(j.dump());
}

ScenarioSystem build_system(const RunConfig& c) {
  const auto& s = c.system;
  const auto& name = s.name;
  if (name == "lead_follow" || name == "three_vehicle") {
    VehicleConfig vc;
    vc.state_box = s.state_box;
    vc.action_box = s.action_box;
    vc.facets = s.facets;
    vc.sv_policy = parse_sv_policy(s.sv_policy);
    vc.dt = c.dt;
    vc.omega_bar = c.omega_bar;
    return name == "lead_follow" ? make_lead_follow(vc) : make_three_vehicle(vc);
  }
  ScenarioSystem sys;
  if (name == "toy_shift") sys = make_toy_shift();
  else if (name == "toy_shrink") sys = make_toy_shrink(s.action_box);
  else if (name == "toy_threshold") sys = make_toy_threshold();
  else if (name == "toy_two_basins") sys = make_toy_two_basins();
  else if (name == "flip") sys = make_flip();
  else if (name == "identity")
    sys = make_identity(s.state_box.value_or(BoxRegion({-1.0}, {1.0})));
  else throw ConfigError("E-DOMAIN", "system.name: unknown system '" + name + "'");

  if (s.action_box && name != "toy_shrink")
    domain_error("system.action_box", name + " takes no actions");
  if (s.state_box) {
    if (s.state_box->dim() != sys.dim())
      domain_error("system.state_box", "dimension must be " + std::to_string(sys.dim()));
    sys.state_box = *s.state_box;
  }
  if (s.facets) {
    if (s.facets->size() != 2 * sys.dim())
      domain_error("system.facets", "need 2n face labels");
    sys.facets = *s.facets;
  }
  if (c.omega_bar > 0.0 && sys.disturbance_dim == 0)
    domain_error("hyper.omega_bar", name + " has no disturbance channel");
  sys.omega_bar = c.omega_bar;
  sys.one_step_bound += c.omega_bar;
  check_system(sys);
  return sys;
}

}  // namespace setquant
