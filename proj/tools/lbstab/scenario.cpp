#include "scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "lbstab/error.hpp"
#include "lbstab/rng.hpp"

namespace lbstab::cli {

namespace {

using io::Json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw SchemaError(where + ": " + what);
}

double number_at(const Json& j, const char* key, const std::string& where,
                 std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(where, std::string("missing '") + key + "'");
  }
  if (!j.at(key).is_number()) fail(where + "." + key, "expected a number");
  return j.at(key).get<double>();
}

Region parse_region(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    fail(where, "region must be [width, height]");
  Region r{j[0].get<double>(), j[1].get<double>()};
  if (!(r.width > 0.0 && r.height > 0.0)) fail(where, "region must have positive extent");
  return r;
}

NetworkTopology connected_or_retry(const Json& t, std::uint64_t root, bool uniform) {
  const Region region = parse_region(t.value("region", Json::array({1000.0, 1000.0})), "topology.region");
  const double p = number_at(t, "P", "topology", 1.0);
  const bool need_connected = t.value("require_connected", false);
  constexpr int kAttempts = 100;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    const std::string suffix = attempt == 0 ? "" : "#" + std::to_string(attempt);
    std::vector<CellSite> sites;
    if (uniform) {
      const double count = number_at(t, "count", "topology");
      if (!(count >= 2.0)) fail("topology.count", "need at least 2 sites");
      sites = generate_uniform_sites(static_cast<std::size_t>(count), region,
                                     derive_seed(root, "topology.sites" + suffix));
    } else {
      const double per_km2 = number_at(t, "intensity_per_km2", "topology");
      sites = generate_ppp(per_km2 * 1e-6, region, derive_seed(root, "topology.sites" + suffix));
    }
    if (sites.size() < 2) continue;
    auto topo = build_neighbor_graph(std::move(sites), region, p,
                                     derive_seed(root, "topology.edges" + suffix));
    if (!need_connected || connected_components(topo).size() == 1) return topo;
  }
  fail("topology", "no connected topology within 100 attempts; raise P or the site count");
}

NetworkTopology parse_topology(const Json& t, const std::filesystem::path& base, std::uint64_t root) {
  if (!t.is_object()) fail("topology", "expected an object");
  const std::string kind = t.value("kind", std::string());
  if (kind == "ppp") return connected_or_retry(t, root, false);
  if (kind == "uniform") return connected_or_retry(t, root, true);
  if (kind == "edges") {
    const double n = number_at(t, "n", "topology");
    if (!(n >= 1.0)) fail("topology.n", "need at least one cell");
    std::vector<Edge> edges;
    for (const auto& e : t.value("edges", Json::array())) {
      if (!e.is_array() || e.size() != 2) fail("topology.edges", "each edge must be [i, j]");
      edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
    }
    try {
      return NetworkTopology::from_edges(static_cast<std::size_t>(n), std::move(edges));
    } catch (const ContractViolation& e) {
      fail("topology.edges", e.what());
    }
  }
  if (kind == "inline") return io::topology_from_json(t);
  if (kind == "file") {
    if (!t.contains("path") || !t.at("path").is_string()) fail("topology.path", "expected a string");
    auto path = std::filesystem::path(t.at("path").get<std::string>());
    if (path.is_relative()) path = base / path;
    std::ifstream in(path);
    if (!in) fail("topology.path", "cannot open " + path.string());
    Json doc;
    try {
      doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
      fail("topology.path", std::string("invalid JSON: ") + e.what());
    }
    return io::topology_from_json(doc);
  }
  fail("topology.kind", "expected one of ppp, uniform, edges, inline, file; got \"" + kind + "\"");
}

PolicyAssignment parse_policies(const Json& p, std::size_t n, std::uint64_t root) {
  if (!p.is_object()) fail("policies", "expected an object");
  std::map<std::string, LocalPolicy> locals;
  std::map<std::string, CouplingPolicy> couplings;
  const Json local_defs = p.value("local", Json::object());
  for (const auto& [name, body] : local_defs.items()) {
    try {
      locals.emplace(name, parse_local_policy(body));
    } catch (const SchemaError& e) {
      fail("policies.local." + name, e.what());
    }
  }
  const Json coupling_defs = p.value("couplings", Json::object());
  for (const auto& [name, body] : coupling_defs.items()) {
    try {
      couplings.emplace(name, parse_coupling(body));
    } catch (const SchemaError& e) {
      fail("policies.couplings." + name, e.what());
    }
  }
  auto local_ref = [&](const std::string& name, const std::string& where) -> const LocalPolicy& {
    auto it = locals.find(name);
    if (it == locals.end()) fail(where, "unknown local policy \"" + name + "\"");
    return it->second;
  };
  auto coupling_ref = [&](const std::string& name, const std::string& where) -> const CouplingPolicy& {
    auto it = couplings.find(name);
    if (it == couplings.end()) fail(where, "unknown coupling \"" + name + "\"");
    return it->second;
  };
  if (!p.contains("default_local") || !p.at("default_local").is_string())
    fail("policies.default_local", "expected a policy name");
  if (!p.contains("default_coupling") || !p.at("default_coupling").is_string())
    fail("policies.default_coupling", "expected a coupling name");

  PolicyAssignment out(
      std::vector<LocalPolicy>(n, local_ref(p.at("default_local").get<std::string>(),
                                            "policies.default_local")),
      coupling_ref(p.at("default_coupling").get<std::string>(), "policies.default_coupling"));

  if (p.contains("random_local")) {
    const auto& r = p.at("random_local");
    if (!r.is_object() || !r.contains("policy") || !r.at("policy").is_string())
      fail("policies.random_local", "expected {\"policy\": name, \"fraction\": f}");
    const double fraction = number_at(r, "fraction", "policies.random_local");
    if (!(fraction >= 0.0 && fraction <= 1.0)) fail("policies.random_local.fraction", "must lie in [0, 1]");
    const auto& chosen = local_ref(r.at("policy").get<std::string>(), "policies.random_local.policy");
    Rng rng = make_stream(root, "policies");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i)
      if (u(rng) < fraction) out.set_local(i, chosen);
  }
  const Json cell_defs = p.value("cells", Json::object());
  for (const auto& [key, name] : cell_defs.items()) {
    std::size_t cell = 0;
    try {
      cell = std::stoul(key);
    } catch (const std::exception&) {
      fail("policies.cells", "key \"" + key + "\" is not a cell id");
    }
    if (cell >= n) fail("policies.cells." + key, "cell id out of range");
    if (!name.is_string()) fail("policies.cells." + key, "expected a policy name");
    out.set_local(cell, local_ref(name.get<std::string>(), "policies.cells." + key));
  }
  for (const auto& pair : p.value("pairs", Json::array())) {
    if (!pair.is_object() || !pair.contains("from") || !pair.contains("to") || !pair.contains("coupling"))
      fail("policies.pairs", "each entry needs from, to, coupling");
    const auto from = pair.at("from").get<std::size_t>();
    const auto to = pair.at("to").get<std::size_t>();
    if (from >= n || to >= n || from == to) fail("policies.pairs", "invalid cell pair");
    out.set_pair_coupling(from, to, coupling_ref(pair.at("coupling").get<std::string>(), "policies.pairs"));
  }
  return out;
}

RadioScenario parse_radio(const Json& r, const NetworkTopology& topo, std::uint64_t root) {
  if (!r.is_object()) fail("radio", "expected an object");
  const std::size_t n = topo.size();
  auto per_cell = [&](const char* key, double fallback) {
    std::vector<double> out;
    if (!r.contains(key)) return std::vector<double>(n, fallback);
    const auto& v = r.at(key);
    if (v.is_number()) return std::vector<double>(n, v.get<double>());
    if (!v.is_array() || v.size() != n) fail(std::string("radio.") + key, "expected a number or one per cell");
    for (const auto& e : v) out.push_back(e.get<double>());
    return out;
  };
  RadioScenario rs;
  auto& c = rs.config;
  c.tx_power_dbm = per_cell("tx_power_dbm", 46.0);
  c.prb_count = per_cell("prb_count", 100.0);
  c.path_loss_exponent = number_at(r, "path_loss_exponent", "radio", 3.5);
  c.reference_loss_db = number_at(r, "reference_loss_db", "radio", 30.0);
  c.noise_power_dbm = number_at(r, "noise_power_dbm", "radio", -120.0);
  c.prb_bandwidth_hz = number_at(r, "prb_bandwidth_hz", "radio", 180e3);
  c.hysteresis_db = number_at(r, "hysteresis_db", "radio", 0.0);
  if (r.contains("cio")) c.cio = r.at("cio").get<std::vector<std::vector<double>>>();
  try {
    c.validate(n);
  } catch (const ConfigError& e) {
    fail("radio", e.what());
  }
  const auto& users = r.value("users", Json::object({{"count", 10 * n}}));
  if (users.is_array()) {
    for (const auto& u : users) {
      User user;
      user.position = Point2{number_at(u, "x", "radio.users"), number_at(u, "y", "radio.users")};
      user.demand_bps = number_at(u, "demand_bps", "radio.users", 1e6);
      if (!(user.demand_bps > 0.0)) fail("radio.users", "demand must be positive");
      rs.users.push_back(user);
    }
  } else if (users.is_object()) {
    const double count = number_at(users, "count", "radio.users");
    const double demand = number_at(users, "demand_bps", "radio.users", 1e6);
    if (!(count >= 0.0) || !(demand > 0.0)) fail("radio.users", "count >= 0 and demand > 0 required");
    rs.users = generate_users(static_cast<std::size_t>(count), topo.region(), demand,
                              derive_seed(root, "users"));
  } else {
    fail("radio.users", "expected a list of users or {\"count\": n}");
  }
  return rs;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

LocalPolicy parse_local_policy(const io::Json& j) {
  if (j.is_object() && j.contains("form")) {
    const std::string form = j.at("form").get<std::string>();
    const double alpha = number_at(j, "alpha", "policy", 1.0);
    try {
      if (form == "quadratic") return LocalPolicy::quadratic_restoring(alpha);
      if (form == "linear") return LocalPolicy::linear_restoring(alpha);
      if (form == "sleep_quadratic") return LocalPolicy::sleep_quadratic(alpha, number_at(j, "gamma", "policy"));
    } catch (const PolicyError& e) {
      fail("policy", e.what());
    }
    fail("policy.form", "unknown form \"" + form + "\"");
  }
  return io::local_policy_from_json(j);
}

CouplingPolicy parse_coupling(const io::Json& j) {
  if (j.is_object() && j.contains("form")) {
    const std::string form = j.at("form").get<std::string>();
    if (form == "diffusive") return CouplingPolicy::linear_diffusive(number_at(j, "beta", "coupling", -1.0));
    fail("coupling.form", "unknown form \"" + form + "\"");
  }
  return io::coupling_from_json(j);
}

Scenario parse_scenario(const io::Json& doc, const std::filesystem::path& base_dir,
                        std::optional<std::uint64_t> seed_override) {
  if (!doc.is_object()) fail("scenario", "expected a JSON object");
  if (!doc.contains("schema") || !doc.at("schema").is_number_integer() ||
      doc.at("schema").get<int>() != kScenarioSchema)
    fail("schema", "expected \"schema\": " + std::to_string(kScenarioSchema));
  std::uint64_t seed = 0;
  if (seed_override) {
    seed = *seed_override;
  } else {
    if (!doc.contains("seed") || !doc.at("seed").is_number_unsigned())
      fail("seed", "a non-negative integer seed is required");
    seed = doc.at("seed").get<std::uint64_t>();
  }
  if (!doc.contains("topology")) fail("scenario", "missing 'topology'");
  if (!doc.contains("policies")) fail("scenario", "missing 'policies'");

  NetworkTopology topo = [&] {
    try {
      return parse_topology(doc.at("topology"), base_dir, seed);
    } catch (const GeometryError& e) {
      fail("topology", e.what());
    } catch (const RetryExhaustedError& e) {
      fail("topology", e.what());
    }
  }();
  PolicyAssignment policies = parse_policies(doc.at("policies"), topo.size(), seed);

  Scenario s{doc, "", seed, std::move(topo), std::move(policies), std::nullopt, {}, {}, {}};
  io::Json hashed = doc;
  hashed["seed"] = seed;
  s.hash = hex64(fnv1a64(hashed.dump()));
  if (doc.contains("radio")) s.radio = parse_radio(doc.at("radio"), s.topology, seed);

  const auto& sim = doc.value("simulation", Json::object());
  auto& cfg = s.simulation;
  cfg.dt = number_at(sim, "dt", "simulation", 1e-3);
  cfg.horizon = number_at(sim, "horizon", "simulation", 20.0);
  cfg.sync_tolerance = number_at(sim, "sync_tolerance", "simulation", 1e-3);
  cfg.record_stride = static_cast<std::size_t>(number_at(sim, "record_stride", "simulation", 10.0));
  cfg.nonnegative_loads = sim.value("nonnegative_loads", true);
  cfg.rate_window_low_factor = number_at(sim, "rate_window_low_factor", "simulation", 10.0);
  cfg.rate_window_high_fraction = number_at(sim, "rate_window_high_fraction", "simulation", 0.5);
  cfg.seed = derive_seed(seed, "perturb");

  const auto& init = sim.value("initial", Json::object({{"kind", "uniform"}}));
  const std::string kind = init.value("kind", std::string("uniform"));
  if (kind == "uniform") {
    s.initial.kind = InitialSpec::Kind::Uniform;
    s.initial.low = number_at(init, "low", "simulation.initial", 0.2);
    s.initial.high = number_at(init, "high", "simulation.initial", 1.8);
    if (!(s.initial.low >= 0.0 && s.initial.high > s.initial.low))
      fail("simulation.initial", "need 0 <= low < high");
  } else if (kind == "perturb") {
    s.initial.kind = InitialSpec::Kind::Perturb;
    s.initial.epsilon = number_at(init, "epsilon", "simulation.initial", 0.01);
    if (!(s.initial.epsilon >= 0.0)) fail("simulation.initial.epsilon", "must be >= 0");
  } else if (kind == "from-radio") {
    s.initial.kind = InitialSpec::Kind::FromRadio;
    if (!s.radio) fail("simulation.initial", "from-radio needs a 'radio' section");
  } else if (kind == "explicit") {
    s.initial.kind = InitialSpec::Kind::Explicit;
    s.initial.loads = init.value("loads", std::vector<double>{});
    if (s.initial.loads.size() != s.topology.size())
      fail("simulation.initial.loads", "expected one load per cell");
  } else {
    fail("simulation.initial.kind", "expected uniform, perturb, from-radio or explicit");
  }
  cfg.perturbation_amplitude = s.initial.epsilon;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    fail("simulation", e.what());
  }
  s.output_dir = doc.value("output", std::string("out"));
  if (s.output_dir.is_relative()) s.output_dir = base_dir / s.output_dir;
  return s;
}

Scenario load_scenario(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open scenario " + path.string());
  io::Json doc;
  try {
    doc = io::Json::parse(in);
  } catch (const io::Json::parse_error& e) {
    throw SchemaError("scenario is not valid JSON: " + std::string(e.what()));
  }
  return parse_scenario(doc, path.parent_path(), seed_override);
}

std::optional<CellLoadSnapshot> radio_snapshot(const Scenario& s) {
  if (!s.radio) return std::nullopt;
  const auto assignment = assign_users(s.topology.sites(), s.radio->users, s.radio->config);
  return cell_loads(s.topology.sites(), s.radio->users, assignment, s.radio->config);
}

std::vector<double> initial_loads(const Scenario& s) {
  const std::size_t n = s.topology.size();
  switch (s.initial.kind) {
    case InitialSpec::Kind::Uniform:
      return uniform_initial_loads(n, s.initial.low, s.initial.high, derive_seed(s.seed, "initial"));
    case InitialSpec::Kind::Perturb:
      return perturb(std::vector<double>(n, 1.0), s.initial.epsilon, s.simulation.seed);
    case InitialSpec::Kind::FromRadio:
      return snapshot_to_initial_loads(*radio_snapshot(s));
    case InitialSpec::Kind::Explicit:
      return s.initial.loads;
  }
  return {};
}

AuditOptions audit_options(const Scenario& s) {
  AuditOptions o;
  switch (s.initial.kind) {
    case InitialSpec::Kind::Uniform: o.envelope_min_load = s.initial.low; break;
    case InitialSpec::Kind::Perturb: o.envelope_min_load = std::max(0.0, 1.0 - s.initial.epsilon); break;
    case InitialSpec::Kind::FromRadio:
    case InitialSpec::Kind::Explicit: {
      const auto loads = initial_loads(s);
      o.envelope_min_load = loads.empty() ? 0.0 : *std::min_element(loads.begin(), loads.end());
      break;
    }
  }
  return o;
}

}  // namespace lbstab::cli
