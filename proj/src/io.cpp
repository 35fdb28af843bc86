#include "lbstab/io.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "lbstab/error.hpp"

namespace lbstab::io {

namespace {

std::vector<double> coeff_list(const Json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(std::string("missing field '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_array()) throw SchemaError(std::string("field '") + key + "' must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw SchemaError(std::string("field '") + key + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    cells.push_back(cell);
  }
  return cells;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Json to_json(const LocalPolicy& policy) {
  Json j;
  const auto& mode = policy.mode();
  j["mode"] = mode.is_sleep_capable() ? "sleep" : "active";
  if (mode.is_sleep_capable()) j["gamma"] = mode.gamma();
  j["coeffs"] = policy.active_branch().coeffs();
  if (policy.has_distinct_sleep_branch()) j["sleep_coeffs"] = policy.sleep_branch().coeffs();
  return j;
}

LocalPolicy local_policy_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("policy must be a JSON object");
  const std::string mode = j.value("mode", std::string("active"));
  auto coeffs = coeff_list(j, "coeffs");
  try {
    if (mode == "active") {
      if (j.contains("gamma") || j.contains("sleep_coeffs"))
        throw SchemaError("active policies take no 'gamma' or 'sleep_coeffs'");
      return LocalPolicy(ActivationMode::active(), Polynomial(std::move(coeffs)));
    }
    if (mode == "sleep") {
      if (!j.contains("gamma") || !j.at("gamma").is_number())
        throw SchemaError("sleep policies need a numeric 'gamma'");
      std::optional<Polynomial> sleep;
      if (j.contains("sleep_coeffs")) sleep = Polynomial(coeff_list(j, "sleep_coeffs"));
      return LocalPolicy(ActivationMode::sleep_capable(j.at("gamma").get<double>()),
                         Polynomial(std::move(coeffs)), std::move(sleep));
    }
  } catch (const PolicyError& e) {
    throw SchemaError(std::string("invalid policy: ") + e.what());
  }
  throw SchemaError("policy 'mode' must be \"active\" or \"sleep\", got \"" + mode + "\"");
}

Json to_json(const CouplingPolicy& g) {
  Json j;
  j["p"] = g.p.coeffs();
  j["q"] = g.q.coeffs();
  j["c"] = g.c;
  j["sleep_drain"] = g.sleep_drain.coeffs();
  return j;
}

CouplingPolicy coupling_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("coupling must be a JSON object");
  CouplingPolicy g;
  if (j.contains("p")) g.p = Polynomial(coeff_list(j, "p"));
  if (j.contains("q")) g.q = Polynomial(coeff_list(j, "q"));
  if (j.contains("c")) {
    if (!j.at("c").is_number()) throw SchemaError("coupling 'c' must be a number");
    g.c = j.at("c").get<double>();
  }
  if (j.contains("sleep_drain")) g.sleep_drain = Polynomial(coeff_list(j, "sleep_drain"));
  return g;
}

Json to_json(const NetworkTopology& t) {
  Json j;
  j["region"] = {t.region().width, t.region().height};
  Json sites = Json::array();
  for (const auto& s : t.sites()) sites.push_back({s.position.x, s.position.y});
  j["sites"] = std::move(sites);
  Json edges = Json::array();
  for (auto [a, b] : t.edges()) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  j["seed"] = t.seed() ? Json(*t.seed()) : Json(nullptr);
  j["P"] = optional_number(t.connection_probability());
  return j;
}

NetworkTopology topology_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("topology must be a JSON object");
  if (!j.contains("sites") || !j.at("sites").is_array())
    throw SchemaError("topology needs a 'sites' array");
  Region region;
  if (j.contains("region")) {
    const auto& r = j.at("region");
    if (!r.is_array() || r.size() != 2) throw SchemaError("'region' must be [width, height]");
    region = Region{r[0].get<double>(), r[1].get<double>()};
  }
  std::vector<CellSite> sites;
  for (const auto& s : j.at("sites")) {
    if (!s.is_array() || s.size() != 2) throw SchemaError("each site must be [x, y]");
    sites.push_back(CellSite{sites.size(), Point2{s[0].get<double>(), s[1].get<double>()}});
  }
  std::vector<Edge> edges;
  if (j.contains("edges"))
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw SchemaError("each edge must be [i, j]");
      edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
    }
  std::optional<std::uint64_t> seed;
  if (j.contains("seed") && !j.at("seed").is_null()) seed = j.at("seed").get<std::uint64_t>();
  std::optional<double> p;
  if (j.contains("P") && !j.at("P").is_null()) p = j.at("P").get<double>();
  try {
    return NetworkTopology(std::move(sites), std::move(edges), region, seed, p);
  } catch (const ContractViolation& e) {
    throw SchemaError(std::string("invalid topology: ") + e.what());
  }
}

Json to_json(const StabilityReport& r) {
  Json j;
  j["verdict"] = std::string(to_string(r.verdict.verdict));
  j["rationale"] = r.verdict.rationale;
  j["homogeneous"] = r.homogeneous;
  j["mode_rates"] = r.mode_rates;
  j["slowest_rate"] = r.slowest_rate;
  Json culprits = Json::array();
  for (const auto& c : r.verdict.culprits)
    culprits.push_back({{"cell", c.cell}, {"reason", c.reason}, {"action", c.action}});
  j["culprits"] = std::move(culprits);
  j["uniform_rate"] = optional_number(r.uniform_rate);
  j["disagreement_rate"] = optional_number(r.disagreement_rate);
  Json comps = Json::array();
  for (const auto& c : r.components) {
    Json cj;
    cj["cells"] = c.cells;
    cj["verdict"] = std::string(to_string(c.verdict));
    cj["method"] = c.method;
    cj["algebraic_connectivity"] = c.algebraic_connectivity;
    cj["slowest_rate"] = c.slowest_rate;
    cj["uniform_rate"] = optional_number(c.uniform_rate);
    cj["disagreement_rate"] = optional_number(c.disagreement_rate);
    cj["mode_rates"] = c.mode_rates;
    comps.push_back(std::move(cj));
  }
  j["components"] = std::move(comps);
  return j;
}

Json to_json(const SyncMetrics& m) {
  Json j;
  j["synchronized"] = m.synchronized;
  j["sync_time"] = optional_number(m.sync_time);
  j["empirical_rate"] = optional_number(m.empirical_rate);
  j["empirical_disagreement_rate"] = optional_number(m.empirical_disagreement_rate);
  Json clusters = Json::array();
  for (const auto& c : m.terminal_clusters)
    clusters.push_back({{"load", c.representative}, {"cells", c.members}});
  j["terminal_clusters"] = std::move(clusters);
  return j;
}

Json to_json(const std::vector<ClusterState>& clusters) {
  Json arr = Json::array();
  for (const auto& c : clusters) {
    Json j;
    j["load"] = c.cluster.representative;
    j["cells"] = c.cluster.members;
    j["mode"] = c.mode;
    j["slept"] = c.slept;
    j["culprits"] = c.culprits;
    arr.push_back(std::move(j));
  }
  return arr;
}

Json to_json(const CellLoadSnapshot& s) {
  Json j;
  j["loads"] = s.loads;
  j["user_counts"] = s.user_counts;
  Json shares = Json::array();
  for (const auto& v : s.harmonic_share) shares.push_back(optional_number(v));
  j["harmonic_share"] = std::move(shares);
  j["unservable_users"] = s.unservable_users;
  Json users = Json::array();
  for (const auto& u : s.users)
    users.push_back({{"user", u.user},
                     {"cell", u.cell},
                     {"rate_per_prb_bps", u.rate_per_prb_bps},
                     {"min_prbs", optional_number(u.min_prbs)},
                     {"harmonic_share", optional_number(u.harmonic_share)},
                     {"servable", u.servable}});
  j["users"] = std::move(users);
  return j;
}

void write_spectrum_csv(std::ostream& os, const SpectralSummary& spectrum) {
  os << "index,eigenvalue\n";
  for (std::size_t i = 0; i < spectrum.eigenvalues.size(); ++i)
    os << i << ',' << format_double(spectrum.eigenvalues[i]) << '\n';
}

std::string mode_mask_hex(const std::vector<std::uint8_t>& flags) {
  static constexpr char kDigits[] = "0123456789abcdef";
  const std::size_t digits = std::max<std::size_t>(1, (flags.size() + 3) / 4);
  std::string out(digits, '0');
  for (std::size_t d = 0; d < digits; ++d) {
    unsigned nibble = 0;
    for (std::size_t b = 0; b < 4; ++b) {
      const std::size_t cell = d * 4 + b;
      if (cell < flags.size() && flags[cell]) nibble |= 1u << b;
    }
    out[digits - 1 - d] = kDigits[nibble];
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
  os << 't';
  for (std::size_t i = 0; i < t.cells(); ++i) os << ",l_" << i;
  os << ",modes\n";
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    os << format_double(t.times[k]);
    for (double v : t.states[k]) os << ',' << format_double(v);
    os << ',' << mode_mask_hex(t.mode_flags[k]) << '\n';
  }
}

void write_snapshot_csv(std::ostream& os, const CellLoadSnapshot& s) {
  os << "cell,load,users\n";
  for (std::size_t c = 0; c < s.loads.size(); ++c)
    os << c << ',' << format_double(s.loads[c]) << ',' << s.user_counts[c] << '\n';
}

std::vector<LoadRateSample> read_samples_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw SchemaError("samples CSV is empty");
  const auto header = split_csv_line(line);
  auto column = [&](std::initializer_list<const char*> names) -> std::ptrdiff_t {
    for (const char* name : names) {
      auto it = std::find(header.begin(), header.end(), name);
      if (it != header.end()) return it - header.begin();
    }
    return -1;
  };
  const auto load_col = column({"load", "l"});
  const auto rate_col = column({"rate", "dl/dt", "dldt"});
  if (load_col < 0) throw SchemaError("samples CSV is missing a 'load' column");
  if (rate_col < 0) throw SchemaError("samples CSV is missing a 'rate' column");

  std::vector<LoadRateSample> out;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    const auto need = static_cast<std::size_t>(std::max(load_col, rate_col));
    if (cells.size() <= need) throw SchemaError("samples CSV row " + std::to_string(row) + " is short");
    auto parse = [&](const std::string& s) {
      double v = 0.0;
      auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw SchemaError("samples CSV row " + std::to_string(row) + ": '" + s + "' is not a number");
      return v;
    };
    out.push_back({parse(cells[static_cast<std::size_t>(load_col)]),
                   parse(cells[static_cast<std::size_t>(rate_col)])});
  }
  return out;
}

}  // namespace lbstab::io
