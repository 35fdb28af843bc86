// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lbstab/commands.hpp"
#include "lbstab/io.hpp"
#include "lbstab/radio.hpp"
#include "lbstab/rng.hpp"
#include "lbstab/simulate.hpp"
#include "lbstab/stability.hpp"
#include "lbstab/topology.hpp"
#include "oracles/oracles.hpp"

namespace fs = std::filesystem;
using namespace lbstab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

void expect(Outcome& o, bool cond, const std::string& what) {
  if (!cond && o.pass) {
    o.pass = false;
    o.detail = what;
  }
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const Region kRegion{1000.0, 1000.0};

// Connected Delaunay topology of n uniform sites, redrawn until connected.
NetworkTopology random_connected(std::size_t n, std::uint64_t seed, double p = 1.0) {
  for (std::uint64_t k = 0;; ++k) {
    auto sites = generate_uniform_sites(n, kRegion, derive_seed(seed, "sites#" + std::to_string(k)));
    auto topo = build_neighbor_graph(std::move(sites), kRegion, p, derive_seed(seed, "edges#" + std::to_string(k)));
    if (connected_components(topo).size() == 1) return topo;
  }
}

PolicyAssignment homogeneous_quadratic(std::size_t n, double alpha, double beta) {
  return PolicyAssignment(std::vector<LocalPolicy>(n, LocalPolicy::quadratic_restoring(alpha)),
                          CouplingPolicy::linear_diffusive(beta));
}

double max_abs_deviation(const std::vector<double>& loads) {
  double m = 0.0;
  for (double l : loads) m = std::max(m, std::abs(l - 1.0));
  return m;
}

// Central-difference Jacobian of the network right-hand side.
Eigen::MatrixXd fd_jacobian(const NetworkTopology& topo, const PolicyAssignment& assign, std::vector<double> x) {
  const std::size_t n = x.size();
  const double step = 1e-6;
  Eigen::MatrixXd j(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    const double x0 = x[c];
    x[c] = x0 + step;
    const auto up = rhs(x, topo, assign);
    x[c] = x0 - step;
    const auto down = rhs(x, topo, assign);
    x[c] = x0;
    for (std::size_t r = 0; r < n; ++r) j(r, c) = (up[r] - down[r]) / (2 * step);
  }
  return j;
}

Polynomial random_poly(std::mt19937_64& rng, std::size_t degree, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> c(degree + 1);
  for (auto& v : c) v = u(rng);
  return Polynomial(std::move(c));
}

// Random local policy with f(1) = 0.
LocalPolicy random_local(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> deg(1, 4);
  std::vector<double> c = random_poly(rng, deg(rng), 1.0).coeffs();
  double at_one = 0.0;
  for (double v : c) at_one += v;
  c[0] -= at_one;
  return LocalPolicy(ActivationMode::active(), Polynomial(std::move(c)));
}

CouplingPolicy random_coupling(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> deg(0, 3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CouplingPolicy g;
  g.p = random_poly(rng, deg(rng), 1.0);
  g.q = random_poly(rng, deg(rng), 1.0);
  g.c = u(rng);
  g.sleep_drain = Polynomial({0.0, -1.0});
  return g;
}

Outcome ac1() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto topo = random_connected(20, 101);
  const auto assign = homogeneous_quadratic(20, 1.0, -1.0);
  const auto report = audit(topo, assign, AuditOptions{0.2});
  expect(o, report.verdict.verdict == Verdict::Stable, "audit verdict " + std::string(to_string(report.verdict.verdict)));
  SimulationConfig cfg;
  cfg.horizon = 20.0;
  const auto init = uniform_initial_loads(20, 0.2, 1.8, derive_seed(101, "initial"));
  const auto traj = integrate(cfg, init, topo, assign);
  const double dev = max_abs_deviation(traj.states.back());
  const double secs = seconds_since(t0);
  expect(o, traj.times.back() >= 20.0 - 1e-9, "horizon not reached");
  expect(o, dev <= 1e-3, "max |l - 1| at t=20 is " + num(dev));
  expect(o, secs < 5.0, "runtime " + num(secs) + " s");
  if (o.pass) o.detail = "max |l - 1| = " + num(dev) + ", " + num(secs) + " s";
  return o;
}

Outcome ac2() {
  Outcome o;
  const auto topo = random_connected(20, 101);
  const auto assign = homogeneous_quadratic(20, 1.0, -1.0);
  const auto report = audit(topo, assign);
  SimulationConfig cfg;
  cfg.horizon = 20.0;
  // The perturbation's mean excites the uniform mode at about a tenth of the
  // disagreement amplitude, so the slowest mode only dominates the max deviation
  // once it falls below ~1e-6. The fit window [10 tol, 0.5 initial] has to
  // reach well past that crossover; 1e-12 is still far above round-off near 1.
  cfg.sync_tolerance = 1e-13;
  const std::vector<double> ones(20, 1.0);
  const auto init = perturb(ones, 0.01, derive_seed(101, "perturb"));
  const auto m = sync_metrics(integrate(cfg, init, topo, assign), cfg);
  expect(o, m.empirical_rate.has_value(), "no empirical rate");
  double rel = 0.0;
  if (m.empirical_rate) {
    rel = std::abs(*m.empirical_rate - report.slowest_rate) / std::abs(report.slowest_rate);
    expect(o, rel <= 0.10, "empirical " + num(*m.empirical_rate) + " vs analytic " + num(report.slowest_rate));
  }

  // Poorly and well connected graphs on the same number of cells.
  std::vector<Edge> path;
  for (std::size_t i = 0; i + 1 < 20; ++i) path.push_back({i, i + 1});
  const auto slow = NetworkTopology::from_edges(20, path);
  const double l2_slow = spectrum(laplacian(slow)).algebraic_connectivity;
  const double l2_fast = spectrum(laplacian(topo)).algebraic_connectivity;
  expect(o, l2_fast >= 3.0 * l2_slow, "lambda_2 ratio " + num(l2_fast / l2_slow));
  const auto ms = sync_metrics(integrate(cfg, init, slow, assign), cfg);
  expect(o, ms.empirical_disagreement_rate && m.empirical_disagreement_rate, "no disagreement rate");
  if (ms.empirical_disagreement_rate && m.empirical_disagreement_rate) {
    expect(o, *m.empirical_disagreement_rate < *ms.empirical_disagreement_rate,
           "disagreement rates " + num(*m.empirical_disagreement_rate) + " (lambda_2 " + num(l2_fast) +
               ") vs " + num(*ms.empirical_disagreement_rate) + " (lambda_2 " + num(l2_slow) + ")");
    if (o.pass)
      o.detail = "relative rate error " + num(rel) + "; disagreement " + num(*m.empirical_disagreement_rate) +
                 " (lambda_2 " + num(l2_fast) + ") < " + num(*ms.empirical_disagreement_rate) + " (lambda_2 " +
                 num(l2_slow) + ")";
  }
  return o;
}

Outcome ac3() {
  Outcome o;
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<std::size_t> size(2, 15);
  std::uniform_real_distribution<double> prob(0.5, 1.0), u01(0.0, 1.0);
  double worst = 0.0, worst_homog = 0.0;
  std::size_t homog_cases = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = size(rng);
    const auto topo = build_neighbor_graph(generate_uniform_sites(n, kRegion, rng()), kRegion, prob(rng), rng());
    const bool homog = trial % 5 == 0;
    std::vector<LocalPolicy> locals;
    if (homog) {
      locals.assign(n, random_local(rng));
    } else {
      for (std::size_t i = 0; i < n; ++i) locals.push_back(random_local(rng));
    }
    PolicyAssignment assign(locals, random_coupling(rng));
    if (!homog)
      for (const auto& e : topo.edges())
        if (u01(rng) < 0.5) assign.set_pair_coupling(e.first, e.second, random_coupling(rng));
    const std::vector<double> ones(n, 1.0);
    const Eigen::MatrixXd fd = fd_jacobian(topo, assign, ones);
    const Eigen::MatrixXd j = build_variational_matrices(topo, assign).J;
    worst = std::max(worst, (fd - j).cwiseAbs().maxCoeff());
    if (homog) {
      ++homog_cases;
      const double fp = local_derivative(locals[0], 1.0);
      const double h = coupling_slope_h(assign.shared_coupling(), 1.0);
      const Eigen::MatrixXd closed = fp * Eigen::MatrixXd::Identity(n, n) + h * laplacian(topo);
      worst_homog = std::max(worst_homog, (fd - closed).cwiseAbs().maxCoeff());
    }
  }
  expect(o, worst <= 1e-5, "max |FD - J| = " + num(worst));
  expect(o, worst_homog <= 1e-5, "max |FD - (f'I + hL)| = " + num(worst_homog));
  if (o.pass)
    o.detail = "50 scenarios, max |FD - J| = " + num(worst) + "; " + std::to_string(homog_cases) +
               " homogeneous, max |FD - (f'I + hL)| = " + num(worst_homog);
  return o;
}

oracle::Rational exact(double v) {
  // Every finite double is a dyadic rational.
  int e = 0;
  const double m = std::frexp(v, &e);
  const auto mant = static_cast<long long>(std::ldexp(m, 53));
  oracle::Rational r(mant);
  e -= 53;
  oracle::Rational p = 1;
  for (int k = 0; k < std::abs(e); ++k) p *= 2;
  if (e >= 0) return r * p;
  return r / p;
}

oracle::Rational exact_eval(const Polynomial& p, const oracle::Rational& x) {
  oracle::Rational acc = 0;
  const auto& c = p.coeffs();
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + exact(*it);
  return acc;
}

Outcome ac4() {
  Outcome o;
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<std::size_t> size(2, 20);
  std::uniform_real_distribution<double> prob(0.3, 1.0), x(-2.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = size(rng);
    const auto topo = build_neighbor_graph(generate_uniform_sites(n, kRegion, rng()), kRegion, prob(rng), rng());
    PolicyAssignment assign(std::vector<LocalPolicy>(n, random_local(rng)), random_coupling(rng));
    // Symmetric instance: each edge carries one coupling in both directions.
    for (const auto& e : topo.edges()) {
      const auto g = random_coupling(rng);
      assign.set_pair_coupling(e.first, e.second, g);
      assign.set_pair_coupling(e.second, e.first, g);
    }
    std::vector<double> v(n);
    for (auto& xi : v) xi = x(rng);

    auto m = build_variational_matrices(topo, assign);
    m.F.setZero();
    const double got = lyapunov_decrement(m, v) / 2.0;  // x^T (K - Q) x

    oracle::Rational want = 0;
    for (const auto& e : topo.edges()) {
      const auto& g = assign.coupling(e.first, e.second);
      const oracle::Rational one = 1;
      const oracle::Rational q = -(exact_eval(g.p, one) + exact_eval(g.q, one) + exact(g.c));
      const oracle::Rational d = exact(v[e.first]) - exact(v[e.second]);
      want += q * d * d;  // each unordered edge appears twice in the half sum
    }
    const double w = static_cast<double>(want);
    const double rel = std::abs(got - w) / std::max(std::abs(w), std::numeric_limits<double>::min());
    worst = std::max(worst, rel);
  }
  expect(o, worst <= 1e-9, "worst relative error " + num(worst));
  if (o.pass) o.detail = "500 instances, worst relative error " + num(worst);
  return o;
}

Outcome ac5() {
  Outcome o;
  std::size_t graphs = 0, five = 0;
  double worst = 0.0;
  for (std::size_t n = 1; n <= 5; ++n) {
    const auto all = oracle::nonisomorphic_graphs(n);
    graphs += all.size();
    if (n == 5) five = all.size();
    for (const auto& edges : all) {
      std::vector<Edge> es(edges.begin(), edges.end());
      const auto got = spectrum(laplacian(NetworkTopology::from_edges(n, es))).eigenvalues;
      const auto want = oracle::laplacian_eigenvalues(n, edges);
      if (got.size() != want.size()) {
        expect(o, false, "eigenvalue count mismatch on n=" + std::to_string(n));
        continue;
      }
      for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    }
  }
  expect(o, five == 34, "five-node graph count " + std::to_string(five));
  expect(o, worst <= 1e-8, "max eigenvalue error " + num(worst));

  // Closed forms: K_N has {0, N x (N-1)}, P_3 has {0, 1, 3}. Agreement to a few ulp of N.
  double closed_worst_ulps = 0.0;
  for (std::size_t n = 2; n <= 12; ++n) {
    std::vector<Edge> es;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) es.push_back({i, j});
    const auto ev = spectrum(laplacian(NetworkTopology::from_edges(n, es))).eigenvalues;
    const double ulp = std::numeric_limits<double>::epsilon() * static_cast<double>(n);
    closed_worst_ulps = std::max(closed_worst_ulps, std::abs(ev[0]) / ulp);
    for (std::size_t i = 1; i < n; ++i)
      closed_worst_ulps = std::max(closed_worst_ulps, std::abs(ev[i] - static_cast<double>(n)) / ulp);
  }
  const auto p3 = spectrum(laplacian(NetworkTopology::from_edges(3, {{0, 1}, {1, 2}}))).eigenvalues;
  const double ulp3 = 3 * std::numeric_limits<double>::epsilon();
  closed_worst_ulps = std::max({closed_worst_ulps, std::abs(p3[0]) / ulp3, std::abs(p3[1] - 1.0) / ulp3,
                                std::abs(p3[2] - 3.0) / ulp3});
  expect(o, closed_worst_ulps <= 16.0, "closed forms off by " + num(closed_worst_ulps) + " ulp");
  if (o.pass)
    o.detail = std::to_string(graphs) + " graphs on <= 5 nodes (" + std::to_string(five) +
               " on 5), max error " + num(worst) + "; closed forms within " + num(closed_worst_ulps) + " ulp";
  return o;
}

struct SleepRun {
  StabilityReport report;
  SyncMetrics metrics;
  std::vector<ClusterState> clusters;
  std::vector<double> final_loads;
  std::vector<bool> sleep_capable;
};

SleepRun sleep_scenario(double gamma, std::uint64_t seed) {
  const auto sites = generate_ppp(25e-6, kRegion, derive_seed(seed, "topology.sites"));
  const auto topo = build_neighbor_graph(sites, kRegion, 1.0, derive_seed(seed, "topology.edges"));
  const std::size_t n = topo.size();
  PolicyAssignment assign(std::vector<LocalPolicy>(n, LocalPolicy::linear_restoring(1.0)),
                          CouplingPolicy::linear_diffusive(-1.0));
  auto rng = make_stream(seed, "policies");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SleepRun r;
  r.sleep_capable.assign(n, false);
  for (std::size_t i = 0; i < n; ++i)
    if (u(rng) < 0.5) {
      assign.set_local(i, LocalPolicy::sleep_quadratic(1.0, gamma));
      r.sleep_capable[i] = true;
    }
  SimulationConfig cfg;
  cfg.horizon = 20.0;
  const auto init = uniform_initial_loads(n, 0.2, 1.8, derive_seed(seed, "initial"));
  r.report = audit(topo, assign, AuditOptions{0.2});
  const auto traj = integrate(cfg, init, topo, assign);
  r.metrics = sync_metrics(traj, cfg);
  r.clusters = classify_terminal_states(traj, assign, &r.report.verdict.culprits);
  r.final_loads = traj.states.back();
  return r;
}

Outcome ac6() {
  Outcome o;
  const auto t0 = Clock::now();
  const std::uint64_t seed = 606;
  const auto low = sleep_scenario(0.05, seed);
  expect(o, low.metrics.synchronized, "gamma=0.05 did not synchronize");
  expect(o, max_abs_deviation(low.final_loads) <= 1e-3,
         "gamma=0.05 max |l - 1| = " + num(max_abs_deviation(low.final_loads)));

  const auto high = sleep_scenario(0.5, seed);
  std::size_t slept = 0;
  double deepest = 1.0;
  for (std::size_t i = 0; i < high.final_loads.size(); ++i)
    if (high.sleep_capable[i] && high.final_loads[i] < 0.5) {
      ++slept;
      deepest = std::min(deepest, high.final_loads[i]);
    }
  expect(o, slept >= 1, "gamma=0.5 left no cell below gamma");
  expect(o, deepest <= 1e-3, "slept cell settled at " + num(deepest) + ", not near 0");
  expect(o, !high.metrics.synchronized, "gamma=0.5 synchronized");
  expect(o, high.report.verdict.verdict == Verdict::NotGuaranteed,
         "gamma=0.5 verdict " + std::string(to_string(high.report.verdict.verdict)));
  bool culprits_ok = !high.report.verdict.culprits.empty();
  for (const auto& c : high.report.verdict.culprits) culprits_ok &= high.sleep_capable.at(c.cell);
  expect(o, culprits_ok, "culprits are not all sleep-capable cells");
  const double secs = seconds_since(t0);
  expect(o, secs < 10.0, "runtime " + num(secs) + " s");
  if (o.pass)
    o.detail = std::to_string(high.final_loads.size()) + " cells; gamma=0.5: " + std::to_string(slept) +
               " slept, " + std::to_string(high.report.verdict.culprits.size()) + " culprits; " + num(secs) + " s";
  return o;
}

Outcome ac7() {
  Outcome o;
  for (double prb : {25.0, 50.0, 100.0}) {
    for (std::size_t u = 1; u <= 50; ++u) {
      oracle::Rational h = 0;
      for (std::size_t x = 1; x <= u; ++x) h += oracle::Rational(1, static_cast<long>(x));
      const double want = static_cast<double>(exact(prb) / static_cast<long>(u) * h);
      const auto got = harmonic_prb_share(prb, u);
      expect(o, got && *got == want, "harmonic share B=" + num(prb) + ", U=" + std::to_string(u));
    }
  }

  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> m(-130.0, -60.0), theta(-10.0, 10.0), hys(0.0, 6.0);
  for (int k = 0; k < 1000; ++k) {
    const double mi = m(rng), mj = m(rng), tij = theta(rng), tji = theta(rng), h = hys(rng);
    expect(o, evaluate_handover(mi, mj, tij, tji, h) == (mj + tji > h + mi + tij), "handover truth table");
  }

  std::uniform_real_distribution<double> pos(0.0, 1000.0), tx(40.0, 46.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 15;
    std::vector<CellSite> sites;
    RadioConfig c = RadioConfig::uniform(n, 46, 100);
    for (std::size_t i = 0; i < n; ++i) {
      sites.push_back({i, {pos(rng), pos(rng)}});
      c.tx_power_dbm[i] = tx(rng);
    }
    std::vector<User> users;
    for (int k = 0; k < 30; ++k) users.push_back(User{{pos(rng), pos(rng)}, 1e6, std::nullopt});
    const auto a = assign_users(sites, users, c);
    for (std::size_t k = 0; k < users.size(); ++k) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (rsrp_dbm(sites[i], users[k], c) > rsrp_dbm(sites[best], users[k], c)) best = i;
      expect(o, a.serving[k] == best, "zero-offset assignment differs from max-RSRP");
    }
  }
  if (o.pass) o.detail = "150 harmonic shares, 1000 handover draws, 100 assignment instances";
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int pipeline(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "scenario.json") << R"({
  "schema": 1,
  "seed": 808,
  "topology": {"kind": "ppp", "intensity_per_km2": 25, "region": [1000, 1000], "P": 0.9},
  "policies": {
    "local": {
      "f1": {"form": "linear", "alpha": 1},
      "f2": {"form": "sleep_quadratic", "alpha": 1, "gamma": 0.3}
    },
    "couplings": {"diff": {"form": "diffusive", "beta": -1}},
    "default_local": "f1",
    "default_coupling": "diff",
    "random_local": {"policy": "f2", "fraction": 0.5}
  },
  "radio": {"tx_power_dbm": 46, "prb_count": 50, "users": {"count": 400, "demand_bps": 1e6}},
  "simulation": {"horizon": 10, "initial": {"kind": "from-radio"}},
  "output": "out"
})";
  const std::string s = (dir / "scenario.json").string();
  const std::string out = (dir / "out").string();
  std::ostringstream sink;
  int worst = 0;
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"generate", "--seed", "808", "--intensity", "25", "--out-dir", out + "/gen"},
           {"audit", "--scenario", s},
           {"simulate", "--scenario", s},
           {"report", "--scenario", s}}) {
    const int code = cli::run(args, sink, sink);
    if (code == cli::kExitError) worst = 1;
  }
  return worst;
}

Outcome ac8() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "lbstab_acceptance_determinism";
  const fs::path a = root / "a", b = root / "b";
  expect(o, pipeline(a) == 0, "first pipeline run failed");
  expect(o, pipeline(b) == 0, "second pipeline run failed");
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a / "out")) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext != ".csv" && ext != ".json") continue;
    const auto rel = fs::relative(entry.path(), a);
    ++files;
    expect(o, fs::exists(b / rel), rel.string() + " missing from second run");
    expect(o, slurp(entry.path()) == slurp(b / rel), rel.string() + " differs between runs");
  }
  expect(o, files >= 8, "only " + std::to_string(files) + " output files");
  if (o.pass) o.detail = std::to_string(files) + " CSV/JSON files byte-identical";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1 homogeneous synchronization", ac1}, {"AC2 rate agreement", ac2},
      {"AC3 linearization identity", ac3},      {"AC4 Lyapunov identity", ac4},
      {"AC5 spectrum oracle", ac5},             {"AC6 sleep-mode bifurcation", ac6},
      {"AC7 radio layer", ac7},                 {"AC8 determinism", ac8}};
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    std::cout << (r.pass ? "PASS " : "FAIL ") << name << ": " << r.detail << std::endl;
    failures += !r.pass;
  }
  return failures == 0 ? 0 : 1;
}
