#include "lbstab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "lbstab/error.hpp"
#include "lbstab/kernels.hpp"
#include "lbstab/rng.hpp"

namespace lbstab {

namespace {
constexpr double kBlowupThreshold = 1e6;
}

void SimulationConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(horizon >= 100.0 * dt)) {
    std::ostringstream os;
    os << "horizon " << horizon << " must be at least 100 * dt = " << 100.0 * dt;
    throw ConfigError(os.str());
  }
  if (!(sync_tolerance > 0.0 && sync_tolerance < 1.0))
    throw ConfigError("sync_tolerance must lie in (0, 1)");
  if (record_stride == 0) throw ConfigError("record_stride must be >= 1");
  if (!(perturbation_amplitude >= 0.0)) throw ConfigError("perturbation amplitude must be >= 0");
  if (!(rate_window_low_factor > 0.0) || !(rate_window_high_fraction > 0.0))
    throw ConfigError("rate window bounds must be positive");
}

NetworkDynamics::NetworkDynamics(const NetworkTopology& topology,
                                 const PolicyAssignment& assignment, bool nonnegative_loads)
    : nonnegative_(nonnegative_loads) {
  const std::size_t n = topology.size();
  if (assignment.size() != n) {
    std::ostringstream os;
    os << "policy assignment covers " << assignment.size() << " cells, topology has " << n;
    throw ContractViolation(os.str());
  }
  locals_.reserve(n);
  links_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    locals_.push_back(&assignment.local(i));
    for (std::size_t j : topology.neighbors(i)) links_[i].push_back({j, &assignment.coupling(i, j)});
  }
}

void NetworkDynamics::operator()(std::span<const double> state, std::span<double> out) const {
  const std::size_t n = locals_.size();
  if (state.size() != n || out.size() != n)
    throw ContractViolation("rhs: state size does not match the network");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(state[i])) {
      std::ostringstream os;
      os << "non-finite load " << state[i] << " at cell " << i;
      throw IntegrationBlowup(os.str());
    }
  }
  auto load_of = [&](std::size_t i) {
    const double l = state[i];
    if (l >= 0.0) return l;
    if (nonnegative_) return 0.0;
    std::ostringstream os;
    os << "load of cell " << i << " left the domain [0, inf): " << l;
    throw DomainError(os.str());
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double li = load_of(i);
    const auto& mode_i = locals_[i]->mode();
    double rate = eval_local(*locals_[i], li);
    for (const auto& link : links_[i])
      rate += eval_coupling(*link.coupling, mode_i, locals_[link.to]->mode(), li, load_of(link.to));
    if (nonnegative_ && state[i] <= 0.0 && rate < 0.0) rate = 0.0;
    out[i] = rate;
  }
}

std::vector<std::uint8_t> NetworkDynamics::asleep(std::span<const double> state) const {
  std::vector<std::uint8_t> flags(locals_.size(), 0);
  for (std::size_t i = 0; i < locals_.size(); ++i)
    flags[i] = locals_[i]->mode().asleep_at(state[i]) ? 1 : 0;
  return flags;
}

std::vector<double> rhs(std::span<const double> state, const NetworkTopology& topology,
                        const PolicyAssignment& assignment) {
  NetworkDynamics dyn(topology, assignment);
  std::vector<double> out(state.size());
  dyn(state, out);
  return out;
}

Trajectory integrate(const SimulationConfig& config, std::span<const double> initial,
                     const NetworkTopology& topology, const PolicyAssignment& assignment) {
  config.validate();
  const NetworkDynamics dyn(topology, assignment, config.nonnegative_loads);
  const std::size_t n = dyn.size();
  if (initial.size() != n)
    throw ContractViolation("initial state has " + std::to_string(initial.size()) +
                            " loads for " + std::to_string(n) + " cells");
  for (double v : initial)
    if (!std::isfinite(v)) throw ContractViolation("initial state must be finite");

  std::vector<double> x(initial.begin(), initial.end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n);
  const double dt = config.dt;
  const auto steps = static_cast<std::size_t>(std::llround(config.horizon / dt));

  Trajectory traj;
  auto record = [&](double t) {
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.mode_flags.push_back(dyn.asleep(x));
  };
  record(0.0);

  for (std::size_t step = 1; step <= steps; ++step) {
    try {
      dyn(x, k1);
      kernels::axpy_into(stage, x, 0.5 * dt, k1);
      dyn(stage, k2);
      kernels::axpy_into(stage, x, 0.5 * dt, k2);
      dyn(stage, k3);
      kernels::axpy_into(stage, x, dt, k3);
      dyn(stage, k4);
    } catch (const Error& e) {
      traj.blowup = true;
      traj.blowup_reason = e.what();
      break;
    }
    kernels::rk4_combine(x, dt, k1, k2, k3, k4);
    if (config.nonnegative_loads) kernels::clamp_below(x, 0.0);

    const double t = static_cast<double>(step) * dt;
    if (!std::isfinite(kernels::sum(x))) {
      traj.blowup = true;
      traj.blowup_reason = "non-finite load at t = " + std::to_string(t);
      break;
    }
    if (kernels::max_abs_deviation(x, 0.0) > kBlowupThreshold) {
      record(t);
      traj.blowup = true;
      traj.blowup_reason = "load magnitude exceeded 1e6 at t = " + std::to_string(t);
      break;
    }
    if (step % config.record_stride == 0 || step == steps) record(t);
  }
  return traj;
}

std::vector<double> perturb(std::span<const double> state, double epsilon, std::uint64_t seed) {
  if (!(epsilon >= 0.0)) throw ContractViolation("perturbation amplitude must be >= 0");
  std::vector<double> out(state.begin(), state.end());
  if (epsilon == 0.0) return out;
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-epsilon, epsilon);
  for (double& v : out) v = std::max(0.0, v + u(rng));
  return out;
}

std::vector<double> uniform_initial_loads(std::size_t n, double low, double high,
                                          std::uint64_t seed) {
  if (!(low >= 0.0 && high > low)) throw ContractViolation("initial load range must satisfy 0 <= low < high");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(low, high);
  std::vector<double> out(n);
  for (double& v : out) v = u(rng);
  return out;
}

std::vector<LoadCluster> cluster_loads(std::span<const double> loads, double gap) {
  std::vector<std::size_t> order(loads.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return loads[a] < loads[b]; });
  std::vector<LoadCluster> clusters;
  double previous = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double v = loads[order[k]];
    if (k == 0 || v - previous > gap) clusters.emplace_back();
    clusters.back().members.push_back(order[k]);
    previous = v;
  }
  for (auto& c : clusters) {
    double acc = 0.0;
    for (std::size_t m : c.members) acc += loads[m];
    c.representative = acc / static_cast<double>(c.members.size());
    std::sort(c.members.begin(), c.members.end());
  }
  return clusters;
}

std::optional<double> fit_exponential_rate(std::span<const double> times,
                                           std::span<const double> deviations, double low,
                                           double high) {
  if (!(high > low)) return std::nullopt;
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < times.size() && k < deviations.size(); ++k) {
    const double d = deviations[k];
    if (!(d >= low && d <= high) || d <= 0.0) continue;
    const double y = std::log(d);
    st += times[k];
    sy += y;
    stt += times[k] * times[k];
    sty += times[k] * y;
    ++count;
  }
  if (count < 3) return std::nullopt;
  const double c = static_cast<double>(count);
  const double denom = c * stt - st * st;
  if (denom <= 0.0) return std::nullopt;
  return (c * sty - st * sy) / denom;
}

SyncMetrics sync_metrics(const Trajectory& traj, const SimulationConfig& config) {
  if (traj.states.empty()) throw ContractViolation("sync_metrics: empty trajectory");
  SyncMetrics m;
  m.terminal_clusters = cluster_loads(traj.states.back());
  if (traj.blowup) return m;

  const std::size_t samples = traj.states.size();
  std::vector<double> dev(samples), spread(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const auto& s = traj.states[k];
    dev[k] = kernels::max_abs_deviation(s, 1.0);
    const double mean = s.empty() ? 0.0 : kernels::sum(s) / static_cast<double>(s.size());
    spread[k] = kernels::max_abs_deviation(s, mean);
  }
  const double tol = config.sync_tolerance;
  auto first = std::find_if(dev.begin(), dev.end(), [&](double d) { return d < tol; });
  if (first != dev.end() && std::all_of(first, dev.end(), [&](double d) { return d < tol; })) {
    m.synchronized = true;
    m.sync_time = traj.times[static_cast<std::size_t>(first - dev.begin())];
  }
  const double low = config.rate_window_low_factor * tol;
  m.empirical_rate =
      fit_exponential_rate(traj.times, dev, low, config.rate_window_high_fraction * dev.front());
  m.empirical_disagreement_rate = fit_exponential_rate(
      traj.times, spread, low, config.rate_window_high_fraction * spread.front());
  return m;
}

std::vector<ClusterState> classify_terminal_states(const Trajectory& traj,
                                                   const PolicyAssignment& assignment,
                                                   const std::vector<Culprit>* culprits) {
  if (traj.states.empty()) throw ContractViolation("classify_terminal_states: empty trajectory");
  const auto& final_state = traj.states.back();
  if (final_state.size() != assignment.size())
    throw ContractViolation("trajectory and policy assignment disagree on cell count");
  std::vector<ClusterState> out;
  for (auto& cluster : cluster_loads(final_state)) {
    ClusterState cs;
    for (std::size_t m : cluster.members) {
      if (assignment.local(m).mode().asleep_at(final_state[m])) cs.slept.push_back(m);
      if (culprits != nullptr &&
          std::any_of(culprits->begin(), culprits->end(), [&](const Culprit& c) { return c.cell == m; }))
        cs.culprits.push_back(m);
    }
    cs.mode = cs.slept.empty() ? "active"
              : cs.slept.size() == cluster.members.size() ? "slept"
                                                          : "mixed";
    cs.cluster = std::move(cluster);
    out.push_back(std::move(cs));
  }
  return out;
}

}  // namespace lbstab
