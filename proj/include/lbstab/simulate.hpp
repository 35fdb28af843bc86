#pragma once
// Direct integration of the nonlinear coupled load dynamics.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lbstab/policy.hpp"
#include "lbstab/stability.hpp"
#include "lbstab/topology.hpp"

namespace lbstab {

struct SimulationConfig {
  double dt = 1e-3;
  double horizon = 20.0;
  double sync_tolerance = 1e-3;
  double perturbation_amplitude = 0.01;
  std::uint64_t seed = 0;
  std::size_t record_stride = 10;
  // Loads are fractions of capacity and cannot go negative. When set, a cell
  // at zero load cannot shed more and states are floored at 0 after every
  // step; when unset, leaving [0, inf) halts the run like a blowup.
  bool nonnegative_loads = true;
  // Window of the exponential rate fit: deviations within
  // [rate_window_low_factor * sync_tolerance, rate_window_high_fraction * initial].
  double rate_window_low_factor = 10.0;
  double rate_window_high_fraction = 0.5;

  // Throws ConfigError on dt <= 0, horizon < 100 dt, tolerance outside (0, 1),
  // stride 0.
  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  // mode_flags[k][i] != 0 iff cell i was asleep at sample k.
  std::vector<std::vector<std::uint8_t>> mode_flags;
  bool blowup = false;
  std::string blowup_reason;

  std::size_t cells() const { return states.empty() ? 0 : states.front().size(); }
};

// Right-hand side of dl_i/dt = f_i(l_i) + sum_j a_ij g_ij(l_i, l_j) bound to a
// topology and its policies. Each cell's mode is resolved from its current
// load.
class NetworkDynamics {
 public:
  NetworkDynamics(const NetworkTopology& topology, const PolicyAssignment& assignment,
                  bool nonnegative_loads = false);

  std::size_t size() const { return locals_.size(); }

  // Throws IntegrationBlowup on non-finite input, DomainError on negative
  // loads unless nonnegative_loads was requested.
  void operator()(std::span<const double> state, std::span<double> out) const;

  std::vector<std::uint8_t> asleep(std::span<const double> state) const;

 private:
  struct Link {
    std::size_t to;
    const CouplingPolicy* coupling;
  };
  std::vector<const LocalPolicy*> locals_;
  std::vector<std::vector<Link>> links_;
  bool nonnegative_;
};

std::vector<double> rhs(std::span<const double> state, const NetworkTopology& topology,
                        const PolicyAssignment& assignment);

// Classic fixed-step RK4. Samples at t = 0, every record_stride steps and at
// the final step. A run that blows up (|l| > 1e6 or non-finite) stops early
// and returns the partial trajectory with blowup set.
Trajectory integrate(const SimulationConfig& config, std::span<const double> initial,
                     const NetworkTopology& topology, const PolicyAssignment& assignment);

// Adds i.i.d. uniform(-eps, eps) noise to each load, clamped at 0.
std::vector<double> perturb(std::span<const double> state, double epsilon, std::uint64_t seed);

std::vector<double> uniform_initial_loads(std::size_t n, double low, double high,
                                          std::uint64_t seed);

struct LoadCluster {
  double representative = 0.0;        // mean final load of the members
  std::vector<std::size_t> members;   // ascending
};

struct SyncMetrics {
  bool synchronized = false;
  std::optional<double> sync_time;
  // Fitted exponential rate of max_i |l_i - 1|.
  std::optional<double> empirical_rate;
  // Fitted exponential rate of max_i |l_i - mean(l)|.
  std::optional<double> empirical_disagreement_rate;
  std::vector<LoadCluster> terminal_clusters;
};

// Single-linkage grouping of loads with the given gap.
std::vector<LoadCluster> cluster_loads(std::span<const double> loads, double gap = 0.05);

// Least-squares slope of log(dev) against t over samples whose deviation
// falls in [low, high]; absent with fewer than 3 samples in the window.
std::optional<double> fit_exponential_rate(std::span<const double> times,
                                           std::span<const double> deviations, double low,
                                           double high);

SyncMetrics sync_metrics(const Trajectory& trajectory, const SimulationConfig& config);

struct ClusterState {
  LoadCluster cluster;
  std::vector<std::size_t> slept;  // members whose final load is below their gamma
  std::string mode;                // "active", "slept" or "mixed"
  std::vector<std::size_t> culprits;  // members named by an audit, if given
};

std::vector<ClusterState> classify_terminal_states(const Trajectory& trajectory,
                                                   const PolicyAssignment& assignment,
                                                   const std::vector<Culprit>* culprits = nullptr);

}  // namespace lbstab
