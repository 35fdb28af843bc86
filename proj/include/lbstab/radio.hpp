#pragma once
// PRB-based cell loads and the RSRP/CIO handover rule that produces them.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "lbstab/geometry.hpp"
#include "lbstab/topology.hpp"

namespace lbstab {

struct RadioConfig {
  std::vector<double> tx_power_dbm;  // per cell
  double path_loss_exponent = 3.5;
  double reference_loss_db = 30.0;  // at 1 m
  double noise_power_dbm = -120.0;  // per PRB
  std::vector<double> prb_count;    // B_i per cell
  double prb_bandwidth_hz = 180e3;
  double hysteresis_db = 0.0;
  // cio[i][j] = theta_{i->j} in dB; empty means all zero.
  std::vector<std::vector<double>> cio;

  // Uniform configuration for n cells.
  static RadioConfig uniform(std::size_t n, double tx_power_dbm, double prb_count);

  double offset(std::size_t from, std::size_t to) const;
  // Throws ConfigError on size mismatches, prb_count < 1, Hys < 0, or a
  // non-zero CIO diagonal.
  void validate(std::size_t cells) const;
};

struct User {
  Point2 position;
  double demand_bps = 1e6;
  std::optional<std::size_t> serving_cell;
};

double rsrp_dbm(const CellSite& cell, const User& user, const RadioConfig& config);

// Strict 3GPP A3-style entry condition: M_j + theta_{j->i} > Hys + M_i + theta_{i->j}.
bool evaluate_handover(double rsrp_serving, double rsrp_neighbor, double cio_serving_to_neighbor,
                       double cio_neighbor_to_serving, double hysteresis_db);

struct UserAssignment {
  std::vector<std::size_t> serving;    // per user
  std::vector<std::size_t> handovers;  // handovers performed per user
};

// Max-RSRP seeding (ties to the lower cell id), then repeated handover passes
// in id order until none fires. More than N handovers for one user throws
// ConfigError.
UserAssignment assign_users(std::span<const CellSite> sites, std::span<const User> users,
                            const RadioConfig& config);

struct UserPrbDemand {
  std::size_t user = 0;
  std::size_t cell = 0;
  double rate_per_prb_bps = 0.0;    // w(P_u,i, N_0)
  std::optional<double> min_prbs;   // ceil(Q_u / w); absent when unservable
  std::optional<double> harmonic_share;  // (B_i / U_i) * H(U_i)
  bool servable = true;
};

struct CellLoadSnapshot {
  std::vector<double> loads;             // l_i
  std::vector<std::size_t> user_counts;  // U_i
  std::vector<std::optional<double>> harmonic_share;  // per cell; absent for U_i = 0
  std::vector<UserPrbDemand> users;
  std::size_t unservable_users = 0;
};

// H(n) = sum_{x=1}^{n} 1/x, accumulated from the smallest term.
double harmonic_number(std::size_t n);

// (B / U) * H(U); absent for U = 0.
std::optional<double> harmonic_prb_share(double prb_count, std::size_t users);

CellLoadSnapshot cell_loads(std::span<const CellSite> sites, std::span<const User> users,
                            const UserAssignment& assignment, const RadioConfig& config);

std::vector<double> snapshot_to_initial_loads(const CellLoadSnapshot& snapshot);

// Users uniform in the region with a fixed demand.
std::vector<User> generate_users(std::size_t count, const Region& region, double demand_bps,
                                 std::uint64_t seed);

}  // namespace lbstab
