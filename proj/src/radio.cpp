#include "lbstab/radio.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "lbstab/error.hpp"
#include "lbstab/rng.hpp"

namespace lbstab {

RadioConfig RadioConfig::uniform(std::size_t n, double tx_power_dbm, double prb_count) {
  RadioConfig c;
  c.tx_power_dbm.assign(n, tx_power_dbm);
  c.prb_count.assign(n, prb_count);
  return c;
}

double RadioConfig::offset(std::size_t from, std::size_t to) const {
  if (cio.empty()) return 0.0;
  return cio.at(from).at(to);
}

void RadioConfig::validate(std::size_t cells) const {
  if (tx_power_dbm.size() != cells || prb_count.size() != cells) {
    std::ostringstream os;
    os << "radio config describes " << tx_power_dbm.size() << " transmit powers and "
       << prb_count.size() << " PRB counts for " << cells << " cells";
    throw ConfigError(os.str());
  }
  for (double b : prb_count)
    if (!(b >= 1.0)) throw ConfigError("prb_count must be >= 1");
  if (!(hysteresis_db >= 0.0)) throw ConfigError("hysteresis must be >= 0 dB");
  if (!(prb_bandwidth_hz > 0.0)) throw ConfigError("prb_bandwidth must be positive");
  if (!cio.empty()) {
    if (cio.size() != cells) throw ConfigError("cio matrix must be N x N");
    for (std::size_t i = 0; i < cells; ++i) {
      if (cio[i].size() != cells) throw ConfigError("cio matrix must be N x N");
      if (cio[i][i] != 0.0) throw ConfigError("cio diagonal must be zero");
    }
  }
}

double rsrp_dbm(const CellSite& cell, const User& user, const RadioConfig& config) {
  const double d = std::max(1.0, std::hypot(user.position.x - cell.position.x,
                                            user.position.y - cell.position.y));
  return config.tx_power_dbm.at(cell.id) - config.reference_loss_db -
         10.0 * config.path_loss_exponent * std::log10(d);
}

bool evaluate_handover(double rsrp_serving, double rsrp_neighbor, double cio_serving_to_neighbor,
                       double cio_neighbor_to_serving, double hysteresis_db) {
  return rsrp_neighbor + cio_neighbor_to_serving > hysteresis_db + rsrp_serving + cio_serving_to_neighbor;
}

UserAssignment assign_users(std::span<const CellSite> sites, std::span<const User> users,
                            const RadioConfig& config) {
  const std::size_t n = sites.size();
  if (n == 0) throw ContractViolation("assign_users needs at least one cell");
  config.validate(n);
  UserAssignment out;
  out.serving.resize(users.size());
  out.handovers.assign(users.size(), 0);
  std::vector<double> m(n);
  for (std::size_t u = 0; u < users.size(); ++u) {
    for (std::size_t c = 0; c < n; ++c) m[c] = rsrp_dbm(sites[c], users[u], config);
    std::size_t serving = 0;
    for (std::size_t c = 1; c < n; ++c)
      if (m[c] > m[serving]) serving = c;

    bool moved = true;
    while (moved) {
      moved = false;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == serving) continue;
        if (evaluate_handover(m[serving], m[j], config.offset(serving, j), config.offset(j, serving),
                              config.hysteresis_db)) {
          serving = j;
          moved = true;
          if (++out.handovers[u] > n) {
            std::ostringstream os;
            os << "user " << u << " exceeded " << n
               << " handovers; CIO offsets and hysteresis are inconsistent";
            throw ConfigError(os.str());
          }
          break;
        }
      }
    }
    out.serving[u] = serving;
  }
  return out;
}

namespace {

// Extended-precision accumulation so the final rounding to double is the only
// one that matters for realistic user counts.
long double harmonic_wide(std::size_t n) {
  long double acc = 0.0L;
  for (std::size_t x = n; x >= 1; --x) acc += 1.0L / static_cast<long double>(x);
  return acc;
}

}  // namespace

double harmonic_number(std::size_t n) { return static_cast<double>(harmonic_wide(n)); }

std::optional<double> harmonic_prb_share(double prb_count, std::size_t users) {
  if (users == 0) return std::nullopt;
  return static_cast<double>(static_cast<long double>(prb_count) * harmonic_wide(users) /
                             static_cast<long double>(users));
}

CellLoadSnapshot cell_loads(std::span<const CellSite> sites, std::span<const User> users,
                            const UserAssignment& assignment, const RadioConfig& config) {
  const std::size_t n = sites.size();
  config.validate(n);
  if (assignment.serving.size() != users.size())
    throw ContractViolation("user assignment does not cover every user");
  CellLoadSnapshot snap;
  snap.loads.assign(n, 0.0);
  snap.user_counts.assign(n, 0);
  for (std::size_t cell : assignment.serving) snap.user_counts.at(cell) += 1;
  for (std::size_t c = 0; c < n; ++c)
    snap.harmonic_share.push_back(harmonic_prb_share(config.prb_count[c], snap.user_counts[c]));

  std::vector<double> demanded(n, 0.0);
  for (std::size_t u = 0; u < users.size(); ++u) {
    if (!(users[u].demand_bps > 0.0) || !std::isfinite(users[u].demand_bps))
      throw DomainError("user " + std::to_string(u) + " has a non-positive demand");
    const std::size_t cell = assignment.serving[u];
    UserPrbDemand d;
    d.user = u;
    d.cell = cell;
    const double snr_db = rsrp_dbm(sites[cell], users[u], config) - config.noise_power_dbm;
    d.rate_per_prb_bps = config.prb_bandwidth_hz * std::log2(1.0 + std::pow(10.0, snr_db / 10.0));
    d.harmonic_share = snap.harmonic_share[cell];
    const double prbs = std::ceil(users[u].demand_bps / d.rate_per_prb_bps);
    if (!(d.rate_per_prb_bps > 0.0) || !std::isfinite(prbs)) {
      d.servable = false;
      ++snap.unservable_users;
    } else {
      d.min_prbs = prbs;
      demanded[cell] += prbs;
    }
    snap.users.push_back(d);
  }
  for (std::size_t c = 0; c < n; ++c) snap.loads[c] = demanded[c] / config.prb_count[c];
  return snap;
}

std::vector<double> snapshot_to_initial_loads(const CellLoadSnapshot& snapshot) {
  return snapshot.loads;
}

std::vector<User> generate_users(std::size_t count, const Region& region, double demand_bps,
                                 std::uint64_t seed) {
  if (!(demand_bps > 0.0)) throw ContractViolation("user demand must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> ux(0.0, region.width);
  std::uniform_real_distribution<double> uy(0.0, region.height);
  std::vector<User> users(count);
  for (auto& u : users) {
    const double x = ux(rng);
    u.position = Point2{x, uy(rng)};
    u.demand_bps = demand_bps;
  }
  return users;
}

}  // namespace lbstab
