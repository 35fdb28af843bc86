#pragma once
// JSON and CSV encodings of the library's values.

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "lbstab/policy.hpp"
#include "lbstab/radio.hpp"
#include "lbstab/simulate.hpp"
#include "lbstab/stability.hpp"
#include "lbstab/topology.hpp"

namespace lbstab::io {

using Json = nlohmann::ordered_json;

// Shortest round-trip decimal form.
std::string format_double(double v);

// {"mode": "active"|"sleep", "gamma": g?, "coeffs": [...], "sleep_coeffs": [...]?}
Json to_json(const LocalPolicy& policy);
LocalPolicy local_policy_from_json(const Json& j);

// {"p": [...], "q": [...], "c": c, "sleep_drain": [...]}
Json to_json(const CouplingPolicy& coupling);
CouplingPolicy coupling_from_json(const Json& j);

// {"region": [w, h], "sites": [[x, y], ...], "edges": [[i, j], ...], "seed": n, "P": p}
Json to_json(const NetworkTopology& topology);
NetworkTopology topology_from_json(const Json& j);

Json to_json(const StabilityReport& report);
Json to_json(const SyncMetrics& metrics);
Json to_json(const std::vector<ClusterState>& clusters);
Json to_json(const CellLoadSnapshot& snapshot);

// "index,eigenvalue" rows.
void write_spectrum_csv(std::ostream& os, const SpectralSummary& spectrum);
// "t,l_0,...,l_{N-1},modes"; modes is a hex bitmask (bit i = cell i asleep),
// most significant digit first, ceil(N/4) digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);
std::string mode_mask_hex(const std::vector<std::uint8_t>& flags);
// "cell,load,users"
void write_snapshot_csv(std::ostream& os, const CellLoadSnapshot& snapshot);

// Reads "load,rate" samples; header required, extra columns ignored.
std::vector<LoadRateSample> read_samples_csv(std::istream& is);

}  // namespace lbstab::io
