#pragma once
// Scenario files: one JSON document ("schema": 1) naming the topology, the
// policies of every cell, optional radio layer and the simulation setup.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lbstab/io.hpp"
#include "lbstab/policy.hpp"
#include "lbstab/radio.hpp"
#include "lbstab/simulate.hpp"
#include "lbstab/stability.hpp"
#include "lbstab/topology.hpp"

namespace lbstab::cli {

inline constexpr int kScenarioSchema = 1;
inline constexpr const char* kToolVersion = "0.1.0";

struct InitialSpec {
  enum class Kind { Uniform, Perturb, FromRadio, Explicit };
  Kind kind = Kind::Uniform;
  double low = 0.2;
  double high = 1.8;
  double epsilon = 0.01;
  std::vector<double> loads;
};

struct RadioScenario {
  RadioConfig config;
  std::vector<User> users;
};

struct Scenario {
  io::Json source;
  std::string hash;  // hex FNV-1a of the canonical scenario text
  std::uint64_t seed = 0;
  NetworkTopology topology;
  PolicyAssignment policies;
  std::optional<RadioScenario> radio;
  SimulationConfig simulation;
  InitialSpec initial;
  std::filesystem::path output_dir;
};

// Throws SchemaError with a path-qualified message on any malformed field.
// Relative file references resolve against `base_dir`.
Scenario parse_scenario(const io::Json& doc, const std::filesystem::path& base_dir,
                        std::optional<std::uint64_t> seed_override = std::nullopt);
Scenario load_scenario(const std::filesystem::path& path,
                       std::optional<std::uint64_t> seed_override = std::nullopt);

// Closed-form policy shorthands accepted wherever a policy is expected:
//   {"form": "quadratic", "alpha": a}              a (1 - l^2)
//   {"form": "linear", "alpha": a}                 a (1 - l)
//   {"form": "sleep_quadratic", "alpha": a, "gamma": g}   a (l - g)(1 - l)
//   {"form": "diffusive", "beta": b}               coupling b (l_i - l_j), drain b l_i
LocalPolicy parse_local_policy(const io::Json& j);
CouplingPolicy parse_coupling(const io::Json& j);

std::vector<double> initial_loads(const Scenario& scenario);
AuditOptions audit_options(const Scenario& scenario);
std::optional<CellLoadSnapshot> radio_snapshot(const Scenario& scenario);

}  // namespace lbstab::cli
