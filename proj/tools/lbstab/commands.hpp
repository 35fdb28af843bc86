#pragma once
// Subcommands of the lbstab tool. Each returns the process exit code and
// writes human-readable output to `out` and diagnostics to `err`.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lbstab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUnstable = 2;
inline constexpr int kExitNotGuaranteed = 3;
inline constexpr int kExitBlowup = 4;

struct GlobalOptions {
  std::optional<std::string> scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::string format = "json";  // json | csv
};

struct GenerateOptions {
  double intensity_per_km2 = 50.0;
  std::string region = "1000x1000";
  double probability = 1.0;
  std::optional<std::size_t> sites;  // fixed count instead of a Poisson draw
};

struct FitOptions {
  std::string samples;
  std::size_t degree = 2;
  std::optional<std::string> output;
};

struct SimulateOptions {
  std::optional<std::string> initial;  // uniform | perturb | from-radio | explicit
};

struct SweepOptions {
  std::vector<std::string> vary;  // "<json-pointer>=v1,v2,..."
  std::size_t threads = 0;        // 0 = hardware concurrency
};

int cmd_generate(const GlobalOptions& g, const GenerateOptions& o, std::ostream& out, std::ostream& err);
int cmd_fit(const GlobalOptions& g, const FitOptions& o, std::ostream& out, std::ostream& err);
int cmd_audit(const GlobalOptions& g, std::ostream& out, std::ostream& err);
int cmd_simulate(const GlobalOptions& g, const SimulateOptions& o, std::ostream& out, std::ostream& err);
int cmd_sweep(const GlobalOptions& g, const SweepOptions& o, std::ostream& out, std::ostream& err);
int cmd_report(const GlobalOptions& g, std::ostream& out, std::ostream& err);

// Full command-line front end; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lbstab::cli
