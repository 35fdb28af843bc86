#pragma once
// Analytic stability verdicts for the synchronized state l_i = 1.

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lbstab/policy.hpp"
#include "lbstab/topology.hpp"

namespace lbstab {

enum class Verdict { Stable, Unstable, NotGuaranteed };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

// Ordering used to combine verdicts: Unstable dominates NotGuaranteed, which
// dominates Stable.
Verdict worst(Verdict a, Verdict b);

enum class CulpritKind { LocalDynamics = 0, Coupling = 1, SleepMode = 2 };

struct Culprit {
  std::size_t cell = 0;
  CulpritKind kind = CulpritKind::LocalDynamics;
  std::string reason;
  // The gating decision handed to whoever admits load balancing for the cell.
  std::string action = "deny-load-balancing";
};

struct StabilityVerdict {
  Verdict verdict = Verdict::Stable;
  std::string rationale;
  std::vector<Culprit> culprits;  // empty iff verdict == Stable
};

struct HomogeneousAssessment {
  double f_prime = 0.0;
  double h = 0.0;
  std::vector<double> mode_rates;  // f' + h * lambda_i, in spectrum order
  StabilityVerdict verdict;
  double slowest_rate = 0.0;
};

// Mode i decays like exp((f' + h lambda_i) t).
HomogeneousAssessment assess_homogeneous(double f_prime, double h, const SpectralSummary& spectrum);

struct ConvergenceEstimate {
  double uniform_rate;                       // f', the lambda_1 = 0 mode
  std::optional<double> disagreement_rate;  // max_{i >= 2} f' + h lambda_i; absent for N = 1
};

// Throws ContractViolation unless the assessment is Stable.
ConvergenceEstimate convergence_rate_estimate(const HomogeneousAssessment& assessment);

struct VariationalMatrices {
  Eigen::MatrixXd A;  // adjacency
  Eigen::MatrixXd F;  // diag f_i'(s)
  Eigen::MatrixXd H;  // h_ij(s, s), zero diagonal
  Eigen::MatrixXd Q;  // A .* H
  Eigen::MatrixXd K;  // diag of Q row sums
  Eigen::MatrixXd J;  // F + K - Q
  bool h_asymmetric = false;     // Q != Q^T beyond 1e-9
  std::vector<bool> sleeping;    // cells linearised on the asleep side
};

// Linearisation of the coupled system about the synchronized state s.
//
// Cells flagged in `sleeping` use one-sided coupling slopes from below their
// threshold: their own row takes the sleep-drain slope, and awake partners
// receive nothing from them (slope 0). Every other cell must be awake at s,
// otherwise ContractViolation ("linearization at s crosses sleep threshold").
VariationalMatrices build_variational_matrices(const NetworkTopology& topology,
                                               const PolicyAssignment& assignment, double s = 1.0,
                                               const std::vector<bool>& sleeping = {});

// (a) symmetric Q, every edge slope h_ij < 0 and every f_i' < 0: Stable by
//     V(x) = x^T x.
// (b) symmetric Q otherwise: Stable iff the largest eigenvalue of
//     (J + J^T)/2 is negative ("spectral test"), else Unstable.
// (c) asymmetric Q: NotGuaranteed.
StabilityVerdict assess_heterogeneous(const VariationalMatrices& matrices);

// 2 (x^T F x + x^T (K - Q) x)
double lyapunov_decrement(const VariationalMatrices& matrices, std::span<const double> x);

// Eigenvalues of the symmetric part (J + J^T)/2, ascending.
std::vector<double> symmetric_part_eigenvalues(const Eigen::MatrixXd& j);

// Real parts of the eigenvalues of J, ascending.
std::vector<double> jacobian_mode_rates(const Eigen::MatrixXd& j);

struct AuditOptions {
  // Lowest load the cells are expected to visit. Sleep-capable cells whose
  // threshold lies above it can fall asleep and break the symmetry of the
  // offloading dynamics.
  double envelope_min_load = 0.0;
};

struct ComponentReport {
  std::vector<std::size_t> cells;
  Verdict verdict = Verdict::Stable;
  std::string method;  // "eigenmode", "lyapunov", "spectral test", "sleep asymmetry"
  std::vector<double> mode_rates;
  double algebraic_connectivity = 0.0;
  double slowest_rate = 0.0;
  std::optional<double> uniform_rate;
  std::optional<double> disagreement_rate;
};

struct StabilityReport {
  StabilityVerdict verdict;
  bool homogeneous = false;
  std::vector<double> mode_rates;  // ascending, all components
  double slowest_rate = 0.0;
  std::optional<double> uniform_rate;
  std::optional<double> disagreement_rate;
  std::vector<ComponentReport> components;
};

// Whole-network check run per connected component; culprits are attributed
// local dynamics first, then couplings, then sleep-capable cells, one entry
// per cell.
StabilityReport audit(const NetworkTopology& topology, const PolicyAssignment& assignment,
                      const AuditOptions& options = {});

}  // namespace lbstab
