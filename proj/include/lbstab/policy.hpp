#pragma once
// Local load dynamics f_i and pairwise offloading dynamics g_ij of each cell.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lbstab/polynomial.hpp"

namespace lbstab {

inline constexpr std::size_t kMaxPolicyDegree = 6;
inline constexpr double kEquilibriumTolerance = 1e-9;

// Active cells never sleep. Sleep-capable cells shed their load and power
// down whenever their load is strictly below the threshold gamma.
class ActivationMode {
 public:
  static ActivationMode active() { return ActivationMode{}; }
  // Throws PolicyError unless 0 < gamma < 1.
  static ActivationMode sleep_capable(double gamma);

  bool is_sleep_capable() const { return gamma_.has_value(); }
  double gamma() const { return gamma_.value_or(0.0); }
  // l < gamma: strict, a cell exactly at the threshold is awake.
  bool asleep_at(double load) const { return gamma_ && load < *gamma_; }

  friend bool operator==(const ActivationMode&, const ActivationMode&) = default;

 private:
  std::optional<double> gamma_;
};

// Self-load dynamics dl/dt = f(l). The active branch must vanish at l = 1
// (the fully loaded state is an equilibrium); construction enforces it.
class LocalPolicy {
 public:
  LocalPolicy(ActivationMode mode, Polynomial active_branch,
              std::optional<Polynomial> sleep_branch = std::nullopt);

  // Common closed forms.
  static LocalPolicy quadratic_restoring(double alpha);  // alpha (1 - l^2)
  static LocalPolicy linear_restoring(double alpha);     // alpha (1 - l)
  static LocalPolicy sleep_quadratic(double alpha, double gamma);  // alpha (l - gamma)(1 - l)

  const ActivationMode& mode() const { return mode_; }
  const Polynomial& active_branch() const { return active_; }
  // Same as the active branch when none was given.
  const Polynomial& sleep_branch() const { return sleep_ ? *sleep_ : active_; }
  bool has_distinct_sleep_branch() const { return sleep_.has_value(); }

  friend bool operator==(const LocalPolicy&, const LocalPolicy&) = default;

 private:
  ActivationMode mode_;
  Polynomial active_;
  std::optional<Polynomial> sleep_;
};

// g(l_i, l_j) = (l_j - l_i) (sum_n p_n l_i^n + sum_m q_m l_j^m + c)  between
// awake cells; a sleeping source cell instead sheds sleep_drain(l_i) <= 0 and
// an awake cell receives nothing from a sleeping partner.
struct CouplingPolicy {
  Polynomial p;
  Polynomial q;
  double c = 0.0;
  Polynomial sleep_drain;

  // beta (l_i - l_j) between awake cells, beta * l_i drained while asleep.
  static CouplingPolicy linear_diffusive(double beta);

  friend bool operator==(const CouplingPolicy&, const CouplingPolicy&) = default;
};

// Policies of every cell plus the couplings of every ordered pair.
class PolicyAssignment {
 public:
  PolicyAssignment(std::vector<LocalPolicy> locals, CouplingPolicy shared_coupling);

  std::size_t size() const { return locals_.size(); }
  const LocalPolicy& local(std::size_t cell) const { return locals_.at(cell); }
  const std::vector<LocalPolicy>& locals() const { return locals_; }
  const CouplingPolicy& shared_coupling() const { return shared_; }
  const CouplingPolicy& coupling(std::size_t from, std::size_t to) const;
  const std::map<std::pair<std::size_t, std::size_t>, CouplingPolicy>& pair_overrides() const {
    return overrides_;
  }

  void set_local(std::size_t cell, LocalPolicy policy);
  void set_pair_coupling(std::size_t from, std::size_t to, CouplingPolicy coupling);

  // All cells active, one local policy, one coupling for every pair.
  bool homogeneous() const;

  // Policies restricted to `cells` (re-indexed in the given order).
  PolicyAssignment restrict_to(std::span<const std::size_t> cells) const;

 private:
  std::vector<LocalPolicy> locals_;
  CouplingPolicy shared_;
  std::map<std::pair<std::size_t, std::size_t>, CouplingPolicy> overrides_;
};

double eval_local(const LocalPolicy& policy, double load);

// Analytic f'(s) on the branch selected by s. Throws AmbiguityError at s == gamma.
double local_derivative(const LocalPolicy& policy, double s);

double eval_coupling(const CouplingPolicy& coupling, const ActivationMode& mode_i,
                     const ActivationMode& mode_j, double load_i, double load_j);

// h(s, s) = dg/dl_i at (s, s) = -(p(s) + q(s) + c); dg/dl_j = -h.
double coupling_slope_h(const CouplingPolicy& coupling, double s);

struct LoadRateSample {
  double load;
  double rate;
};

struct FitResult {
  LocalPolicy policy;
  // Amount added to the constant coefficient to force f(1) = 0.
  double constant_adjustment;
  // RMS residual of the projected polynomial over the samples.
  double residual_rms;
};

// Least-squares polynomial of `degree`, then projected onto f(1) = 0 by
// shifting the constant term. Returns an Active policy.
FitResult fit_policy(std::span<const LoadRateSample> samples, std::size_t degree);

struct PolicyDiagnostics {
  double value_at_one;
  bool equilibrium_ok;
  bool sign_pattern_checked;
  bool sign_pattern_ok;
  std::optional<double> first_sign_violation;
  double slope_at_one;
  bool destabilizing;
  std::vector<std::string> messages;

  bool all_ok() const { return equilibrium_ok && sign_pattern_ok && !destabilizing; }
};

PolicyDiagnostics validate_policy(const LocalPolicy& policy);

}  // namespace lbstab
