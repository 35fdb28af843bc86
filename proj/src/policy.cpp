#include "lbstab/policy.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "lbstab/error.hpp"

namespace lbstab {

namespace {

void require_load(double load, const char* what) {
  if (!(load >= 0.0) || !std::isfinite(load)) {
    std::ostringstream os;
    os << what << ": load must be finite and >= 0, got " << load;
    throw DomainError(os.str());
  }
}

void require_degree(const Polynomial& p, const char* what) {
  if (p.coeffs().size() > kMaxPolicyDegree + 1) {
    std::ostringstream os;
    os << what << ": " << p.coeffs().size() << " coefficients exceeds the maximum degree "
       << kMaxPolicyDegree;
    throw PolicyError(os.str());
  }
  for (double c : p.coeffs())
    if (!std::isfinite(c)) throw PolicyError(std::string(what) + ": non-finite coefficient");
}

}  // namespace

ActivationMode ActivationMode::sleep_capable(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    std::ostringstream os;
    os << "sleep threshold gamma must satisfy 0 < gamma < 1, got " << gamma;
    throw PolicyError(os.str());
  }
  ActivationMode m;
  m.gamma_ = gamma;
  return m;
}

LocalPolicy::LocalPolicy(ActivationMode mode, Polynomial active_branch,
                         std::optional<Polynomial> sleep_branch)
    : mode_(mode), active_(std::move(active_branch)), sleep_(std::move(sleep_branch)) {
  require_degree(active_, "local policy");
  if (sleep_) {
    if (!mode_.is_sleep_capable())
      throw PolicyError("a below-threshold branch requires a sleep-capable mode");
    require_degree(*sleep_, "local policy sleep branch");
  }
  const double at_one = active_(1.0);
  if (std::fabs(at_one) > kEquilibriumTolerance) {
    std::ostringstream os;
    os << "local policy violates the equilibrium requirement f(1) = 0 (f(1) = " << at_one << ")";
    throw PolicyError(os.str());
  }
}

LocalPolicy LocalPolicy::quadratic_restoring(double alpha) {
  return LocalPolicy(ActivationMode::active(), Polynomial({alpha, 0.0, -alpha}));
}

LocalPolicy LocalPolicy::linear_restoring(double alpha) {
  return LocalPolicy(ActivationMode::active(), Polynomial({alpha, -alpha}));
}

LocalPolicy LocalPolicy::sleep_quadratic(double alpha, double gamma) {
  // alpha (l - gamma)(1 - l) = alpha (-gamma + (1 + gamma) l - l^2)
  return LocalPolicy(ActivationMode::sleep_capable(gamma),
                     Polynomial({-alpha * gamma, alpha * (1.0 + gamma), -alpha}));
}

CouplingPolicy CouplingPolicy::linear_diffusive(double beta) {
  CouplingPolicy g;
  g.c = -beta;
  g.sleep_drain = Polynomial({0.0, beta});
  return g;
}

PolicyAssignment::PolicyAssignment(std::vector<LocalPolicy> locals, CouplingPolicy shared_coupling)
    : locals_(std::move(locals)), shared_(std::move(shared_coupling)) {}

const CouplingPolicy& PolicyAssignment::coupling(std::size_t from, std::size_t to) const {
  if (!overrides_.empty()) {
    auto it = overrides_.find({from, to});
    if (it != overrides_.end()) return it->second;
  }
  return shared_;
}

void PolicyAssignment::set_local(std::size_t cell, LocalPolicy policy) {
  locals_.at(cell) = std::move(policy);
}

void PolicyAssignment::set_pair_coupling(std::size_t from, std::size_t to,
                                         CouplingPolicy coupling) {
  if (from >= locals_.size() || to >= locals_.size() || from == to)
    throw ContractViolation("pair coupling must name two distinct existing cells");
  overrides_.insert_or_assign({from, to}, std::move(coupling));
}

bool PolicyAssignment::homogeneous() const {
  for (const auto& p : locals_) {
    if (p.mode().is_sleep_capable()) return false;
    if (!(p == locals_.front())) return false;
  }
  for (const auto& [pair, g] : overrides_)
    if (!(g == shared_)) return false;
  return true;
}

PolicyAssignment PolicyAssignment::restrict_to(std::span<const std::size_t> cells) const {
  std::vector<LocalPolicy> sub;
  sub.reserve(cells.size());
  std::unordered_map<std::size_t, std::size_t> index;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    sub.push_back(locals_.at(cells[k]));
    index.emplace(cells[k], k);
  }
  PolicyAssignment out(std::move(sub), shared_);
  for (const auto& [pair, g] : overrides_) {
    auto a = index.find(pair.first);
    auto b = index.find(pair.second);
    if (a != index.end() && b != index.end()) out.overrides_.emplace(std::pair{a->second, b->second}, g);
  }
  return out;
}

double eval_local(const LocalPolicy& policy, double load) {
  require_load(load, "eval_local");
  return policy.mode().asleep_at(load) ? policy.sleep_branch()(load) : policy.active_branch()(load);
}

double local_derivative(const LocalPolicy& policy, double s) {
  require_load(s, "local_derivative");
  const auto& mode = policy.mode();
  if (mode.is_sleep_capable() && s == mode.gamma()) {
    std::ostringstream os;
    os << "derivative undefined at the sleep threshold gamma = " << s;
    throw AmbiguityError(os.str());
  }
  const Polynomial& branch = mode.asleep_at(s) ? policy.sleep_branch() : policy.active_branch();
  return branch.derivative()(s);
}

double eval_coupling(const CouplingPolicy& coupling, const ActivationMode& mode_i,
                     const ActivationMode& mode_j, double load_i, double load_j) {
  require_load(load_i, "eval_coupling");
  require_load(load_j, "eval_coupling");
  if (mode_i.asleep_at(load_i)) return std::min(coupling.sleep_drain(load_i), 0.0);
  if (mode_j.asleep_at(load_j)) return 0.0;
  return (load_j - load_i) * (coupling.p(load_i) + coupling.q(load_j) + coupling.c);
}

double coupling_slope_h(const CouplingPolicy& coupling, double s) {
  return -(coupling.p(s) + coupling.q(s) + coupling.c);
}

FitResult fit_policy(std::span<const LoadRateSample> samples, std::size_t degree) {
  if (degree < 1) throw FitError("fit degree must be >= 1");
  if (degree > kMaxPolicyDegree) {
    std::ostringstream os;
    os << "fit degree " << degree << " exceeds the maximum " << kMaxPolicyDegree;
    throw FitError(os.str());
  }
  const std::size_t cols = degree + 1;
  if (samples.size() < cols) {
    std::ostringstream os;
    os << "underdetermined fit: " << samples.size() << " samples for degree " << degree
       << " (need at least " << cols << ")";
    throw FitError(os.str());
  }
  const auto rows = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd design(rows, static_cast<Eigen::Index>(cols));
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& s = samples[static_cast<std::size_t>(r)];
    if (!std::isfinite(s.load) || !std::isfinite(s.rate))
      throw FitError("non-finite sample at row " + std::to_string(r));
    double power = 1.0;
    for (std::size_t k = 0; k < cols; ++k) {
      design(r, static_cast<Eigen::Index>(k)) = power;
      power *= s.load;
    }
    rhs(r) = s.rate;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < static_cast<Eigen::Index>(cols)) {
    std::ostringstream os;
    os << "rank-deficient design matrix: rank " << qr.rank() << " < " << cols
       << " unknowns (too few distinct load values for degree " << degree << ")";
    throw FitError(os.str());
  }
  const Eigen::VectorXd solution = qr.solve(rhs);
  std::vector<double> coeffs(solution.data(), solution.data() + solution.size());
  const double adjustment = -Polynomial(coeffs)(1.0);
  coeffs[0] += adjustment;
  Polynomial fitted(std::move(coeffs));

  double sq = 0.0;
  for (const auto& s : samples) {
    const double e = fitted(s.load) - s.rate;
    sq += e * e;
  }
  return FitResult{LocalPolicy(ActivationMode::active(), std::move(fitted)), adjustment,
                   std::sqrt(sq / static_cast<double>(samples.size()))};
}

PolicyDiagnostics validate_policy(const LocalPolicy& policy) {
  PolicyDiagnostics d{};
  d.value_at_one = policy.active_branch()(1.0);
  d.equilibrium_ok = std::fabs(d.value_at_one) <= kEquilibriumTolerance;
  if (!d.equilibrium_ok) d.messages.push_back("fully loaded state l = 1 is not an equilibrium");

  d.slope_at_one = policy.active_branch().derivative()(1.0);
  d.destabilizing = d.slope_at_one >= 0.0;
  if (d.destabilizing) d.messages.push_back("destabilizing local dynamics");

  const auto& mode = policy.mode();
  d.sign_pattern_checked = mode.is_sleep_capable();
  d.sign_pattern_ok = true;
  if (d.sign_pattern_checked) {
    const double gamma = mode.gamma();
    const double upper = std::max(1.5, gamma + 1.0);
    constexpr int kGrid = 1000;
    for (int k = 0; k < kGrid; ++k) {
      const double l = upper * (k + 0.5) / kGrid;
      const double f = eval_local(policy, l);
      bool ok = true;
      if (l < gamma)
        ok = f < 0.0;
      else if (l > gamma && l < 1.0)
        ok = f > 0.0;
      if (!ok) {
        d.sign_pattern_ok = false;
        d.first_sign_violation = l;
        std::ostringstream os;
        os << "sleep-mode sign pattern violated at l = " << l << " (f = " << f << ")";
        d.messages.push_back(os.str());
        break;
      }
    }
  }
  return d;
}

}  // namespace lbstab
