#include "lbstab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "lbstab/error.hpp"
#include "lbstab/kernels.hpp"

namespace lbstab {

namespace {

constexpr double kSymmetryTolerance = 1e-9;

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Keeps the first (strongest) reason per cell, ordered by kind then cell.
std::vector<Culprit> normalise_culprits(std::vector<Culprit> in) {
  std::stable_sort(in.begin(), in.end(), [](const Culprit& a, const Culprit& b) {
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  });
  std::set<std::size_t> seen;
  std::vector<Culprit> out;
  for (auto& c : in)
    if (seen.insert(c.cell).second) out.push_back(std::move(c));
  return out;
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "Stable";
    case Verdict::Unstable: return "Unstable";
    case Verdict::NotGuaranteed: return "NotGuaranteed";
  }
  return "?";
}

Verdict verdict_from_string(std::string_view s) {
  if (s == "Stable") return Verdict::Stable;
  if (s == "Unstable") return Verdict::Unstable;
  if (s == "NotGuaranteed") return Verdict::NotGuaranteed;
  throw SchemaError("unknown verdict '" + std::string(s) + "'");
}

Verdict worst(Verdict a, Verdict b) {
  auto rank = [](Verdict v) {
    switch (v) {
      case Verdict::Stable: return 0;
      case Verdict::NotGuaranteed: return 1;
      case Verdict::Unstable: return 2;
    }
    return 2;
  };
  return rank(a) >= rank(b) ? a : b;
}

HomogeneousAssessment assess_homogeneous(double f_prime, double h, const SpectralSummary& spectrum) {
  HomogeneousAssessment out;
  out.f_prime = f_prime;
  out.h = h;
  out.mode_rates.reserve(spectrum.eigenvalues.size());
  for (double lambda : spectrum.eigenvalues) out.mode_rates.push_back(f_prime + h * lambda);
  out.slowest_rate = out.mode_rates.empty()
                         ? f_prime
                         : *std::max_element(out.mode_rates.begin(), out.mode_rates.end());
  const bool stable = std::all_of(out.mode_rates.begin(), out.mode_rates.end(),
                                  [](double r) { return r < 0.0; });
  if (stable) {
    out.verdict = {Verdict::Stable,
                   "every eigenmode rate f'(s) + h(s,s) lambda_i is negative (slowest " +
                       fmt_num(out.slowest_rate) + ")",
                   {}};
    return out;
  }
  out.verdict.verdict = Verdict::Unstable;
  const std::size_t n = spectrum.eigenvalues.size();
  if (f_prime >= 0.0) {
    out.verdict.rationale = "uniform mode rate f'(s) = " + fmt_num(f_prime) + " is not negative";
    for (std::size_t i = 0; i < n; ++i)
      out.verdict.culprits.push_back({i, CulpritKind::LocalDynamics,
                                      "destabilizing local dynamics (f'(1) = " + fmt_num(f_prime) + ")"});
  } else {
    out.verdict.rationale = "eigenmode rate " + fmt_num(out.slowest_rate) +
                            " is not negative: coupling slope h = " + fmt_num(h) +
                            " amplifies disagreement";
    for (std::size_t i = 0; i < n; ++i)
      out.verdict.culprits.push_back(
          {i, CulpritKind::Coupling, "non-dissipative coupling (h(1,1) = " + fmt_num(h) + ")"});
  }
  return out;
}

ConvergenceEstimate convergence_rate_estimate(const HomogeneousAssessment& assessment) {
  if (assessment.verdict.verdict != Verdict::Stable)
    throw ContractViolation("convergence rate requested for a non-Stable assessment");
  ConvergenceEstimate est{assessment.f_prime, std::nullopt};
  if (assessment.mode_rates.size() > 1)
    est.disagreement_rate =
        *std::max_element(assessment.mode_rates.begin() + 1, assessment.mode_rates.end());
  return est;
}

VariationalMatrices build_variational_matrices(const NetworkTopology& topology,
                                               const PolicyAssignment& assignment, double s,
                                               const std::vector<bool>& sleeping) {
  const std::size_t n = topology.size();
  if (assignment.size() != n) {
    std::ostringstream os;
    os << "policy assignment covers " << assignment.size() << " cells, topology has " << n;
    throw ContractViolation(os.str());
  }
  if (!sleeping.empty() && sleeping.size() != n)
    throw ContractViolation("sleeping mask size does not match the topology");

  VariationalMatrices m;
  m.sleeping = sleeping.empty() ? std::vector<bool>(n, false) : sleeping;
  const auto N = static_cast<Eigen::Index>(n);
  m.A = topology.adjacency_matrix();
  m.F = Eigen::MatrixXd::Zero(N, N);
  m.H = Eigen::MatrixXd::Zero(N, N);

  for (std::size_t i = 0; i < n; ++i) {
    const auto& local = assignment.local(i);
    if (!m.sleeping[i] && local.mode().asleep_at(s)) {
      std::ostringstream os;
      os << "linearization at s = " << s << " crosses sleep threshold of cell " << i
         << " (gamma = " << local.mode().gamma() << ")";
      throw ContractViolation(os.str());
    }
    if (m.sleeping[i] && !local.mode().is_sleep_capable())
      throw ContractViolation("cell " + std::to_string(i) + " is marked sleeping but cannot sleep");
    m.F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
        local.active_branch().derivative()(s);
  }

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& g = assignment.coupling(i, j);
      double h;
      if (m.sleeping[i])
        h = g.sleep_drain.derivative()(assignment.local(i).mode().gamma());
      else if (m.sleeping[j])
        h = 0.0;
      else
        h = coupling_slope_h(g, s);
      m.H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = h;
    }

  m.Q = m.A.cwiseProduct(m.H);
  m.K = m.Q.rowwise().sum().asDiagonal();
  m.J = m.F + m.K - m.Q;
  m.h_asymmetric = N > 0 && (m.Q - m.Q.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance;
  return m;
}

std::vector<double> symmetric_part_eigenvalues(const Eigen::MatrixXd& j) {
  if (j.size() == 0) return {};
  const Eigen::MatrixXd sym = 0.5 * (j + j.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

std::vector<double> jacobian_mode_rates(const Eigen::MatrixXd& j) {
  if (j.size() == 0) return {};
  std::vector<double> rates;
  if ((j - j.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTolerance) {
    rates = symmetric_part_eigenvalues(j);
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(j, false);
    const auto& ev = solver.eigenvalues();
    for (Eigen::Index k = 0; k < ev.size(); ++k) rates.push_back(ev(k).real());
  }
  std::sort(rates.begin(), rates.end());
  return rates;
}

StabilityVerdict assess_heterogeneous(const VariationalMatrices& m) {
  const auto n = static_cast<std::size_t>(m.F.rows());
  std::vector<Culprit> culprits;
  bool local_ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double fp = m.F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    if (fp >= 0.0) {
      local_ok = false;
      culprits.push_back({i, CulpritKind::LocalDynamics,
                          "destabilizing local dynamics (f'(1) = " + fmt_num(fp) + ")"});
    }
  }
  bool coupling_ok = true;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto I = static_cast<Eigen::Index>(i);
      const auto J = static_cast<Eigen::Index>(j);
      if (i == j || m.A(I, J) == 0.0) continue;
      if (m.sleeping[i] || m.sleeping[j]) continue;
      if (m.H(I, J) >= 0.0) {
        coupling_ok = false;
        culprits.push_back({i, CulpritKind::Coupling,
                            "non-dissipative coupling toward cell " + std::to_string(j) +
                                " (h = " + fmt_num(m.H(I, J)) + ")"});
      }
    }

  if (m.h_asymmetric) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto I = static_cast<Eigen::Index>(i);
        const auto J = static_cast<Eigen::Index>(j);
        if (std::fabs(m.Q(I, J) - m.Q(J, I)) <= kSymmetryTolerance) continue;
        const std::string detail = "(h_" + std::to_string(i) + "," + std::to_string(j) + " = " +
                                   fmt_num(m.H(I, J)) + ", h_" + std::to_string(j) + "," +
                                   std::to_string(i) + " = " + fmt_num(m.H(J, I)) + ")";
        if (m.sleeping[i] || m.sleeping[j]) {
          for (std::size_t c : {i, j})
            if (m.sleeping[c])
              culprits.push_back({c, CulpritKind::SleepMode,
                                  "sleep mode makes offloading asymmetric " + detail});
        } else {
          culprits.push_back({i, CulpritKind::Coupling, "asymmetric offloading " + detail});
          culprits.push_back({j, CulpritKind::Coupling, "asymmetric offloading " + detail});
        }
      }
    return {Verdict::NotGuaranteed,
            "H is not symmetric: x^T (K - Q) x is not sign-definite and V(x) = x^T x does not "
            "decrease everywhere",
            normalise_culprits(std::move(culprits))};
  }

  if (local_ok && coupling_ok)
    return {Verdict::Stable,
            "Lyapunov sufficient condition with P = I: every f_i'(1) < 0 and every h_ij < 0", {}};

  const auto eig = symmetric_part_eigenvalues(m.J);
  const double top = eig.empty() ? -1.0 : eig.back();
  if (top < 0.0)
    return {Verdict::Stable,
            "spectral test: largest eigenvalue of (J + J^T)/2 is " + fmt_num(top), {}};
  return {Verdict::Unstable,
          "spectral test: largest eigenvalue of (J + J^T)/2 is " + fmt_num(top) + " >= 0",
          normalise_culprits(std::move(culprits))};
}

double lyapunov_decrement(const VariationalMatrices& m, std::span<const double> x) {
  const auto n = static_cast<std::size_t>(m.F.rows());
  if (x.size() != n) {
    std::ostringstream os;
    os << "lyapunov_decrement: x has " << x.size() << " entries, matrices are " << n << "x" << n;
    throw ContractViolation(os.str());
  }
  const Eigen::MatrixXd coupling = m.K - m.Q;
  return 2.0 * (kernels::quadratic_form(m.F.data(), x) + kernels::quadratic_form(coupling.data(), x));
}

namespace {

ComponentReport audit_component(const NetworkTopology& topo, const PolicyAssignment& policies,
                                const AuditOptions& options, std::vector<Culprit>& culprits,
                                std::string& rationale) {
  ComponentReport rep;
  const std::size_t n = topo.size();
  const auto spec = spectrum(laplacian(topo));
  rep.algebraic_connectivity = spec.algebraic_connectivity;

  if (policies.homogeneous()) {
    const double fp = local_derivative(policies.local(0), 1.0);
    const double h = coupling_slope_h(policies.shared_coupling(), 1.0);
    auto ha = assess_homogeneous(fp, h, spec);
    rep.method = "eigenmode";
    rep.verdict = ha.verdict.verdict;
    rep.mode_rates = ha.mode_rates;
    rep.slowest_rate = ha.slowest_rate;
    rationale = ha.verdict.rationale;
    if (ha.verdict.verdict == Verdict::Stable) {
      const auto est = convergence_rate_estimate(ha);
      rep.uniform_rate = est.uniform_rate;
      rep.disagreement_rate = est.disagreement_rate;
    } else {
      for (auto& c : ha.verdict.culprits)
        if (c.kind == CulpritKind::LocalDynamics || topo.degree(c.cell) > 0)
          culprits.push_back(std::move(c));
    }
    return rep;
  }

  const auto m = build_variational_matrices(topo, policies, 1.0);
  auto v = assess_heterogeneous(m);
  rep.mode_rates = jacobian_mode_rates(m.J);
  rep.slowest_rate = rep.mode_rates.empty() ? 0.0 : rep.mode_rates.back();
  rep.verdict = v.verdict;
  rep.method = v.verdict == Verdict::NotGuaranteed ? "asymmetry"
               : v.rationale.rfind("spectral", 0) == 0 ? "spectral test"
                                                        : "lyapunov";
  rationale = v.rationale;
  for (auto& c : v.culprits) culprits.push_back(std::move(c));

  std::vector<bool> exposed(n, false);
  bool any_exposed = false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& mode = policies.local(i).mode();
    if (mode.is_sleep_capable() && mode.gamma() > options.envelope_min_load) {
      exposed[i] = true;
      any_exposed = true;
    }
  }
  if (!any_exposed || v.verdict == Verdict::Unstable) return rep;

  const auto asleep = build_variational_matrices(topo, policies, 1.0, exposed);
  auto sv = assess_heterogeneous(asleep);
  bool named = false;
  for (auto& c : sv.culprits)
    if (c.kind == CulpritKind::SleepMode) {
      culprits.push_back(std::move(c));
      named = true;
    }
  for (std::size_t i = 0; i < n; ++i) {
    if (!exposed[i]) continue;
    std::ostringstream os;
    os << "sleep threshold gamma = " << policies.local(i).mode().gamma()
       << " lies above the lowest expected load " << options.envelope_min_load
       << "; the cell can switch off and shed load";
    // Attributed after any asymmetry reason already recorded for the cell.
    culprits.push_back({i, CulpritKind::SleepMode, os.str()});
  }
  rep.verdict = Verdict::NotGuaranteed;
  rep.method = "sleep asymmetry";
  rationale = named ? "sleep-capable cells can switch off: " + sv.rationale
                    : "sleep-capable cells can switch off below their threshold; the synchronized "
                      "state cannot be guaranteed";
  return rep;
}

}  // namespace

StabilityReport audit(const NetworkTopology& topology, const PolicyAssignment& assignment,
                      const AuditOptions& options) {
  if (assignment.size() != topology.size()) {
    std::ostringstream os;
    os << "policy assignment covers " << assignment.size() << " cells, topology has "
       << topology.size();
    throw ContractViolation(os.str());
  }
  StabilityReport report;
  report.homogeneous = assignment.homogeneous();
  Verdict overall = Verdict::Stable;
  std::vector<Culprit> culprits;
  std::vector<std::string> rationales;

  for (const auto& cells : connected_components(topology)) {
    const auto sub_topo = topology.subgraph(cells);
    const auto sub_policies = assignment.restrict_to(cells);
    std::vector<Culprit> local;
    std::string rationale;
    auto comp = audit_component(sub_topo, sub_policies, options, local, rationale);
    comp.cells = cells;
    for (auto& c : local) {
      c.cell = cells[c.cell];
      culprits.push_back(std::move(c));
    }
    if (comp.verdict != Verdict::Stable || rationales.empty()) rationales.push_back(rationale);
    overall = worst(overall, comp.verdict);
    report.mode_rates.insert(report.mode_rates.end(), comp.mode_rates.begin(), comp.mode_rates.end());
    report.components.push_back(std::move(comp));
  }
  std::sort(report.mode_rates.begin(), report.mode_rates.end());
  report.slowest_rate = report.mode_rates.empty() ? 0.0 : report.mode_rates.back();

  if (overall == Verdict::Stable && report.homogeneous && topology.size() > 0) {
    const auto ha = assess_homogeneous(local_derivative(assignment.local(0), 1.0),
                                       coupling_slope_h(assignment.shared_coupling(), 1.0),
                                       spectrum(laplacian(topology)));
    const auto est = convergence_rate_estimate(ha);
    report.uniform_rate = est.uniform_rate;
    report.disagreement_rate = est.disagreement_rate;
  }

  report.verdict.verdict = overall;
  report.verdict.culprits = overall == Verdict::Stable ? std::vector<Culprit>{}
                                                       : normalise_culprits(std::move(culprits));
  std::string joined;
  for (const auto& r : rationales) {
    if (r.empty()) continue;
    if (!joined.empty()) joined += "; ";
    joined += r;
  }
  if (report.components.size() > 1)
    joined = std::to_string(report.components.size()) + " components analysed separately: " + joined;
  report.verdict.rationale = joined;
  return report;
}

}  // namespace lbstab
