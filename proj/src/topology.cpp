#include "lbstab/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "lbstab/error.hpp"
#include "lbstab/rng.hpp"

namespace lbstab {

NetworkTopology::NetworkTopology(std::vector<CellSite> sites, std::vector<Edge> edges,
                                 Region region, std::optional<std::uint64_t> seed,
                                 std::optional<double> connection_probability)
    : sites_(std::move(sites)),
      region_(region),
      seed_(seed),
      probability_(connection_probability) {
  const std::size_t n = sites_.size();
  for (std::size_t i = 0; i < n; ++i)
    if (sites_[i].id != i)
      throw ContractViolation("site ids must be 0..N-1 in order; site " + std::to_string(i) +
                              " has id " + std::to_string(sites_[i].id));
  for (auto [a, b] : edges) {
    if (a == b) throw ContractViolation("self-loop at cell " + std::to_string(a));
    if (a >= n || b >= n) {
      std::ostringstream os;
      os << "edge (" << a << ", " << b << ") references a cell outside 0.." << n;
      throw ContractViolation(os.str());
    }
    edges_.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  adjacency_.assign(n, {});
  for (auto [a, b] : edges_) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& list : adjacency_) std::sort(list.begin(), list.end());
}

NetworkTopology NetworkTopology::from_edges(std::size_t n, std::vector<Edge> edges) {
  std::vector<CellSite> sites(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    sites[i] = CellSite{i, Point2{0.5 + 0.4 * std::cos(angle), 0.5 + 0.4 * std::sin(angle)}};
  }
  return NetworkTopology(std::move(sites), std::move(edges), Region{1.0, 1.0});
}

bool NetworkTopology::connected(std::size_t a, std::size_t b) const {
  const auto& list = adjacency_.at(a);
  return std::binary_search(list.begin(), list.end(), b);
}

Eigen::MatrixXd NetworkTopology::adjacency_matrix() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (auto [i, j] : edges_) {
    a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
    a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
  }
  return a;
}

Eigen::MatrixXd NetworkTopology::degree_matrix() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    d(i, i) = static_cast<double>(adjacency_[static_cast<std::size_t>(i)].size());
  return d;
}

NetworkTopology NetworkTopology::subgraph(std::span<const std::size_t> cells) const {
  std::unordered_map<std::size_t, std::size_t> index;
  std::vector<CellSite> sub;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    index.emplace(cells[k], k);
    sub.push_back(CellSite{k, sites_.at(cells[k]).position});
  }
  std::vector<Edge> sub_edges;
  for (auto [a, b] : edges_) {
    auto ia = index.find(a);
    auto ib = index.find(b);
    if (ia != index.end() && ib != index.end()) sub_edges.emplace_back(ia->second, ib->second);
  }
  return NetworkTopology(std::move(sub), std::move(sub_edges), region_, seed_, probability_);
}

std::vector<CellSite> generate_ppp(double intensity, const Region& region, std::uint64_t seed) {
  if (!(intensity > 0.0) || !std::isfinite(intensity))
    throw ContractViolation("PPP intensity must be positive");
  if (!(region.width > 0.0 && region.height > 0.0))
    throw ContractViolation("PPP region must have positive width and height");
  Rng rng(seed);
  std::poisson_distribution<std::size_t> count(intensity * region.area());
  constexpr int kAttempts = 10;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    const std::size_t n = count(rng);
    if (n == 0) continue;
    std::uniform_real_distribution<double> ux(0.0, region.width);
    std::uniform_real_distribution<double> uy(0.0, region.height);
    std::vector<CellSite> sites(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = ux(rng);
      sites[i] = CellSite{i, Point2{x, uy(rng)}};
    }
    return sites;
  }
  std::ostringstream os;
  os << "PPP drew zero sites " << kAttempts << " times (mean count " << intensity * region.area()
     << ")";
  throw RetryExhaustedError(os.str());
}

std::vector<CellSite> generate_uniform_sites(std::size_t count, const Region& region,
                                             std::uint64_t seed) {
  if (!(region.width > 0.0 && region.height > 0.0))
    throw ContractViolation("region must have positive width and height");
  Rng rng(seed);
  std::uniform_real_distribution<double> ux(0.0, region.width);
  std::uniform_real_distribution<double> uy(0.0, region.height);
  std::vector<CellSite> sites(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = ux(rng);
    sites[i] = CellSite{i, Point2{x, uy(rng)}};
  }
  return sites;
}

NetworkTopology build_neighbor_graph(std::vector<CellSite> sites, const Region& region,
                                     double connection_probability, std::uint64_t seed) {
  if (sites.size() < 2) throw ContractViolation("neighbour graph needs at least 2 sites");
  if (!(connection_probability >= 0.0 && connection_probability <= 1.0))
    throw ContractViolation("connection probability must lie in [0, 1]");
  std::vector<Point2> pts;
  pts.reserve(sites.size());
  for (const auto& s : sites) pts.push_back(s.position);
  const auto candidates = delaunay_edges(pts);

  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Edge> kept;
  for (const auto& e : candidates) {
    const double draw = u(rng);
    if (draw < connection_probability) kept.push_back(e);
  }
  return NetworkTopology(std::move(sites), std::move(kept), region, seed, connection_probability);
}

Eigen::MatrixXd laplacian(const NetworkTopology& topology) {
  return topology.degree_matrix() - topology.adjacency_matrix();
}

SpectralSummary spectrum(const Eigen::MatrixXd& l) {
  if (l.rows() != l.cols()) throw ContractViolation("spectrum: matrix is not square");
  if (l.size() > 0 && (l - l.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ContractViolation("spectrum: matrix is not symmetric within 1e-12");
  SpectralSummary out;
  if (l.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(l, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("spectrum: eigen-decomposition failed");
  const auto& ev = solver.eigenvalues();
  out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  for (double& v : out.eigenvalues)
    if (std::fabs(v) < 1e-9) v = 0.0;
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
  out.algebraic_connectivity = out.eigenvalues.size() > 1 ? out.eigenvalues[1] : 0.0;
  out.spectral_radius = out.eigenvalues.back();
  return out;
}

std::vector<std::vector<std::size_t>> connected_components(const NetworkTopology& topology) {
  const std::size_t n = topology.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (auto [a, b] : topology.edges()) {
    const auto ra = find(a);
    const auto rb = find(b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<std::vector<std::size_t>> groups;
  std::unordered_map<std::size_t, std::size_t> slot;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = find(i);
    auto [it, inserted] = slot.emplace(r, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

}  // namespace lbstab
