#pragma once
// Cell deployments, offloading neighbour graphs and their Laplacian spectra.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lbstab/geometry.hpp"

namespace lbstab {

struct Region {
  double width = 1.0;
  double height = 1.0;
  double area() const { return width * height; }
  friend bool operator==(const Region&, const Region&) = default;
};

struct CellSite {
  std::size_t id = 0;
  Point2 position;
  friend bool operator==(const CellSite&, const CellSite&) = default;
};

// Undirected simple graph over cell sites. Edges are stored normalised
// (first < second), sorted and unique; self-loops are rejected.
class NetworkTopology {
 public:
  NetworkTopology(std::vector<CellSite> sites, std::vector<Edge> edges, Region region,
                  std::optional<std::uint64_t> seed = std::nullopt,
                  std::optional<double> connection_probability = std::nullopt);

  // Explicit edge list without geometry; sites are laid out on a circle
  // inside a unit square so that radio-layer tooling still has positions.
  static NetworkTopology from_edges(std::size_t n, std::vector<Edge> edges);

  std::size_t size() const { return sites_.size(); }
  const std::vector<CellSite>& sites() const { return sites_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Region& region() const { return region_; }
  std::optional<std::uint64_t> seed() const { return seed_; }
  std::optional<double> connection_probability() const { return probability_; }

  const std::vector<std::size_t>& neighbors(std::size_t cell) const { return adjacency_.at(cell); }
  std::size_t degree(std::size_t cell) const { return adjacency_.at(cell).size(); }
  bool connected(std::size_t a, std::size_t b) const;

  Eigen::MatrixXd adjacency_matrix() const;
  Eigen::MatrixXd degree_matrix() const;

  // Induced subgraph on `cells`, re-indexed in the given order.
  NetworkTopology subgraph(std::span<const std::size_t> cells) const;

 private:
  std::vector<CellSite> sites_;
  std::vector<Edge> edges_;
  Region region_;
  std::optional<std::uint64_t> seed_;
  std::optional<double> probability_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

struct SpectralSummary {
  std::vector<double> eigenvalues;  // ascending
  double algebraic_connectivity = 0.0;
  double spectral_radius = 0.0;
};

// Poisson point process: count ~ Poisson(intensity * area), positions i.i.d.
// uniform. Redraws up to 10 times on an empty draw, then throws
// RetryExhaustedError.
std::vector<CellSite> generate_ppp(double intensity, const Region& region, std::uint64_t seed);

// Exactly `count` i.i.d. uniform sites (a PPP conditioned on its count).
std::vector<CellSite> generate_uniform_sites(std::size_t count, const Region& region,
                                             std::uint64_t seed);

// Delaunay neighbour candidates, each kept independently with probability P.
NetworkTopology build_neighbor_graph(std::vector<CellSite> sites, const Region& region,
                                     double connection_probability, std::uint64_t seed);

Eigen::MatrixXd laplacian(const NetworkTopology& topology);

// Eigenvalues of a symmetric matrix, |lambda| < 1e-9 clamped to 0, ascending.
// Throws ContractViolation when asymmetric beyond 1e-12.
SpectralSummary spectrum(const Eigen::MatrixXd& laplacian);

// Components ordered by smallest member; members ascending.
std::vector<std::vector<std::size_t>> connected_components(const NetworkTopology& topology);

}  // namespace lbstab
