#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "locvec/gravity.hpp"

namespace locvec {

// Undirected weighted co-occurrence network without self-loops.
class MobilityNetwork {
 public:
  struct Edge {
    std::uint32_t target;
    double weight;
  };

  MobilityNetwork() = default;
  explicit MobilityNetwork(std::vector<std::string> nodes);
  static MobilityNetwork from_flux(const FluxMatrix& flux);

  // Adds weight to the undirected edge (i, j). Self-loops are rejected.
  void add_edge(std::uint32_t i, std::uint32_t j, double weight);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::string>& nodes() const { return nodes_; }
  std::span<const Edge> neighbors(std::uint32_t i) const { return adjacency_[i]; }
  double strength(std::uint32_t i) const { return strength_[i]; }
  double weight(std::uint32_t i, std::uint32_t j) const;
  // Throws LookupError for unknown ids.
  std::uint32_t index_of(const std::string& id) const;

  // Connected component label per node; labels dense from 0.
  std::vector<std::uint32_t> components() const;

 private:
  std::vector<std::string> nodes_;
  std::vector<std::vector<Edge>> adjacency_;
  std::vector<double> strength_;
};

struct PprVector {
  std::uint32_t source = 0;
  std::vector<double> p;
};

inline constexpr double kDefaultPprAlpha = 0.9;
inline constexpr std::size_t kMaxIterations = 100000;

// Fixed point of p = (1 - alpha) e_source + alpha p W-bar, W-bar the
// row-normalized weights, by power iteration until the L1 change is below
// tol. Throws DomainError for an isolated source and NumericError when the
// iteration does not converge.
PprVector ppr(const MobilityNetwork& network, std::uint32_t source,
              double alpha = kDefaultPprAlpha, double tol = 1e-12);

double ppr_cosine_distance(std::span<const double> p, std::span<const double> q);

// Jensen-Shannon divergence in nats, in [0, ln 2].
double ppr_jsd(std::span<const double> p, std::span<const double> q);

double degree_strength(const MobilityNetwork& network, std::uint32_t node);

// Leading eigenvector of W, computed on the component with the largest
// leading eigenvalue, zero elsewhere; L2-normalized and nonnegative.
std::vector<double> eigenvector_centrality(const MobilityNetwork& network, double tol = 1e-12);

void write_network_csv(std::ostream& out, const MobilityNetwork& network);

}  // namespace locvec
