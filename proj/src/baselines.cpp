#include "locvec/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include "locvec/csv.hpp"
#include "locvec/distances.hpp"
#include "locvec/error.hpp"

namespace locvec {

MobilityNetwork::MobilityNetwork(std::vector<std::string> nodes)
    : nodes_(std::move(nodes)), adjacency_(nodes_.size()), strength_(nodes_.size(), 0.0) {}

MobilityNetwork MobilityNetwork::from_flux(const FluxMatrix& flux) {
  MobilityNetwork net(flux.locations());
  // Entries are unique pairs, so edges can be appended without lookup.
  for (const auto& e : flux.entries()) {
    const auto w = static_cast<double>(e.flux);
    net.adjacency_[e.i].push_back({e.j, w});
    net.adjacency_[e.j].push_back({e.i, w});
    net.strength_[e.i] += w;
    net.strength_[e.j] += w;
  }
  return net;
}

void MobilityNetwork::add_edge(std::uint32_t i, std::uint32_t j, double weight) {
  if (i >= size() || j >= size()) throw LookupError("edge endpoint outside the network");
  if (i == j) throw DomainError("self-loops are not allowed in a mobility network");
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw DomainError("edge weight must be nonnegative");
  if (weight == 0.0) return;
  auto bump = [&](std::uint32_t a, std::uint32_t b) {
    auto& adj = adjacency_[a];
    auto it = std::find_if(adj.begin(), adj.end(), [b](const Edge& e) { return e.target == b; });
    if (it == adj.end()) {
      adj.push_back({b, weight});
    } else {
      it->weight += weight;
    }
    strength_[a] += weight;
  };
  bump(i, j);
  bump(j, i);
}

double MobilityNetwork::weight(std::uint32_t i, std::uint32_t j) const {
  for (const auto& e : adjacency_[i]) {
    if (e.target == j) return e.weight;
  }
  return 0.0;
}

std::uint32_t MobilityNetwork::index_of(const std::string& id) const {
  auto it = std::find(nodes_.begin(), nodes_.end(), id);
  if (it == nodes_.end()) throw LookupError("unknown network node `" + id + "`");
  return static_cast<std::uint32_t>(it - nodes_.begin());
}

std::vector<std::uint32_t> MobilityNetwork::components() const {
  constexpr auto kUnset = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> label(size(), kUnset);
  std::uint32_t next = 0;
  std::vector<std::uint32_t> stack;
  for (std::uint32_t s = 0; s < size(); ++s) {
    if (label[s] != kUnset) continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (const auto& e : adjacency_[u]) {
        if (label[e.target] == kUnset) {
          label[e.target] = next;
          stack.push_back(e.target);
        }
      }
    }
    ++next;
  }
  return label;
}

PprVector ppr(const MobilityNetwork& network, std::uint32_t source, double alpha, double tol) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("ppr alpha must lie in (0, 1)");
  if (!(tol > 0.0)) throw DomainError("ppr tolerance must be positive");
  if (source >= network.size()) throw LookupError("ppr source outside the network");
  if (!(network.strength(source) > 0.0)) {
    throw DomainError("ppr source `" + network.nodes()[source] + "` is isolated");
  }
  const std::size_t n = network.size();
  std::vector<double> p(n, 0.0), next(n, 0.0);
  p[source] = 1.0;
  for (std::size_t iter = 0; iter < kMaxIterations; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    next[source] = 1.0 - alpha;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (p[i] == 0.0) continue;
      const double out = alpha * p[i] / network.strength(i);
      for (const auto& e : network.neighbors(i)) next[e.target] += out * e.weight;
    }
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change += std::abs(next[i] - p[i]);
    p.swap(next);
    if (change < tol) {
      double total = 0.0;
      for (double x : p) total += x;
      for (double& x : p) x /= total;
      return {source, std::move(p)};
    }
  }
  throw NumericError("ppr did not converge from `" + network.nodes()[source] + "`");
}

double ppr_cosine_distance(std::span<const double> p, std::span<const double> q) {
  return cosine_distance(p, q);
}

double ppr_jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("jsd of distributions with different lengths");
  double kl_p = 0.0, kl_q = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    const double m = 0.5 * (p[x] + q[x]);
    if (p[x] > 0.0) kl_p += p[x] * std::log(p[x] / m);
    if (q[x] > 0.0) kl_q += q[x] * std::log(q[x] / m);
  }
  return std::clamp(0.5 * kl_p + 0.5 * kl_q, 0.0, std::numbers::ln2);
}

double degree_strength(const MobilityNetwork& network, std::uint32_t node) {
  if (node >= network.size()) throw LookupError("unknown network node index");
  return network.strength(node);
}

std::vector<double> eigenvector_centrality(const MobilityNetwork& network, double tol) {
  const std::size_t n = network.size();
  const auto label = network.components();
  const std::uint32_t n_components =
      n == 0 ? 0 : *std::max_element(label.begin(), label.end()) + 1;
  std::vector<std::vector<std::uint32_t>> members(n_components);
  for (std::uint32_t i = 0; i < n; ++i) members[label[i]].push_back(i);

  std::vector<double> best;
  double best_lambda = 0.0;
  std::size_t best_size = 0;
  for (const auto& nodes : members) {
    if (nodes.size() < 2) continue;
    // Shifting by the mean strength keeps the iteration from oscillating on
    // bipartite components without changing the eigenvectors.
    double shift = 0.0;
    for (auto i : nodes) shift += network.strength(i);
    shift /= static_cast<double>(nodes.size());

    std::vector<double> x(n, 0.0), y(n, 0.0);
    const double init = 1.0 / std::sqrt(static_cast<double>(nodes.size()));
    for (auto i : nodes) x[i] = init;
    bool converged = false;
    for (std::size_t iter = 0; iter < kMaxIterations; ++iter) {
      double norm = 0.0;
      for (auto i : nodes) {
        double s = shift * x[i];
        for (const auto& e : network.neighbors(i)) s += e.weight * x[e.target];
        y[i] = s;
        norm += s * s;
      }
      norm = std::sqrt(norm);
      double change = 0.0;
      for (auto i : nodes) {
        y[i] /= norm;
        change += (y[i] - x[i]) * (y[i] - x[i]);
      }
      x.swap(y);
      if (std::sqrt(change) < tol) {
        converged = true;
        break;
      }
    }
    if (!converged) throw NumericError("eigenvector centrality did not converge");
    double lambda = 0.0;
    for (auto i : nodes) {
      for (const auto& e : network.neighbors(i)) lambda += x[i] * e.weight * x[e.target];
    }
    if (best.empty() || lambda > best_lambda * (1.0 + 1e-12) ||
        (std::abs(lambda - best_lambda) <= 1e-12 * best_lambda && nodes.size() > best_size)) {
      best = std::move(x);
      best_lambda = lambda;
      best_size = nodes.size();
    }
  }
  if (best.empty()) throw DomainError("eigenvector centrality needs a component with an edge");
  for (double& v : best) v = std::max(v, 0.0);
  const double norm = l2_norm(best);
  for (double& v : best) v /= norm;
  return best;
}

void write_network_csv(std::ostream& out, const MobilityNetwork& network) {
  out << "source,target,weight\n";
  char buf[32];
  for (std::uint32_t i = 0; i < network.size(); ++i) {
    std::vector<MobilityNetwork::Edge> edges(network.neighbors(i).begin(), network.neighbors(i).end());
    std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) { return a.target < b.target; });
    for (const auto& e : edges) {
      if (e.target <= i) continue;
      std::snprintf(buf, sizeof buf, "%.17g", e.weight);
      csv::write_row(out, {network.nodes()[i], network.nodes()[e.target], buf});
    }
  }
}

}  // namespace locvec
