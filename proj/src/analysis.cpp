#include "locvec/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "locvec/distances.hpp"
#include "locvec/error.hpp"

namespace locvec {

namespace {

// Sorted in-vocabulary member ids of a country.
std::vector<std::string> country_members(const Vocabulary& vocabulary,
                                         const LocationTable& metadata,
                                         std::string_view country) {
  std::vector<std::string> ids;
  for (const auto& r : metadata.records()) {
    if (r.country == country && vocabulary.contains(r.id)) ids.push_back(r.id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

// Affinity rows from a row-stochastic transition matrix:
// A = (1 - alpha) (I - alpha P)^-1.
std::vector<double> ppr_affinity(const Eigen::MatrixXd& transition, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("element-centric alpha must lie in (0, 1)");
  const auto n = transition.rows();
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - alpha * transition;
  const Eigen::MatrixXd inverse = system.partialPivLu().inverse();
  const Eigen::MatrixXd affinity = (1.0 - alpha) * inverse;
  std::vector<double> out(static_cast<std::size_t>(n * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out[static_cast<std::size_t>(i * n + j)] = affinity(i, j);
  }
  return out;
}

struct WeightedCluster {
  std::vector<std::size_t> members;
  double weight;
};

Eigen::MatrixXd transition_matrix(std::size_t n, const std::vector<WeightedCluster>& clusters) {
  std::vector<double> total(n, 0.0);
  for (const auto& c : clusters) {
    for (auto i : c.members) total[i] += c.weight;
  }
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& c : clusters) {
    const double spread = 1.0 / static_cast<double>(c.members.size());
    for (auto i : c.members) {
      const double share = c.weight / total[i] * spread;
      for (auto j : c.members) {
        p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += share;
      }
    }
  }
  return p;
}

double score_affinities(std::span<const double> a, std::span<const double> b, std::size_t n,
                        double alpha) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double l1 = 0.0;
    for (std::size_t j = 0; j < n; ++j) l1 += std::abs(a[i * n + j] - b[i * n + j]);
    total += 1.0 - l1 / (2.0 * alpha);
  }
  return std::clamp(total / static_cast<double>(n), 0.0, 1.0);
}

}  // namespace

std::vector<double> country_centroid(const EmbeddingModel& model, const LocationTable& metadata,
                                     std::string_view country) {
  const auto ids = country_members(model.vocabulary, metadata, country);
  if (ids.empty()) {
    throw InputError("country `" + std::string(country) + "` has no in-vocabulary locations");
  }
  std::vector<double> mean(model.dim(), 0.0);
  for (const auto& id : ids) {
    const auto v = model.in_vector(id);
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += v[j];
  }
  for (double& x : mean) x /= static_cast<double>(ids.size());
  return mean;
}

std::vector<std::string> select_countries(const Vocabulary& vocabulary,
                                          const LocationTable& metadata, std::size_t min_orgs,
                                          const std::set<std::string>& exclusions) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : metadata.records()) {
    if (!r.country.empty() && vocabulary.contains(r.id)) ++counts[r.country];
  }
  std::vector<std::string> out;
  for (const auto& [country, n] : counts) {
    if (n >= min_orgs && !exclusions.contains(country)) out.push_back(country);
  }
  return out;
}

std::string_view to_string(Linkage linkage) {
  switch (linkage) {
    case Linkage::Average: return "average";
    case Linkage::Complete: return "complete";
    case Linkage::Single: return "single";
  }
  return "?";
}

Linkage parse_linkage(std::string_view text) {
  if (text == "average") return Linkage::Average;
  if (text == "complete") return Linkage::Complete;
  if (text == "single") return Linkage::Single;
  throw ConfigError("unknown linkage `" + std::string(text) + "`");
}

Dendrogram hierarchical_cluster(std::span<const std::string> labels,
                                std::span<const std::vector<double>> centroids, Linkage linkage) {
  if (labels.size() != centroids.size()) throw InputError("labels and centroids differ in count");
  const std::size_t n = labels.size();
  if (n < 2) throw InputError("hierarchical clustering needs at least two centroids");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return labels[a] < labels[b]; });
  for (std::size_t k = 1; k < n; ++k) {
    if (labels[order[k]] == labels[order[k - 1]]) {
      throw InputError("duplicate cluster label `" + labels[order[k]] + "`");
    }
  }
  for (auto i : order) {
    if (l2_norm(centroids[i]) == 0.0) {
      throw DomainError("centroid `" + labels[i] + "` is the zero vector");
    }
  }

  Dendrogram d;
  for (auto i : order) d.leaves.push_back(labels[i]);

  // Slot s holds the active cluster whose smallest leaf is s.
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double v = cosine_distance(centroids[order[a]], centroids[order[b]]);
      dist[a * n + b] = dist[b * n + a] = v;
    }
  }
  std::vector<bool> active(n, true);
  std::vector<std::size_t> cluster_id(n), cluster_size(n, 1);
  std::iota(cluster_id.begin(), cluster_id.end(), 0);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    // Row-major scan over a < b visits pairs in lexicographic leaf order,
    // so strict < keeps the smallest pair among ties.
    for (std::size_t a = 0; a < n; ++a) {
      if (!active[a]) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (active[b] && dist[a * n + b] < best) {
          best = dist[a * n + b];
          ba = a;
          bb = b;
        }
      }
    }
    const std::size_t na = cluster_size[ba], nb = cluster_size[bb];
    d.merges.push_back({cluster_id[ba], cluster_id[bb], best, na + nb});
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == ba || k == bb) continue;
      const double da = dist[ba * n + k], db = dist[bb * n + k];
      double merged = 0.0;
      switch (linkage) {
        case Linkage::Single: merged = std::min(da, db); break;
        case Linkage::Complete: merged = std::max(da, db); break;
        case Linkage::Average:
          merged = (static_cast<double>(na) * da + static_cast<double>(nb) * db) /
                   static_cast<double>(na + nb);
          break;
      }
      dist[ba * n + k] = dist[k * n + ba] = merged;
    }
    active[bb] = false;
    cluster_id[ba] = n + step;
    cluster_size[ba] = na + nb;
  }
  return d;
}

std::vector<int> cut(const Dendrogram& dendrogram, std::size_t k) {
  const std::size_t n = dendrogram.leaves.size();
  if (k < 1 || k > n) {
    throw InputError("cut: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<std::size_t> parent(2 * n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t m = 0; m < n - k; ++m) {
    const auto& merge = dendrogram.merges[m];
    const std::size_t id = n + m;
    parent[find(merge.left)] = id;
    parent[find(merge.right)] = id;
  }
  std::vector<int> labels(n);
  std::map<std::size_t, int> dense;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = dense.emplace(find(i), static_cast<int>(dense.size()));
    labels[i] = it->second;
  }
  return labels;
}

std::vector<double> flat_affinity(std::span<const int> labels, double alpha) {
  const std::size_t n = labels.size();
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[labels[i]].push_back(i);
  std::vector<WeightedCluster> clusters;
  for (auto& [label, members] : groups) clusters.push_back({std::move(members), 1.0});
  return ppr_affinity(transition_matrix(n, clusters), alpha);
}

std::vector<double> hierarchical_affinity(const Dendrogram& dendrogram, double r, double alpha) {
  if (!(r > 0.0)) throw DomainError("element-centric scaling r must be positive");
  const std::size_t n = dendrogram.leaves.size();
  double max_height = 0.0;
  for (const auto& m : dendrogram.merges) max_height = std::max(max_height, m.height);

  std::vector<std::vector<std::size_t>> members(n + dendrogram.merges.size());
  std::vector<WeightedCluster> clusters;
  for (std::size_t i = 0; i < n; ++i) {
    members[i] = {i};
    clusters.push_back({members[i], 1.0});
  }
  for (std::size_t k = 0; k < dendrogram.merges.size(); ++k) {
    const auto& m = dendrogram.merges[k];
    auto& mine = members[n + k];
    mine = members[m.left];
    mine.insert(mine.end(), members[m.right].begin(), members[m.right].end());
    const double level = max_height > 0.0 ? m.height / max_height : 0.0;
    clusters.push_back({mine, std::exp(-r * level)});
  }
  return ppr_affinity(transition_matrix(n, clusters), alpha);
}

double element_centric_similarity(std::span<const int> a, std::span<const int> b, double alpha) {
  if (a.size() != b.size()) throw InputError("element-centric similarity: element sets differ");
  if (a.empty()) throw InputError("element-centric similarity of empty clusterings");
  const auto fa = flat_affinity(a, alpha);
  const auto fb = flat_affinity(b, alpha);
  return score_affinities(fa, fb, a.size(), alpha);
}

double element_centric_similarity(const Dendrogram& a, std::span<const int> b, double r,
                                  double alpha) {
  if (a.leaves.size() != b.size()) {
    throw InputError("element-centric similarity: element sets differ");
  }
  const auto ha = hierarchical_affinity(a, r, alpha);
  const auto fb = flat_affinity(b, alpha);
  return score_affinities(ha, fb, b.size(), alpha);
}

double gini(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (!(mean > 0.0)) return 0.0;
  // Sorted form of sum_i sum_j |x_i - x_j|.
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += (2.0 * static_cast<double>(i) - n + 1.0) * x[i];
  }
  return std::clamp(2.0 * acc / (2.0 * n * n * mean), 0.0, 1.0);
}

double skewness(std::span<const double> values) {
  const std::size_t count = values.size();
  if (count < 3) return 0.0;
  const double n = static_cast<double>(count);
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (m2 <= 1e-300 || m2 <= 1e-24 * mean * mean) return 0.0;
  const double g1 = m3 / std::pow(m2, 1.5);
  return g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
}

NormSummary norm_summary(const EmbeddingModel& model, const LocationTable& metadata,
                         std::string_view country) {
  NormSummary s;
  s.country = std::string(country);
  s.org_ids = country_members(model.vocabulary, metadata, country);
  if (s.org_ids.empty()) {
    throw InputError("country `" + s.country + "` has no in-vocabulary locations");
  }
  for (const auto& id : s.org_ids) s.org_norms.push_back(l2_norm(model.in_vector(id)));
  s.mean_norm = l2_norm(country_centroid(model, metadata, country));
  s.skewness = skewness(s.org_norms);
  s.gini = gini(s.org_norms);
  return s;
}

void write_dendrogram_json(std::ostream& out, const Dendrogram& dendrogram) {
  nlohmann::json j;
  j["leaves"] = dendrogram.leaves;
  auto& merges = j["merges"] = nlohmann::json::array();
  for (const auto& m : dendrogram.merges) {
    merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
  }
  out << j.dump(2) << '\n';
}

}  // namespace locvec
