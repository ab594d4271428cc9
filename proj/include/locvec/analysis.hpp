#pragma once

#include <cstddef>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "locvec/corpus.hpp"
#include "locvec/embedding.hpp"

namespace locvec {

// Mean in-vector of the country's in-vocabulary locations.
// Throws InputError when the country has none.
std::vector<double> country_centroid(const EmbeddingModel& model, const LocationTable& metadata,
                                     std::string_view country);

// Countries with at least min_orgs in-vocabulary locations, minus
// exclusions, sorted by code.
std::vector<std::string> select_countries(const Vocabulary& vocabulary,
                                          const LocationTable& metadata, std::size_t min_orgs,
                                          const std::set<std::string>& exclusions = {});

enum class Linkage { Average, Complete, Single };

std::string_view to_string(Linkage linkage);
Linkage parse_linkage(std::string_view text);

// Cluster ids follow the usual convention: leaves are 0..n-1 and the cluster
// created by merge k has id n + k.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::vector<std::string> leaves;
  std::vector<Merge> merges;
};

// Agglomerative clustering on pairwise cosine distance. Leaves are sorted by
// label first, so the result does not depend on input order; equal-distance
// candidates are resolved by the lexicographically smallest leaf pair.
// Throws DomainError for zero centroids.
Dendrogram hierarchical_cluster(std::span<const std::string> labels,
                                std::span<const std::vector<double>> centroids,
                                Linkage linkage = Linkage::Average);

// Undoes the last k-1 merges. Labels are dense, numbered by first leaf.
std::vector<int> cut(const Dendrogram& dendrogram, std::size_t k);

inline constexpr double kElementCentricAlpha = 0.9;

// Row-stochastic affinity matrix (n x n, row-major) of personalized PageRank
// on the cluster-induced element graph of a flat partition.
std::vector<double> flat_affinity(std::span<const int> labels,
                                  double alpha = kElementCentricAlpha);

// Same for a dendrogram: every node (leaves and merges) is a cluster,
// weighted by exp(-r * height / max_height), so high r emphasizes the lower
// levels of the tree.
std::vector<double> hierarchical_affinity(const Dendrogram& dendrogram, double r,
                                          double alpha = kElementCentricAlpha);

// Mean over elements of 1 - ||a_i - b_i||_1 / (2 alpha) for affinity rows.
double element_centric_similarity(std::span<const int> a, std::span<const int> b,
                                  double alpha = kElementCentricAlpha);

// Dendrogram leaves are matched to `labels` positionally.
double element_centric_similarity(const Dendrogram& a, std::span<const int> b, double r,
                                  double alpha = kElementCentricAlpha);

struct NormSummary {
  std::string country;
  double mean_norm = 0.0;
  std::vector<std::string> org_ids;
  std::vector<double> org_norms;
  double skewness = 0.0;
  double gini = 0.0;
};

NormSummary norm_summary(const EmbeddingModel& model, const LocationTable& metadata,
                         std::string_view country);

// Mean absolute difference over all ordered pairs divided by twice the mean.
double gini(std::span<const double> values);

// Adjusted Fisher-Pearson sample skewness; 0 for fewer than three values or
// zero variance.
double skewness(std::span<const double> values);

void write_dendrogram_json(std::ostream& out, const Dendrogram& dendrogram);

}  // namespace locvec
