#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "locvec/analysis.hpp"
#include "locvec/error.hpp"

using namespace locvec;

namespace {

struct Fixture {
  EmbeddingModel model;
  LocationTable metadata;
};

// One row per (id, country, vector).
Fixture fixture(const std::vector<std::tuple<std::string, std::string, std::vector<double>>>& rows) {
  Fixture f;
  std::vector<std::string> ids;
  std::vector<LocationRecord> recs;
  for (const auto& [id, country, v] : rows) {
    ids.push_back(id);
    LocationRecord r;
    r.id = id;
    r.country = country;
    recs.push_back(r);
  }
  f.model.vocabulary = Vocabulary(ids, std::vector<std::uint64_t>(ids.size(), 1));
  const std::size_t d = std::get<2>(rows[0]).size();
  f.model.in_vectors = Matrix(ids.size(), d);
  f.model.out_vectors = Matrix(ids.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) f.model.in_vectors(i, j) = std::get<2>(rows[i])[j];
  f.metadata = LocationTable(recs);
  return f;
}

// Closed-form flat affinity row: (1 - alpha) e_i + alpha * uniform over i's cluster.
double flat_oracle(const std::vector<int>& a, const std::vector<int>& b, double alpha) {
  const std::size_t n = a.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double ca = 0, cb = 0;
    for (std::size_t j = 0; j < n; ++j) {
      ca += a[j] == a[i];
      cb += b[j] == b[i];
    }
    double l1 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double pa = (i == j ? 1 - alpha : 0.0) + (a[j] == a[i] ? alpha / ca : 0.0);
      const double pb = (i == j ? 1 - alpha : 0.0) + (b[j] == b[i] ? alpha / cb : 0.0);
      l1 += std::abs(pa - pb);
    }
    total += 1.0 - l1 / (2 * alpha);
  }
  return total / static_cast<double>(n);
}

void partitions(std::size_t n, std::vector<int>& cur, int used, std::vector<std::vector<int>>& out) {
  if (cur.size() == n) {
    out.push_back(cur);
    return;
  }
  for (int c = 0; c <= used; ++c) {
    cur.push_back(c);
    partitions(n, cur, std::max(used, c + 1), out);
    cur.pop_back();
  }
}

std::vector<std::vector<double>> random_centroids(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> c(n, std::vector<double>(d));
  for (auto& v : c) for (auto& x : v) x = standard_normal(rng);
  return c;
}

std::vector<std::string> labels_n(std::size_t n) {
  std::vector<std::string> l;
  for (std::size_t i = 0; i < n; ++i) l.push_back("C" + std::to_string(10 + i));
  return l;
}

}  // namespace

TEST(Centroid, Cases) {
  auto f = fixture({{"a", "X", {1, 2}}, {"b", "Y", {1, 0}}, {"c", "Y", {-1, 0}}, {"d", "Z", {3, 1}}, {"e", "Z", {1, 5}}});
  EXPECT_EQ(country_centroid(f.model, f.metadata, "X"), (std::vector<double>{1, 2}));
  EXPECT_EQ(country_centroid(f.model, f.metadata, "Y"), (std::vector<double>{0, 0}));
  EXPECT_EQ(country_centroid(f.model, f.metadata, "Z"), (std::vector<double>{2, 3}));
  EXPECT_THROW(country_centroid(f.model, f.metadata, "Q"), InputError);
  std::vector<std::string> l{"Y", "X"};
  std::vector<std::vector<double>> c{country_centroid(f.model, f.metadata, "Y"), {1, 0}};
  EXPECT_THROW(hierarchical_cluster(l, c), DomainError);
}

TEST(Centroid, PermutationInvariant) {
  auto f1 = fixture({{"a", "X", {0.1, 0.7}}, {"b", "X", {0.3, -0.2}}, {"c", "X", {1e-3, 5}}});
  auto f2 = fixture({{"c", "X", {1e-3, 5}}, {"a", "X", {0.1, 0.7}}, {"b", "X", {0.3, -0.2}}});
  EXPECT_EQ(country_centroid(f1.model, f1.metadata, "X"), country_centroid(f2.model, f2.metadata, "X"));
}

TEST(SelectCountries, ThresholdAndExclusions) {
  std::vector<std::tuple<std::string, std::string, std::vector<double>>> rows;
  for (int i = 0; i < 25; ++i) rows.push_back({"fr" + std::to_string(i), "FR", {1.0}});
  for (int i = 0; i < 24; ++i) rows.push_back({"de" + std::to_string(i), "DE", {1.0}});
  for (int i = 0; i < 40; ++i) rows.push_back({"us" + std::to_string(i), "US", {1.0}});
  auto f = fixture(rows);
  EXPECT_EQ(select_countries(f.model.vocabulary, f.metadata, 25, {"US"}), std::vector<std::string>{"FR"});
  EXPECT_EQ(select_countries(f.model.vocabulary, f.metadata, 25), (std::vector<std::string>{"FR", "US"}));
  EXPECT_EQ(select_countries(f.model.vocabulary, f.metadata, 1).size(), 3u);
}

TEST(Cluster, TwoLeavesAndNearestPair) {
  std::vector<std::string> two{"A", "B"};
  std::vector<std::vector<double>> c2{{1, 0}, {1, 1}};
  auto d = hierarchical_cluster(two, c2);
  ASSERT_EQ(d.merges.size(), 1u);
  EXPECT_NEAR(d.merges[0].height, 1 - 1 / std::sqrt(2.0), 1e-15);

  // d(A,B) = 0.1 and d(., C) = 0.9 via explicit angles.
  const double ab = std::acos(0.9);
  std::vector<std::string> three{"A", "B", "C"};
  std::vector<std::vector<double>> c3{{1, 0, 0}, {std::cos(ab), std::sin(ab), 0}, {0.1, 0.05, std::sqrt(1 - 0.0125)}};
  auto t = hierarchical_cluster(three, c3);
  EXPECT_EQ(t.merges[0].left, 0u);
  EXPECT_EQ(t.merges[0].right, 1u);
  auto l2 = cut(t, 2);
  EXPECT_EQ(l2[0], l2[1]);
  EXPECT_NE(l2[0], l2[2]);
}

TEST(Cluster, CutGivesExactlyKForAllK) {
  for (auto linkage : {Linkage::Average, Linkage::Complete, Linkage::Single}) {
    auto c = random_centroids(10, 4, 3);
    auto d = hierarchical_cluster(labels_n(10), c, linkage);
    for (std::size_t k = 1; k <= 10; ++k) {
      auto l = cut(d, k);
      EXPECT_EQ(std::set<int>(l.begin(), l.end()).size(), k);
      EXPECT_EQ(*std::max_element(l.begin(), l.end()), static_cast<int>(k) - 1);
    }
    auto one = cut(d, 1);
    EXPECT_EQ(std::set<int>(one.begin(), one.end()).size(), 1u);
    EXPECT_THROW(cut(d, 0), InputError);
    EXPECT_THROW(cut(d, 11), InputError);
  }
}

TEST(Cluster, InputPermutationInvariant) {
  auto names = labels_n(12);
  auto c = random_centroids(12, 5, 8);
  auto base = hierarchical_cluster(names, c);
  std::vector<std::size_t> order(12);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(1);
  for (int t = 0; t < 5; ++t) {
    shuffle(std::span<std::size_t>(order), rng);
    std::vector<std::string> n2;
    std::vector<std::vector<double>> c2;
    for (auto i : order) {
      n2.push_back(names[i]);
      c2.push_back(c[i]);
    }
    auto d = hierarchical_cluster(n2, c2);
    EXPECT_EQ(d.leaves, base.leaves);
    ASSERT_EQ(d.merges.size(), base.merges.size());
    for (std::size_t k = 0; k < d.merges.size(); ++k) {
      EXPECT_EQ(d.merges[k].left, base.merges[k].left);
      EXPECT_EQ(d.merges[k].right, base.merges[k].right);
      EXPECT_EQ(d.merges[k].height, base.merges[k].height);
    }
  }
}

TEST(Cluster, AverageLinkageMatchesBruteForce) {
  auto names = labels_n(8);
  auto c = random_centroids(8, 3, 21);
  auto d = hierarchical_cluster(names, c, Linkage::Average);
  // Replay merges: each height equals the mean pairwise cosine distance
  // between the merged clusters' leaves.
  std::vector<std::vector<std::size_t>> members(8 + d.merges.size());
  for (std::size_t i = 0; i < 8; ++i) members[i] = {i};
  auto dist = [&](std::size_t i, std::size_t j) {
    double dot = 0, a = 0, b = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      dot += c[i][k] * c[j][k];
      a += c[i][k] * c[i][k];
      b += c[j][k] * c[j][k];
    }
    return 1 - dot / std::sqrt(a * b);
  };
  for (std::size_t k = 0; k < d.merges.size(); ++k) {
    const auto& m = d.merges[k];
    double sum = 0;
    for (auto i : members[m.left]) for (auto j : members[m.right]) sum += dist(i, j);
    const double avg = sum / double(members[m.left].size() * members[m.right].size());
    EXPECT_NEAR(m.height, avg, 1e-12);
    members[8 + k] = members[m.left];
    members[8 + k].insert(members[8 + k].end(), members[m.right].begin(), members[m.right].end());
    EXPECT_EQ(m.size, members[8 + k].size());
    if (k > 0) EXPECT_GE(m.height, d.merges[k - 1].height - 1e-12);
  }
}

TEST(ElementCentric, FlatCases) {
  std::vector<int> single{0, 1, 2, 3}, one{0, 0, 0, 0};
  EXPECT_NEAR(element_centric_similarity(single, one), 0.25, 1e-12);
  EXPECT_NEAR(element_centric_similarity(single, single), 1.0, 1e-12);
  std::vector<int> a{0, 0, 1, 1, 2}, b{0, 1, 1, 2, 2};
  EXPECT_NEAR(element_centric_similarity(a, b), element_centric_similarity(b, a), 1e-14);
  // Label values do not matter, only the partition.
  std::vector<int> relabeled{7, 7, 3, 3, 9};
  EXPECT_NEAR(element_centric_similarity(a, b), element_centric_similarity(relabeled, b), 1e-14);
}

TEST(ElementCentric, AllPartitionsOfFiveMatchOracle) {
  std::vector<std::vector<int>> parts;
  std::vector<int> cur;
  partitions(5, cur, 0, parts);
  ASSERT_EQ(parts.size(), 52u);
  for (const auto& a : parts) {
    EXPECT_NEAR(element_centric_similarity(a, a), 1.0, 1e-12);
    for (const auto& b : parts) EXPECT_NEAR(element_centric_similarity(a, b), flat_oracle(a, b, 0.9), 1e-10);
  }
}

TEST(ElementCentric, AffinityRowsAreStochastic) {
  auto d = hierarchical_cluster(labels_n(7), random_centroids(7, 3, 4));
  for (double r : {0.1, 1.0, 10.0}) {
    auto a = hierarchical_affinity(d, r);
    for (std::size_t i = 0; i < 7; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < 7; ++j) {
        EXPECT_GE(a[i * 7 + j], -1e-15);
        s += a[i * 7 + j];
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(ElementCentric, HierarchicalScaleSelectsLevel) {
  // Two tight pairs far apart: {A,B} and {C,D}.
  std::vector<std::string> l{"A", "B", "C", "D"};
  std::vector<std::vector<double>> c{{1, 0.01}, {1, -0.01}, {-0.01, 1}, {0.01, 1}};
  auto d = hierarchical_cluster(l, c);
  std::vector<int> pairs{0, 0, 1, 1}, all{0, 0, 0, 0};
  // High r emphasizes the fine levels, low r the coarse ones.
  EXPECT_GT(element_centric_similarity(d, pairs, 10.0), element_centric_similarity(d, pairs, 0.1));
  EXPECT_LT(element_centric_similarity(d, all, 10.0), element_centric_similarity(d, all, 0.1));
  EXPECT_THROW(element_centric_similarity(d, std::vector<int>{0, 1}, 1.0), InputError);
}

TEST(Norms, GiniSkewnessCases) {
  std::vector<double> g{1, 1, 1, 1, 6};
  EXPECT_NEAR(gini(g), 0.4, 1e-15);
  double brute = 0;
  for (double a : g) for (double b : g) brute += std::abs(a - b);
  EXPECT_NEAR(gini(g), brute / (2 * 25 * 2.0), 1e-15);
  std::vector<double> c{3, 3, 3};
  EXPECT_EQ(gini(c), 0.0);
  EXPECT_EQ(skewness(c), 0.0);
  std::vector<double> s{1, 2, 3, 10};
  // Adjusted Fisher-Pearson by direct formula.
  const double m = 4.0, n = 4.0;
  double m2 = 0, m3 = 0;
  for (double x : s) {
    m2 += (x - m) * (x - m) / n;
    m3 += (x - m) * (x - m) * (x - m) / n;
  }
  EXPECT_NEAR(skewness(s), m3 / std::pow(m2, 1.5) * std::sqrt(n * (n - 1)) / (n - 2), 1e-12);
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(10);
    for (auto& x : v) x = uniform01(rng) * 10;
    EXPECT_GE(gini(v), 0.0);
    EXPECT_LE(gini(v), 1.0);
  }
}

TEST(Norms, Summary) {
  auto f = fixture({{"a", "X", {3, 0}}, {"b", "X", {0, 3}}, {"c", "X", {0, -3}}, {"z", "Y", {0, 0}}, {"y", "Y", {1, 0}}});
  auto s = norm_summary(f.model, f.metadata, "X");
  EXPECT_EQ(s.org_norms, (std::vector<double>{3, 3, 3}));
  EXPECT_EQ(s.gini, 0.0);
  EXPECT_EQ(s.skewness, 0.0);
  EXPECT_LE(s.mean_norm, 3.0);
  auto y = norm_summary(f.model, f.metadata, "Y");
  EXPECT_EQ(y.org_norms[1], 0.0);

  auto same = fixture({{"a", "X", {3, 0}}, {"b", "X", {3, 0}}});
  EXPECT_DOUBLE_EQ(norm_summary(same.model, same.metadata, "X").mean_norm, 3.0);
}

TEST(Export, DendrogramJson) {
  std::vector<std::string> l{"B", "A"};
  std::vector<std::vector<double>> c{{1, 0}, {1, 1}};
  auto d = hierarchical_cluster(l, c);
  EXPECT_EQ(d.leaves, (std::vector<std::string>{"A", "B"}));
  std::ostringstream out;
  write_dendrogram_json(out, d);
  EXPECT_NE(out.str().find("\"merges\""), std::string::npos);
}
