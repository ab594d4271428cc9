#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "locvec/error.hpp"
#include "locvec/semaxis.hpp"

using namespace locvec;

namespace {

EmbeddingModel model_from(const std::vector<std::string>& ids, const std::vector<std::vector<double>>& rows) {
  EmbeddingModel m;
  m.vocabulary = Vocabulary(ids, std::vector<std::uint64_t>(ids.size(), 1));
  m.in_vectors = Matrix(ids.size(), rows[0].size());
  m.out_vectors = Matrix(ids.size(), rows[0].size());
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m.in_vectors(i, j) = rows[i][j];
  return m;
}

// Coordinate 0 is a planted trait that decreases with the index; the other
// coordinates are constant so cosine to the axis is monotone in the trait.
EmbeddingModel planted(std::size_t n, std::uint64_t seed, std::vector<std::string>& ids) {
  Rng rng(seed);
  const double a = 0.5 + uniform01(rng), b = uniform01(rng);
  std::vector<std::vector<double>> rows;
  ids.clear();
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back("L" + std::to_string(1000 + i));
    rows.push_back({double(n - i), a, b});
  }
  return model_from(ids, rows);
}

LocationTable regions(const std::vector<std::pair<std::string, std::string>>& id_region) {
  std::vector<LocationRecord> rs;
  for (const auto& [id, region] : id_region) {
    LocationRecord r;
    r.id = id;
    r.region = region;
    rs.push_back(r);
  }
  return LocationTable(rs);
}

}  // namespace

TEST(Axis, ArithmeticAndSinglePoles) {
  auto m = model_from({"p", "n"}, {{1, 0}, {-1, 0}});
  std::vector<std::string> pos{"p"}, neg{"n"};
  auto a = build_axis(m, pos, neg);
  EXPECT_EQ(a.direction, (std::vector<double>{2, 0}));
  EXPECT_EQ(a.v_plus, (std::vector<double>{1, 0}));
  EXPECT_EQ(a.v_minus, (std::vector<double>{-1, 0}));
}

TEST(Axis, OverlapAndEmptyAreInputErrors) {
  auto m = model_from({"p", "n"}, {{1, 0}, {-1, 0}});
  std::vector<std::string> pos{"p"}, both{"p", "n"}, none;
  EXPECT_THROW(build_axis(m, pos, pos), InputError);
  EXPECT_THROW(build_axis(m, pos, both), InputError);
  EXPECT_THROW(build_axis(m, none, pos), InputError);
}

TEST(Project, AlignedOrthogonalOpposite) {
  auto m = model_from({"p", "n", "a", "o", "r"}, {{1, 0}, {-1, 0}, {2, 0}, {0, 3}, {-2, 0}});
  std::vector<std::string> pos{"p"}, neg{"n"};
  auto axis = build_axis(m, pos, neg);
  EXPECT_NEAR(project(m, "a", axis), 1.0, 1e-15);
  EXPECT_NEAR(project(m, "o", axis), 0.0, 1e-15);
  EXPECT_NEAR(project(m, "r", axis), -1.0, 1e-15);
}

TEST(Project, ScaleInvariance) {
  Rng rng(4);
  std::vector<double> v(5), d(5);
  for (auto& x : v) x = standard_normal(rng);
  Axis a;
  for (auto& x : d) x = standard_normal(rng);
  a.direction = d;
  const double s = project(v, a);
  auto v2 = v;
  for (auto& x : v2) x *= 3.7;
  Axis b = a;
  for (auto& x : b.direction) x *= 0.2;
  EXPECT_NEAR(project(v2, a), s, 1e-14);
  EXPECT_NEAR(project(v, b), s, 1e-14);
}

TEST(Rank, PlantedTraitSpearmanOne) {
  std::vector<std::string> ids;
  auto m = planted(40, 1, ids);
  // Center the trait so cosine to the axis is monotone in it.
  for (std::size_t i = 0; i < 40; ++i) m.in_vectors(i, 0) -= 20.5;
  std::vector<std::string> pos{ids.front()}, neg{ids.back()};
  auto axis = build_axis(m, pos, neg);
  auto ranking = rank_by_axis(m, ids, axis);
  RankTable planted_ranks;
  for (std::size_t i = 0; i < ids.size(); ++i) planted_ranks[ids[i]] = double(i + 1);
  EXPECT_DOUBLE_EQ(spearman(to_rank_table(ranking), planted_ranks), 1.0);
}

TEST(Rank, PoleSwapReversesExactly) {
  std::vector<std::string> ids;
  auto m = planted(30, 2, ids);
  for (std::size_t i = 0; i < 30; ++i) m.in_vectors(i, 0) -= 15.5;
  std::vector<std::string> pos{ids[0], ids[1]}, neg{ids[28], ids[29]};
  auto fwd = rank_by_axis(m, ids, build_axis(m, pos, neg));
  auto rev = rank_by_axis(m, ids, build_axis(m, neg, pos));
  ASSERT_EQ(fwd.size(), rev.size());
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    EXPECT_EQ(fwd[i].id, rev[rev.size() - 1 - i].id);
    EXPECT_EQ(fwd[i].score, -rev[rev.size() - 1 - i].score);
  }
}

TEST(Rank, PermutationInvariantAndTies) {
  std::vector<std::string> ids;
  auto m = planted(20, 3, ids);
  std::vector<std::string> pos{ids[0]}, neg{ids[19]};
  auto axis = build_axis(m, pos, neg);
  auto a = rank_by_axis(m, ids, axis);
  Rng rng(5);
  auto shuffled = ids;
  shuffle(std::span<std::string>(shuffled), rng);
  EXPECT_EQ(rank_by_axis(m, shuffled, axis), a);
  std::vector<std::string> one{ids[4]};
  EXPECT_EQ(rank_by_axis(m, one, axis).size(), 1u);

  auto tied = model_from({"b", "a", "c", "p", "n"}, {{1, 1}, {1, 1}, {1, 1}, {1, 0}, {-1, 0}});
  std::vector<std::string> p{"p"}, n{"n"}, q{"b", "c", "a"};
  auto r = rank_by_axis(tied, q, build_axis(tied, p, n));
  EXPECT_EQ(r[0].id, "a");
  EXPECT_EQ(r[1].id, "b");
  EXPECT_EQ(r[2].id, "c");
  auto table = to_rank_table(r);
  EXPECT_DOUBLE_EQ(table["a"], 2.0);
  EXPECT_DOUBLE_EQ(table["c"], 2.0);
}

TEST(Rank, PositivePolesOutrankNegative) {
  auto m = model_from({"p1", "p2", "n1", "n2"}, {{1, 0.2}, {0.9, -0.1}, {-1, 0.3}, {-0.8, -0.2}});
  std::vector<std::string> pos{"p1", "p2"}, neg{"n1", "n2"}, all{"n1", "p1", "n2", "p2"};
  auto axis = build_axis(m, pos, neg);
  auto r = rank_by_axis(m, all, axis);
  EXPECT_TRUE((r[0].id[0] == 'p') && (r[1].id[0] == 'p'));
}

TEST(Spearman, Cases) {
  RankTable a{{"x", 1}, {"y", 2}, {"z", 3}};
  RankTable b{{"x", 1}, {"y", 3}, {"z", 2}};
  RankTable rev{{"x", 3}, {"y", 2}, {"z", 1}};
  EXPECT_DOUBLE_EQ(spearman(a, a), 1.0);
  EXPECT_DOUBLE_EQ(spearman(a, rev), -1.0);
  EXPECT_NEAR(spearman(a, b), 0.5, 1e-15);
  RankTable other{{"x", 1}, {"y", 2}, {"w", 3}};
  EXPECT_THROW(spearman(a, other), InputError);
}

TEST(AverageRanks, Ties) {
  std::vector<double> v{10, 20, 20, 5};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(MatchPoles, SingleRegion) {
  RankTable r{{"a", 1}, {"b", 2}, {"c", 3}, {"d", 4}};
  auto md = regions({{"a", "X"}, {"b", "Y"}, {"c", "X"}, {"d", "Y"}});
  auto p = match_poles(r, md, 1);
  EXPECT_EQ(p.top, std::vector<std::string>{"a"});
  EXPECT_EQ(p.bottom, std::vector<std::string>{"c"});
}

TEST(MatchPoles, QuotasPerRegion) {
  RankTable r;
  std::vector<std::pair<std::string, std::string>> rg;
  for (int i = 0; i < 20; ++i) {
    const std::string id = "u" + std::to_string(100 + i);
    r[id] = i + 1;
    rg.push_back({id, i % 2 ? "S" : "N"});
  }
  auto p = match_poles(r, regions(rg), 2);
  ASSERT_EQ(p.bottom.size(), 2u);
  auto md = regions(rg);
  std::multiset<std::string> top_r, bot_r;
  for (auto& id : p.top) top_r.insert(md.at(id).region);
  for (auto& id : p.bottom) bot_r.insert(md.at(id).region);
  EXPECT_EQ(top_r, bot_r);
  EXPECT_EQ(bot_r.count("N"), 1u);
}

TEST(MatchPoles, InsufficientRegionIsMatchingError) {
  RankTable r{{"a", 1}, {"b", 2}, {"c", 3}};
  auto md = regions({{"a", "X"}, {"b", "Y"}, {"c", "Y"}});
  EXPECT_THROW(match_poles(r, md, 1), MatchingError);
}

TEST(RankingCsv, Parse) {
  std::istringstream in("id,rank\nA,1\nB,2.5\n");
  auto t = read_ranking_csv(in, "r");
  EXPECT_EQ(t.at("B"), 2.5);
  std::istringstream bad("id,score\nA,1\n");
  EXPECT_THROW(read_ranking_csv(bad, "r"), SchemaError);
}
