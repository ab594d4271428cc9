#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "locvec/corpus.hpp"
#include "locvec/embedding.hpp"

namespace locvec {

struct Axis {
  std::vector<std::string> positive;
  std::vector<std::string> negative;
  std::vector<double> v_plus;
  std::vector<double> v_minus;
  // v_plus - v_minus
  std::vector<double> direction;
};

// Poles must be nonempty, disjoint, and in the vocabulary.
Axis build_axis(const EmbeddingModel& model, std::span<const std::string> positive,
                std::span<const std::string> negative);

// Cosine similarity between a vector and the axis direction.
double project(std::span<const double> vector, const Axis& axis);
double project(const EmbeddingModel& model, std::string_view id, const Axis& axis);

struct RankedItem {
  std::string id;
  double score = 0.0;

  bool operator==(const RankedItem&) const = default;
};

// Descending score, ties broken by id.
using Ranking = std::vector<RankedItem>;

Ranking rank_by_axis(const EmbeddingModel& model, std::span<const std::string> ids,
                     const Axis& axis);

// id -> rank, 1 = best. Ranks may be fractional for ties.
using RankTable = std::map<std::string, double>;

// Positions 1..n in ranking order; equal scores share their average rank.
RankTable to_rank_table(const Ranking& ranking);

// Header: id,rank
RankTable read_ranking_csv(const std::filesystem::path& path);
RankTable read_ranking_csv(std::istream& in, const std::string& source);

struct PoleSets {
  std::vector<std::string> top;
  std::vector<std::string> bottom;
};

// The n best-ranked ids, and the worst-ranked ids drawn so that the bottom
// set has the same region multiset as the top set. Throws MatchingError when
// a region has too few remaining candidates.
PoleSets match_poles(const RankTable& ranking, const LocationTable& metadata, std::size_t n);

// Spearman correlation over average ranks. Throws InputError when the id
// sets differ or fewer than two ids are shared.
double spearman(const RankTable& a, const RankTable& b);

// Average ranks (1-based) of values; ties share the mean position.
std::vector<double> average_ranks(std::span<const double> values);

}  // namespace locvec
