#include "locvec/semaxis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "locvec/csv.hpp"
#include "locvec/distances.hpp"
#include "locvec/error.hpp"

namespace locvec {

namespace {

std::vector<double> mean_vector(const EmbeddingModel& model, std::span<const std::string> ids) {
  std::vector<double> mean(model.dim(), 0.0);
  for (const auto& id : ids) {
    const auto v = model.in_vector(id);
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += v[j];
  }
  for (double& x : mean) x /= static_cast<double>(ids.size());
  return mean;
}

}  // namespace

Axis build_axis(const EmbeddingModel& model, std::span<const std::string> positive,
                std::span<const std::string> negative) {
  if (positive.empty() || negative.empty()) throw InputError("axis poles must be nonempty");
  const std::set<std::string> pos(positive.begin(), positive.end());
  for (const auto& id : negative) {
    if (pos.contains(id)) throw InputError("`" + id + "` appears in both axis poles");
  }
  Axis axis;
  axis.positive.assign(positive.begin(), positive.end());
  axis.negative.assign(negative.begin(), negative.end());
  axis.v_plus = mean_vector(model, positive);
  axis.v_minus = mean_vector(model, negative);
  axis.direction.resize(model.dim());
  for (std::size_t j = 0; j < axis.direction.size(); ++j) {
    axis.direction[j] = axis.v_plus[j] - axis.v_minus[j];
  }
  if (l2_norm(axis.direction) == 0.0) throw DomainError("axis poles have identical means");
  return axis;
}

double project(std::span<const double> vector, const Axis& axis) {
  return cosine_similarity(vector, axis.direction);
}

double project(const EmbeddingModel& model, std::string_view id, const Axis& axis) {
  return project(model.in_vector(id), axis);
}

Ranking rank_by_axis(const EmbeddingModel& model, std::span<const std::string> ids,
                     const Axis& axis) {
  Ranking ranking;
  ranking.reserve(ids.size());
  for (const auto& id : ids) ranking.push_back({id, project(model, id, axis)});
  std::sort(ranking.begin(), ranking.end(), [](const RankedItem& a, const RankedItem& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  return ranking;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t k = 0; k < order.size();) {
    std::size_t e = k;
    while (e + 1 < order.size() && values[order[e + 1]] == values[order[k]]) ++e;
    const double r = 0.5 * static_cast<double>(k + e) + 1.0;
    for (std::size_t t = k; t <= e; ++t) ranks[order[t]] = r;
    k = e + 1;
  }
  return ranks;
}

RankTable to_rank_table(const Ranking& ranking) {
  std::vector<double> negated(ranking.size());
  for (std::size_t k = 0; k < ranking.size(); ++k) negated[k] = -ranking[k].score;
  const auto ranks = average_ranks(negated);
  RankTable table;
  for (std::size_t k = 0; k < ranking.size(); ++k) table[ranking[k].id] = ranks[k];
  return table;
}

RankTable read_ranking_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return read_ranking_csv(in, path.string());
}

RankTable read_ranking_csv(std::istream& in, const std::string& source) {
  csv::Reader reader(in, source);
  csv::expect_header(reader, {"id", "rank"});
  RankTable table;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    const std::string where = source + ":" + std::to_string(reader.line());
    if (f.size() != 2) throw ParseError(where + ": expected 2 fields");
    double rank = 0.0;
    auto [ptr, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), rank);
    if (ec != std::errc() || ptr != f[1].data() + f[1].size() || !std::isfinite(rank)) {
      throw ParseError(where + ": invalid rank `" + f[1] + "`");
    }
    if (!table.emplace(f[0], rank).second) throw SchemaError(where + ": duplicate id `" + f[0] + "`");
  }
  return table;
}

PoleSets match_poles(const RankTable& ranking, const LocationTable& metadata, std::size_t n) {
  if (n < 1) throw ConfigError("pole size must be at least 1");
  if (ranking.empty()) throw InputError("ranking table is empty");
  std::vector<std::pair<std::string, double>> ordered(ranking.begin(), ranking.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  if (n > ordered.size()) {
    throw MatchingError("pole size " + std::to_string(n) + " exceeds ranking size " +
                        std::to_string(ordered.size()));
  }

  PoleSets poles;
  std::map<std::string, std::size_t> quota;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& id = ordered[k].first;
    const auto* record = metadata.find(id);
    if (!record) throw MatchingError("top-ranked `" + id + "` has no region metadata");
    ++quota[record->region];
    poles.top.push_back(id);
  }

  std::vector<std::pair<std::string, double>> chosen;
  // Walk from the worst rank upward, filling each region's quota.
  std::vector<std::pair<std::string, double>> candidates(ordered.begin() + static_cast<long>(n),
                                                         ordered.end());
  std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  auto remaining = quota;
  for (const auto& [id, rank] : candidates) {
    const auto* record = metadata.find(id);
    if (!record) continue;
    auto it = remaining.find(record->region);
    if (it == remaining.end() || it->second == 0) continue;
    --it->second;
    chosen.emplace_back(id, rank);
  }
  for (const auto& [region, left] : remaining) {
    if (left > 0) {
      throw MatchingError("region `" + region + "` needs " + std::to_string(quota[region]) +
                          " bottom-ranked ids but only " + std::to_string(quota[region] - left) +
                          " remain");
    }
  }
  for (auto& [id, rank] : chosen) poles.bottom.push_back(std::move(id));
  return poles;
}

double spearman(const RankTable& a, const RankTable& b) {
  if (a.size() != b.size()) throw InputError("spearman: rankings cover different id sets");
  std::vector<double> ra, rb;
  ra.reserve(a.size());
  rb.reserve(b.size());
  for (const auto& [id, rank] : a) {
    auto it = b.find(id);
    if (it == b.end()) throw InputError("spearman: `" + id + "` missing from the second ranking");
    ra.push_back(rank);
    rb.push_back(it->second);
  }
  if (ra.size() < 2) throw InputError("spearman needs at least two ids");
  const auto xa = average_ranks(ra);
  const auto xb = average_ranks(rb);
  const double n = static_cast<double>(xa.size());
  const double ma = std::accumulate(xa.begin(), xa.end(), 0.0) / n;
  const double mb = std::accumulate(xb.begin(), xb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < xa.size(); ++k) {
    sab += (xa[k] - ma) * (xb[k] - mb);
    saa += (xa[k] - ma) * (xa[k] - ma);
    sbb += (xb[k] - mb) * (xb[k] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw DomainError("spearman is undefined for a constant ranking");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace locvec
