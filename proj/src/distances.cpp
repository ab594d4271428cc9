#include "locvec/distances.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "locvec/error.hpp"

namespace locvec {

std::string_view to_string(DistanceKind kind) {
  switch (kind) {
    case DistanceKind::EmbeddingCosine: return "EmbeddingCosine";
    case DistanceKind::EmbeddingDot: return "EmbeddingDot";
    case DistanceKind::GeographicKm: return "GeographicKm";
    case DistanceKind::PprCosine: return "PprCosine";
    case DistanceKind::PprJsd: return "PprJsd";
  }
  return "?";
}

DistanceKind parse_distance_kind(std::string_view text) {
  if (text == "EmbeddingCosine" || text == "embedding") return DistanceKind::EmbeddingCosine;
  if (text == "EmbeddingDot" || text == "dot") return DistanceKind::EmbeddingDot;
  if (text == "GeographicKm" || text == "geographic") return DistanceKind::GeographicKm;
  if (text == "PprCosine" || text == "ppr_cosine") return DistanceKind::PprCosine;
  if (text == "PprJsd" || text == "ppr_jsd") return DistanceKind::PprJsd;
  throw ConfigError("unknown distance kind `" + std::string(text) + "`");
}

double dot_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DomainError("dot product of vectors with different lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DomainError("cosine of vectors with different lengths");
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw DomainError("cosine is undefined for a zero vector");
  return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  return 1.0 - cosine_similarity(u, v);
}

double great_circle_km(GeoPoint a, GeoPoint b, double floor_km) {
  if (!(floor_km > 0.0)) throw DomainError("distance floor must be positive");
  constexpr double rad = std::numbers::pi / 180.0;
  const double phi1 = a.latitude * rad;
  const double phi2 = b.latitude * rad;
  const double dphi = (b.latitude - a.latitude) * rad;
  const double dlambda = (b.longitude - a.longitude) * rad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = std::clamp(s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2, 0.0, 1.0);
  const double km = 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
  return std::max(km, floor_km);
}

double great_circle_km(const LocationRecord& a, const LocationRecord& b, double floor_km) {
  for (const auto* r : {&a, &b}) {
    if (!r->has_coordinates()) {
      throw DomainError("location `" + r->id + "` has no coordinates");
    }
  }
  return great_circle_km(GeoPoint{*a.latitude, *a.longitude}, GeoPoint{*b.latitude, *b.longitude},
                         floor_km);
}

}  // namespace locvec
