#pragma once

#include <span>
#include <string_view>

#include "locvec/corpus.hpp"

namespace locvec {

enum class DistanceKind { EmbeddingCosine, EmbeddingDot, GeographicKm, PprCosine, PprJsd };

std::string_view to_string(DistanceKind kind);
// Accepts the names returned by to_string plus the short forms
// `embedding`, `dot`, `geographic`, `ppr_cosine`, `ppr_jsd`.
DistanceKind parse_distance_kind(std::string_view text);

inline constexpr double kEarthRadiusKm = 6371.0088;
// Distance floors: inter-city datasets and intra-city datasets.
inline constexpr double kInterCityFloorKm = 1.0;
inline constexpr double kIntraCityFloorKm = 0.01;

// u.v / (|u||v|) clamped to [-1, 1]. Throws DomainError on zero vectors or
// length mismatch.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

// 1 - cosine_similarity(u, v).
double cosine_distance(std::span<const double> u, std::span<const double> v);

double dot_similarity(std::span<const double> u, std::span<const double> v);

double l2_norm(std::span<const double> v);

struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;
};

// Haversine distance in km, never below floor_km.
double great_circle_km(GeoPoint a, GeoPoint b, double floor_km = kInterCityFloorKm);

// Throws DomainError naming the location when coordinates are missing.
double great_circle_km(const LocationRecord& a, const LocationRecord& b,
                       double floor_km = kInterCityFloorKm);

}  // namespace locvec
