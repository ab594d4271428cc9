#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "locvec/corpus.hpp"
#include "locvec/gravity.hpp"

namespace locvec::synth {

// Locations with lognormal masses and flux drawn from the gravity law
// T = round(C m_i m_j r^-alpha), optionally with Poisson noise.
struct GravityOptions {
  std::size_t locations = 200;
  double log_mass_mean = 4.0;
  double log_mass_sd = 1.0;
  double alpha = 2.0;
  // C is chosen so the smallest expected flux equals this value.
  double min_expected_flux = 1.0;
  bool poisson = false;
  double lat_min = 25.0, lat_max = 49.0;
  double lon_min = -124.0, lon_max = -67.0;
  double floor_km = kInterCityFloorKm;
  std::uint64_t seed = 7;
};

struct GravityBenchmark {
  LocationTable metadata;     // external_population holds m_i
  std::vector<double> mass;   // aligned with flux.locations()
  FluxMatrix flux;
  double ln_c = 0.0;
  double alpha = 0.0;
  double floor_km = kInterCityFloorKm;

  // One two-visit entity per unit of flux; counting these with
  // ConsecutiveDistinct reproduces `flux` exactly.
  std::vector<Visit> visits() const;
  double distance(std::uint32_t i, std::uint32_t j) const;
};

GravityBenchmark planted_gravity(const GravityOptions& options);

// Locations split into communities; entities random-walk with a per-pair
// transition rate `ratio` times higher inside a community than across.
// Coordinates are drawn independently of community.
struct CommunityOptions {
  std::size_t communities = 5;
  std::size_t per_community = 40;
  double ratio = 20.0;
  std::size_t entities = 20000;
  std::size_t trajectory_length = 6;
  double lat_min = 25.0, lat_max = 49.0;
  double lon_min = -124.0, lon_max = -67.0;
  std::uint64_t seed = 11;
};

struct CommunityBenchmark {
  LocationTable metadata;
  std::vector<Visit> visits;
  std::vector<std::string> location_ids;
  std::vector<int> community;  // aligned with location_ids
  // Planted rank (1 = best) per location, for prestige-axis smoke tests.
  std::vector<double> planted_rank;
};

CommunityBenchmark planted_communities(const CommunityOptions& options);

}  // namespace locvec::synth
