#include "locvec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "locvec/distances.hpp"
#include "locvec/error.hpp"
#include "locvec/random.hpp"

namespace locvec::synth {

namespace {

// Knuth's method for small means, Hormann's PTRS otherwise.
std::uint64_t poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  if (mean < 10.0) {
    const double limit = std::exp(-mean);
    double prod = uniform01(rng);
    std::uint64_t k = 0;
    while (prod > limit) {
      prod *= uniform01(rng);
      ++k;
    }
    return k;
  }
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform01(rng) - 0.5;
    const double v = uniform01(rng);
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

double uniform_in(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

std::string padded(std::string_view prefix, std::size_t i, std::size_t width) {
  std::string digits = std::to_string(i);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return std::string(prefix) + digits;
}

std::size_t digits_for(std::size_t n) { return std::to_string(n > 0 ? n - 1 : 0).size(); }

}  // namespace

std::vector<Visit> GravityBenchmark::visits() const {
  std::vector<Visit> out;
  std::size_t entity = 0;
  for (const auto& e : flux.entries()) {
    for (std::uint64_t k = 0; k < e.flux; ++k, ++entity) {
      const std::string id = "g" + std::to_string(entity);
      out.push_back({id, flux.locations()[e.i], 0});
      out.push_back({id, flux.locations()[e.j], 1});
    }
  }
  return out;
}

double GravityBenchmark::distance(std::uint32_t i, std::uint32_t j) const {
  return great_circle_km(metadata.at(flux.locations()[i]), metadata.at(flux.locations()[j]),
                         floor_km);
}

GravityBenchmark planted_gravity(const GravityOptions& options) {
  if (options.locations < 3) throw ConfigError("planted gravity needs at least 3 locations");
  if (!(options.min_expected_flux > 0.0)) throw ConfigError("min_expected_flux must be positive");
  Rng rng(options.seed);
  const std::size_t n = options.locations;
  const std::size_t width = digits_for(n);

  std::vector<LocationRecord> records;
  std::vector<std::string> ids;
  std::vector<double> mass;
  for (std::size_t i = 0; i < n; ++i) {
    LocationRecord r;
    r.id = padded("L", i, width);
    r.name = "Planted location " + std::to_string(i);
    r.latitude = uniform_in(rng, options.lat_min, options.lat_max);
    r.longitude = uniform_in(rng, options.lon_min, options.lon_max);
    r.country = "XX";
    r.region = "R" + std::to_string(i % 4);
    r.sector = Sector::Other;
    const double m = std::exp(options.log_mass_mean + options.log_mass_sd * standard_normal(rng));
    r.external_population = m;
    ids.push_back(r.id);
    mass.push_back(m);
    records.push_back(std::move(r));
  }

  GravityBenchmark bench;
  bench.metadata = LocationTable(std::move(records));
  bench.mass = mass;
  bench.alpha = options.alpha;
  bench.floor_km = options.floor_km;
  bench.flux = FluxMatrix(ids);

  std::vector<double> raw;  // m_i m_j r^-alpha for i < j, row-major
  raw.reserve(n * (n - 1) / 2);
  double smallest = std::numeric_limits<double>::infinity();
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      const double r = great_circle_km(bench.metadata.at(ids[i]), bench.metadata.at(ids[j]),
                                       options.floor_km);
      raw.push_back(mass[i] * mass[j] * std::pow(r, -options.alpha));
      smallest = std::min(smallest, raw.back());
    }
  }
  const double c = options.min_expected_flux / smallest;
  bench.ln_c = std::log(c);
  std::size_t k = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j, ++k) {
      const double expected = c * raw[k];
      const std::uint64_t t = options.poisson ? poisson(rng, expected)
                                              : static_cast<std::uint64_t>(std::llround(expected));
      bench.flux.add(i, j, t);
    }
  }
  return bench;
}

CommunityBenchmark planted_communities(const CommunityOptions& options) {
  const std::size_t s = options.per_community;
  const std::size_t g = options.communities;
  if (g < 2 || s < 2) throw ConfigError("planted communities need at least 2 groups of 2");
  if (!(options.ratio > 0.0)) throw ConfigError("community ratio must be positive");
  if (options.trajectory_length < 2) throw ConfigError("trajectory length must be at least 2");
  const std::size_t n = g * s;
  Rng rng(options.seed);

  CommunityBenchmark bench;
  std::vector<LocationRecord> records;
  const std::size_t width = digits_for(s);
  for (std::size_t c = 0; c < g; ++c) {
    for (std::size_t k = 0; k < s; ++k) {
      LocationRecord r;
      r.id = "C" + std::to_string(c) + "_" + padded("", k, width);
      r.name = "Community " + std::to_string(c) + " location " + std::to_string(k);
      r.latitude = uniform_in(rng, options.lat_min, options.lat_max);
      r.longitude = uniform_in(rng, options.lon_min, options.lon_max);
      r.country = "K" + std::to_string(c);
      r.region = "R" + std::to_string(k % 2);
      r.sector = Sector::University;
      bench.location_ids.push_back(r.id);
      bench.community.push_back(static_cast<int>(c));
      records.push_back(std::move(r));
    }
  }
  bench.metadata = LocationTable(std::move(records));

  // Rank within the whole set by position inside each community, so every
  // community holds both high- and low-ranked locations.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return a % s != b % s ? a % s < b % s : a < b;
  });
  bench.planted_rank.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) bench.planted_rank[order[r]] = static_cast<double>(r + 1);

  // Per-pair transition weight is `ratio` inside a community and 1 across.
  const double inside = options.ratio * static_cast<double>(s - 1);
  const double outside = static_cast<double>(n - s);
  const double p_inside = inside / (inside + outside);

  const std::size_t ewidth = digits_for(options.entities);
  for (std::size_t e = 0; e < options.entities; ++e) {
    const std::string entity = padded("e", e, ewidth);
    std::size_t cur = uniform_below(rng, n);
    for (std::size_t t = 0; t < options.trajectory_length; ++t) {
      bench.visits.push_back({entity, bench.location_ids[cur], static_cast<std::int64_t>(t)});
      const std::size_t c = cur / s;
      if (uniform01(rng) < p_inside) {
        std::size_t k = uniform_below(rng, s - 1);
        if (c * s + k >= cur) ++k;
        cur = c * s + k;
      } else {
        std::size_t k = uniform_below(rng, n - s);
        if (k >= c * s) k += s;
        cur = k;
      }
    }
  }
  return bench;
}

}  // namespace locvec::synth
