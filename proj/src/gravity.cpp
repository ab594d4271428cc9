#include "locvec/gravity.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <unordered_set>

#include "locvec/csv.hpp"
#include "locvec/error.hpp"

namespace locvec {

std::string_view to_string(FluxMode mode) {
  return mode == FluxMode::ConsecutiveDistinct ? "ConsecutiveDistinct" : "AllPairsWithinTrajectory";
}

std::string_view to_string(PopulationSource source) {
  switch (source) {
    case PopulationSource::UniqueEntities: return "UniqueEntities";
    case PopulationSource::YearlyAverageUniqueEntities: return "YearlyAverageUniqueEntities";
    case PopulationSource::External: return "External";
  }
  return "?";
}

std::string_view to_string(DecayFamily family) {
  return family == DecayFamily::PowerLaw ? "PowerLaw" : "Exponential";
}

FluxMode parse_flux_mode(std::string_view text) {
  if (text == "ConsecutiveDistinct" || text == "consecutive") return FluxMode::ConsecutiveDistinct;
  if (text == "AllPairsWithinTrajectory" || text == "all_pairs") {
    return FluxMode::AllPairsWithinTrajectory;
  }
  throw ConfigError("unknown flux mode `" + std::string(text) + "`");
}

PopulationSource parse_population_source(std::string_view text) {
  if (text == "UniqueEntities" || text == "unique") return PopulationSource::UniqueEntities;
  if (text == "YearlyAverageUniqueEntities" || text == "yearly_average") {
    return PopulationSource::YearlyAverageUniqueEntities;
  }
  if (text == "External" || text == "external") return PopulationSource::External;
  throw ConfigError("unknown population source `" + std::string(text) + "`");
}

DecayFamily parse_decay_family(std::string_view text) {
  if (text == "PowerLaw" || text == "power") return DecayFamily::PowerLaw;
  if (text == "Exponential" || text == "exponential") return DecayFamily::Exponential;
  throw ConfigError("unknown decay family `" + std::string(text) + "`");
}

DecayFamily default_family(DistanceKind kind) {
  return kind == DistanceKind::GeographicKm ? DecayFamily::PowerLaw : DecayFamily::Exponential;
}

void FluxMatrix::add(std::uint32_t i, std::uint32_t j, std::uint64_t amount) {
  if (i == j || amount == 0) return;
  counts_[key(i, j)] += amount;
}

std::uint64_t FluxMatrix::at(std::uint32_t i, std::uint32_t j) const {
  if (i == j) return 0;
  auto it = counts_.find(key(i, j));
  return it == counts_.end() ? 0 : it->second;
}

std::vector<FluxEntry> FluxMatrix::entries() const {
  std::vector<FluxEntry> out;
  out.reserve(counts_.size());
  for (const auto& [k, v] : counts_) {
    out.push_back({static_cast<std::uint32_t>(k >> 32), static_cast<std::uint32_t>(k & 0xFFFFFFFFu), v});
  }
  std::sort(out.begin(), out.end(),
            [](const FluxEntry& a, const FluxEntry& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
  return out;
}

std::uint64_t FluxMatrix::total() const {
  std::uint64_t s = 0;
  for (const auto& [k, v] : counts_) s += v;
  return s;
}

void FluxMatrix::merge(const FluxMatrix& other) {
  if (other.locations_ != locations_) throw SchemaError("cannot merge flux over different locations");
  for (const auto& [k, v] : other.counts_) counts_[k] += v;
}

FluxMatrix compute_flux(std::span<const Trajectory> trajectories, const Vocabulary& vocabulary,
                        FluxMode mode, std::uint64_t seed) {
  FluxMatrix flux(vocabulary.tokens());
  Rng rng(seed);
  for (const auto& t : trajectories) {
    const auto encoded = encode(t, vocabulary);
    if (mode == FluxMode::ConsecutiveDistinct) {
      const auto seq = realize(encoded, rng, /*collapse_duplicates=*/true);
      for (std::size_t k = 1; k < seq.size(); ++k) flux.add(seq[k - 1], seq[k]);
    } else {
      std::set<std::uint32_t> distinct;
      for (const auto& g : encoded.groups) distinct.insert(g.begin(), g.end());
      for (auto a = distinct.begin(); a != distinct.end(); ++a) {
        for (auto b = std::next(a); b != distinct.end(); ++b) flux.add(*a, *b);
      }
    }
  }
  return flux;
}

std::vector<double> compute_population(std::span<const Trajectory> trajectories,
                                       const Vocabulary& vocabulary, PopulationSource source,
                                       const LocationTable* metadata) {
  std::vector<double> m(vocabulary.size(), 0.0);
  switch (source) {
    case PopulationSource::External: {
      if (!metadata) throw ConfigError("external population requires location metadata");
      for (std::size_t i = 0; i < m.size(); ++i) {
        const auto& token = vocabulary.token(static_cast<std::uint32_t>(i));
        const auto* record = metadata->find(token);
        if (!record || !record->external_population) {
          throw DomainError("location `" + token + "` has no external_population");
        }
        m[i] = *record->external_population;
      }
      return m;
    }
    case PopulationSource::UniqueEntities: {
      for (const auto& t : trajectories) {
        std::unordered_set<std::uint32_t> seen;
        for (const auto& g : t.groups) {
          for (const auto& loc : g.locations) {
            if (auto i = vocabulary.find(loc); i && seen.insert(*i).second) m[*i] += 1.0;
          }
        }
      }
      return m;
    }
    case PopulationSource::YearlyAverageUniqueEntities: {
      std::set<std::int64_t> periods;
      for (const auto& t : trajectories) {
        for (const auto& g : t.groups) {
          periods.insert(g.period);
          std::unordered_set<std::uint32_t> seen;
          for (const auto& loc : g.locations) {
            if (auto i = vocabulary.find(loc); i && seen.insert(*i).second) m[*i] += 1.0;
          }
        }
      }
      if (!periods.empty()) {
        for (double& x : m) x /= static_cast<double>(periods.size());
      }
      return m;
    }
  }
  return m;
}

std::vector<GravitySample> gravity_samples(const FluxMatrix& flux, std::span<const double> mass,
                                           const PairDistance& distance, const PairFilter& keep) {
  if (mass.size() != flux.size()) throw SchemaError("population vector does not match flux size");
  std::vector<GravitySample> out;
  for (const auto& e : flux.entries()) {
    if (keep && !keep(e.i, e.j)) continue;
    out.push_back({e.i, e.j, static_cast<double>(e.flux), mass[e.i], mass[e.j], distance(e.i, e.j)});
  }
  return out;
}

double decay_regressor(DecayFamily family, double distance) {
  if (family == DecayFamily::PowerLaw) {
    if (!(distance > 0.0) || !std::isfinite(distance)) {
      throw DomainError("power-law gravity requires finite positive distances");
    }
    return std::log(distance);
  }
  if (!std::isfinite(distance)) throw DomainError("exponential gravity requires finite distances");
  return distance;
}

namespace {

double log_mass_ratio(const GravitySample& s) {
  if (!(s.mass_i > 0.0) || !(s.mass_j > 0.0)) {
    throw DomainError("gravity pair (" + std::to_string(s.i) + ", " + std::to_string(s.j) +
                      ") has nonpositive population");
  }
  return std::log(s.flux) - std::log(s.mass_i) - std::log(s.mass_j);
}

}  // namespace

GravityFit fit_gravity(std::span<const GravitySample> samples, DecayFamily family,
                       DistanceKind kind) {
  std::vector<double> xs, ys;
  xs.reserve(samples.size());
  ys.reserve(samples.size());
  for (const auto& s : samples) {
    if (!(s.flux > 0.0)) continue;
    xs.push_back(-decay_regressor(family, s.distance));
    ys.push_back(log_mass_ratio(s));
  }
  const std::size_t n = xs.size();
  if (n < 3) {
    throw FitError("gravity fit needs at least 3 pairs with nonzero flux, found " +
                   std::to_string(n));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = xs[k] - mx, dy = ys[k] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw FitError("gravity fit is degenerate: all distances are equal");

  GravityFit fit;
  fit.family = family;
  fit.distance_kind = kind;
  fit.decay = sxy / sxx;
  fit.ln_c = my - fit.decay * mx;
  fit.n_pairs = n;
  double ss_res = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = ys[k] - (fit.ln_c + fit.decay * xs[k]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.rmse_log = std::sqrt(ss_res / static_cast<double>(n));
  return fit;
}

GravityFit fit_gravity(const FluxMatrix& flux, std::span<const double> mass,
                       const PairDistance& distance, DecayFamily family, DistanceKind kind) {
  const auto samples = gravity_samples(flux, mass, distance);
  return fit_gravity(samples, family, kind);
}

double predict_flux(const GravityFit& fit, double mass_i, double mass_j, double distance) {
  const double x = decay_regressor(fit.family, distance);
  return std::exp(fit.ln_c - fit.decay * x) * mass_i * mass_j;
}

FitEvaluation evaluate_fit(const GravityFit& fit, std::span<const GravitySample> samples,
                           std::size_t bins) {
  if (bins == 0) throw ConfigError("bin count must be positive");
  FitEvaluation eval;
  std::vector<double> xs, ln_t, ln_hat, ys;
  for (const auto& s : samples) {
    if (!(s.flux > 0.0)) continue;
    const double x = decay_regressor(fit.family, s.distance);
    const double ln_mm = std::log(s.mass_i) + std::log(s.mass_j);
    xs.push_back(x);
    ln_t.push_back(std::log(s.flux));
    ln_hat.push_back(fit.ln_c - fit.decay * x + ln_mm);
    ys.push_back(log_mass_ratio(s));
  }
  const std::size_t n = xs.size();
  if (n == 0) return eval;

  double my = 0.0;
  for (double y : ys) my += y;
  my /= static_cast<double>(n);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = ln_t[k] - ln_hat[k];
    ss_res += r * r;
    ss_tot += (ys[k] - my) * (ys[k] - my);
  }
  eval.rmse = std::sqrt(ss_res / static_cast<double>(n));
  eval.r_squared_loglog = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);

  const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  const double lo = *lo_it, hi = *hi_it;
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  std::vector<DistanceBin> all(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    all[b].lower = lo + width * static_cast<double>(b);
    all[b].upper = lo + width * static_cast<double>(b + 1);
  }
  for (std::size_t k = 0; k < n; ++k) {
    auto b = static_cast<std::size_t>((xs[k] - lo) / width);
    b = std::min(b, bins - 1);
    all[b].count += 1;
    all[b].mean_ln_flux += ln_t[k];
    all[b].mean_ln_predicted += ln_hat[k];
  }
  for (auto& bin : all) {
    if (bin.count == 0) continue;
    bin.mean_ln_flux /= static_cast<double>(bin.count);
    bin.mean_ln_predicted /= static_cast<double>(bin.count);
    eval.binned_means.push_back(bin);
  }
  return eval;
}

void write_flux_csv(std::ostream& out, const FluxMatrix& flux) {
  out << "source,target,flux\n";
  for (const auto& e : flux.entries()) {
    csv::write_row(out, {flux.locations()[e.i], flux.locations()[e.j], std::to_string(e.flux)});
  }
}

}  // namespace locvec
