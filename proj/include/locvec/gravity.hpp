#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "locvec/corpus.hpp"
#include "locvec/distances.hpp"

namespace locvec {

enum class FluxMode { ConsecutiveDistinct, AllPairsWithinTrajectory };
enum class PopulationSource { UniqueEntities, YearlyAverageUniqueEntities, External };
enum class DecayFamily { PowerLaw, Exponential };

std::string_view to_string(FluxMode mode);
std::string_view to_string(PopulationSource source);
std::string_view to_string(DecayFamily family);
FluxMode parse_flux_mode(std::string_view text);
PopulationSource parse_population_source(std::string_view text);
DecayFamily parse_decay_family(std::string_view text);

// Power law for geographic distance, exponential for everything else.
DecayFamily default_family(DistanceKind kind);

// Fixed seed for the single realization used by ConsecutiveDistinct counting.
inline constexpr std::uint64_t kFluxSeed = 20080101;

struct FluxEntry {
  std::uint32_t i = 0;  // i < j
  std::uint32_t j = 0;
  std::uint64_t flux = 0;
};

// Symmetric co-occurrence counts over vocabulary indices, stored sparsely.
class FluxMatrix {
 public:
  FluxMatrix() = default;
  explicit FluxMatrix(std::vector<std::string> locations) : locations_(std::move(locations)) {}

  const std::vector<std::string>& locations() const { return locations_; }
  std::size_t size() const { return locations_.size(); }

  // Adds to T_ij = T_ji. Diagonal additions are ignored.
  void add(std::uint32_t i, std::uint32_t j, std::uint64_t amount = 1);
  std::uint64_t at(std::uint32_t i, std::uint32_t j) const;
  // Nonzero entries with i < j, sorted by (i, j).
  std::vector<FluxEntry> entries() const;
  std::uint64_t total() const;
  void merge(const FluxMatrix& other);

 private:
  static std::uint64_t key(std::uint32_t i, std::uint32_t j) {
    if (i > j) std::swap(i, j);
    return (static_cast<std::uint64_t>(i) << 32) | j;
  }
  std::vector<std::string> locations_;
  std::unordered_map<std::uint64_t, std::uint64_t> counts_;
};

FluxMatrix compute_flux(std::span<const Trajectory> trajectories, const Vocabulary& vocabulary,
                        FluxMode mode = FluxMode::ConsecutiveDistinct,
                        std::uint64_t seed = kFluxSeed);

// Population per vocabulary index. External reads metadata and throws
// DomainError when a location lacks external_population.
std::vector<double> compute_population(std::span<const Trajectory> trajectories,
                                       const Vocabulary& vocabulary, PopulationSource source,
                                       const LocationTable* metadata = nullptr);

// One location pair entering the regression.
struct GravitySample {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double flux = 0.0;
  double mass_i = 0.0;
  double mass_j = 0.0;
  double distance = 0.0;
};

using PairDistance = std::function<double(std::uint32_t, std::uint32_t)>;
using PairFilter = std::function<bool(std::uint32_t, std::uint32_t)>;

// Nonzero-flux pairs with their masses and distances. Pairs rejected by
// `keep` are skipped.
std::vector<GravitySample> gravity_samples(const FluxMatrix& flux, std::span<const double> mass,
                                           const PairDistance& distance,
                                           const PairFilter& keep = {});

struct GravityFit {
  DecayFamily family = DecayFamily::PowerLaw;
  DistanceKind distance_kind = DistanceKind::GeographicKm;
  double ln_c = 0.0;
  // alpha for the power law, beta for the exponential.
  double decay = 0.0;
  double r_squared = 0.0;
  double rmse_log = 0.0;
  std::size_t n_pairs = 0;
};

// Regression variable for a distance under the given family: ln r or r.
double decay_regressor(DecayFamily family, double distance);

// OLS of ln(T/(m_i m_j)) on -ln r (power) or -r (exponential) over samples
// with positive flux. Throws FitError with fewer than three pairs and
// DomainError for nonpositive distances under the power law.
GravityFit fit_gravity(std::span<const GravitySample> samples, DecayFamily family,
                       DistanceKind kind);
GravityFit fit_gravity(const FluxMatrix& flux, std::span<const double> mass,
                       const PairDistance& distance, DecayFamily family, DistanceKind kind);

// exp(ln C) m_i m_j f(r).
double predict_flux(const GravityFit& fit, double mass_i, double mass_j, double distance);

struct DistanceBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double mean_ln_flux = 0.0;
  double mean_ln_predicted = 0.0;
};

struct FitEvaluation {
  double r_squared_loglog = 0.0;
  double rmse = 0.0;
  std::vector<DistanceBin> binned_means;
};

inline constexpr std::size_t kDefaultBins = 50;

// Scores a fit on samples: R^2 in the regression space, RMSE between ln T
// and ln T-hat, and mean ln T over equal-width bins of the regressor.
// Empty bins are omitted.
FitEvaluation evaluate_fit(const GravityFit& fit, std::span<const GravitySample> samples,
                           std::size_t bins = kDefaultBins);

void write_flux_csv(std::ostream& out, const FluxMatrix& flux);

}  // namespace locvec
