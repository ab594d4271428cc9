#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "locvec/random.hpp"

namespace locvec {

enum class Sector { University, Hospital, Government, Other, Unspecified };

std::string_view to_string(Sector sector);
// Accepts the enum names case-insensitively; empty text maps to Unspecified.
Sector parse_sector(std::string_view text);

struct LocationRecord {
  std::string id;
  std::string name;
  std::optional<double> latitude;
  std::optional<double> longitude;
  std::string country;
  std::string region;
  Sector sector = Sector::Unspecified;
  std::optional<double> external_population;
  std::optional<std::string> general_parent;

  bool has_coordinates() const { return latitude.has_value() && longitude.has_value(); }
};

// Location records with lookup by id. Ids are unique.
class LocationTable {
 public:
  LocationTable() = default;
  explicit LocationTable(std::vector<LocationRecord> records);

  const std::vector<LocationRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const LocationRecord* find(std::string_view id) const;
  // Throws LookupError for unknown ids.
  const LocationRecord& at(std::string_view id) const;

 private:
  std::vector<LocationRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Header: id,name,latitude,longitude,country,region,sector,external_population,general_parent
LocationTable parse_metadata(const std::filesystem::path& path);
LocationTable parse_metadata(std::istream& in, const std::string& source = "<metadata>");
void write_metadata(std::ostream& out, const LocationTable& table);

struct Visit {
  std::string entity_id;
  std::string location_id;
  std::int64_t period = 0;
};

// Header: entity_id,location_id,period
std::vector<Visit> parse_visits(const std::filesystem::path& path);
std::vector<Visit> parse_visits(std::istream& in, const std::string& source = "<visits>");
void write_visits(std::ostream& out, std::span<const Visit> visits);

// Visits of one entity that share a time bucket. Multiplicity is kept.
struct PeriodGroup {
  std::int64_t period = 0;
  std::vector<std::string> locations;

  bool operator==(const PeriodGroup&) const = default;
};

// Period groups are strictly ascending and never empty.
struct Trajectory {
  std::string entity_id;
  std::vector<PeriodGroup> groups;

  std::size_t token_count() const;
  std::vector<std::string> distinct_locations() const;
  bool contains(std::string_view location) const;

  bool operator==(const Trajectory&) const = default;
};

// One trajectory per entity, in order of first appearance of the entity.
std::vector<Trajectory> build_trajectories(std::span<const Visit> visits);

// Keeps trajectories that visit at least two distinct locations.
std::vector<Trajectory> filter_mobile(std::span<const Trajectory> trajectories);

// Removes every occurrence of a general location from trajectories that
// also contain one of its more specific children. Throws ConfigError when
// general_parent links form a cycle.
std::vector<Trajectory> prune_general(std::span<const Trajectory> trajectories,
                                      const LocationTable& metadata);

inline constexpr std::size_t kDefaultMinCount = 50;

// Dense token index ordered by descending count, ties lexicographic.
class Vocabulary {
 public:
  Vocabulary() = default;
  // Tokens are taken in the given order; counts align with tokens.
  Vocabulary(std::vector<std::string> tokens, std::vector<std::uint64_t> counts);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  bool contains(std::string_view token) const { return find(token).has_value(); }
  std::optional<std::uint32_t> find(std::string_view token) const;
  // Throws LookupError for unknown tokens.
  std::uint32_t index_of(std::string_view token) const;
  const std::string& token(std::uint32_t index) const { return tokens_[index]; }
  std::uint64_t count(std::uint32_t index) const { return counts_[index]; }
  std::uint64_t count(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && counts_ == other.counts_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Counts every token occurrence and keeps those seen at least min_count
// times. Throws InputError when nothing survives.
Vocabulary build_vocabulary(std::span<const Trajectory> trajectories,
                            std::size_t min_count = kDefaultMinCount);

using TokenSequence = std::vector<std::uint32_t>;

// Trajectory with tokens mapped to vocabulary indices; out-of-vocabulary
// tokens are dropped and groups left empty are removed.
struct EncodedTrajectory {
  std::vector<std::vector<std::uint32_t>> groups;

  std::size_t token_count() const;
};

EncodedTrajectory encode(const Trajectory& trajectory, const Vocabulary& vocabulary);

// Concatenates groups in period order with each group freshly shuffled.
// With collapse_duplicates, runs of equal consecutive tokens become one.
TokenSequence realize(const EncodedTrajectory& trajectory, Rng& rng, bool collapse_duplicates);
TokenSequence realize(const Trajectory& trajectory, const Vocabulary& vocabulary, Rng& rng,
                      bool collapse_duplicates);

}  // namespace locvec
