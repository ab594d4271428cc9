#include "locvec/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <charconv>
#include <fstream>
#include <map>
#include <unordered_set>

#include "locvec/csv.hpp"
#include "locvec/error.hpp"

namespace locvec {

namespace {

constexpr std::string_view kSectorNames[] = {"University", "Hospital", "Government", "Other",
                                             "Unspecified"};

std::string where(const csv::Reader& reader) {
  return reader.source() + ":" + std::to_string(reader.line());
}

std::optional<double> parse_optional_real(const csv::Reader& reader, std::string_view field,
                                          std::string_view name) {
  if (field.empty()) return std::nullopt;
  double value = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError(where(reader) + ": invalid " + std::string(name) + " `" +
                     std::string(field) + "`");
  }
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

}  // namespace

std::string_view to_string(Sector sector) { return kSectorNames[static_cast<int>(sector)]; }

Sector parse_sector(std::string_view text) {
  if (text.empty()) return Sector::Unspecified;
  for (int i = 0; i < 5; ++i) {
    const auto name = kSectorNames[i];
    if (name.size() == text.size() &&
        std::equal(name.begin(), name.end(), text.begin(), [](char a, char b) {
          return std::tolower(static_cast<unsigned char>(a)) ==
                 std::tolower(static_cast<unsigned char>(b));
        })) {
      return static_cast<Sector>(i);
    }
  }
  throw ParseError("unknown sector `" + std::string(text) + "`");
}

LocationTable::LocationTable(std::vector<LocationRecord> records) : records_(std::move(records)) {
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!index_.emplace(records_[i].id, i).second) {
      throw SchemaError("duplicate location id `" + records_[i].id + "`");
    }
  }
}

const LocationRecord* LocationTable::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

const LocationRecord& LocationTable::at(std::string_view id) const {
  if (const auto* record = find(id)) return *record;
  throw LookupError("unknown location `" + std::string(id) + "`");
}

LocationTable parse_metadata(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_metadata(in, path.string());
}

LocationTable parse_metadata(std::istream& in, const std::string& source) {
  csv::Reader reader(in, source);
  csv::expect_header(reader, {"id", "name", "latitude", "longitude", "country", "region", "sector",
                              "external_population", "general_parent"});
  std::vector<LocationRecord> records;
  std::unordered_map<std::string, std::size_t> seen;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != 9) {
      throw ParseError(where(reader) + ": expected 9 fields, found " + std::to_string(f.size()));
    }
    LocationRecord r;
    r.id = f[0];
    if (r.id.empty()) throw ParseError(where(reader) + ": empty id");
    r.name = f[1];
    r.latitude = parse_optional_real(reader, f[2], "latitude");
    r.longitude = parse_optional_real(reader, f[3], "longitude");
    if (r.latitude && (*r.latitude < -90.0 || *r.latitude > 90.0)) {
      throw ParseError(where(reader) + ": latitude " + f[2] + " outside [-90, 90]");
    }
    if (r.longitude && (*r.longitude < -180.0 || *r.longitude > 180.0)) {
      throw ParseError(where(reader) + ": longitude " + f[3] + " outside [-180, 180]");
    }
    r.country = f[4];
    r.region = f[5];
    try {
      r.sector = parse_sector(f[6]);
    } catch (const ParseError& e) {
      throw ParseError(where(reader) + ": " + e.what());
    }
    r.external_population = parse_optional_real(reader, f[7], "external_population");
    if (r.external_population && *r.external_population < 0.0) {
      throw ParseError(where(reader) + ": negative external_population");
    }
    if (!f[8].empty()) r.general_parent = f[8];
    if (!seen.emplace(r.id, reader.line()).second) {
      throw SchemaError(where(reader) + ": duplicate location id `" + r.id + "`");
    }
    records.push_back(std::move(r));
  }
  return LocationTable(std::move(records));
}

void write_metadata(std::ostream& out, const LocationTable& table) {
  out << "id,name,latitude,longitude,country,region,sector,external_population,general_parent\n";
  auto real = [](const std::optional<double>& v) {
    if (!v) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    return std::string(buf);
  };
  for (const auto& r : table.records()) {
    csv::write_row(out, {r.id, r.name, real(r.latitude), real(r.longitude), r.country, r.region,
                         std::string(to_string(r.sector)), real(r.external_population),
                         r.general_parent.value_or("")});
  }
}

std::vector<Visit> parse_visits(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_visits(in, path.string());
}

std::vector<Visit> parse_visits(std::istream& in, const std::string& source) {
  csv::Reader reader(in, source);
  csv::expect_header(reader, {"entity_id", "location_id", "period"});
  std::vector<Visit> visits;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != 3) {
      throw ParseError(where(reader) + ": expected 3 fields, found " + std::to_string(f.size()));
    }
    if (f[0].empty() || f[1].empty()) throw ParseError(where(reader) + ": empty token");
    Visit v{f[0], f[1], 0};
    const auto* end = f[2].data() + f[2].size();
    auto [ptr, ec] = std::from_chars(f[2].data(), end, v.period);
    if (ec != std::errc() || ptr != end || f[2].empty()) {
      throw ParseError(where(reader) + ": invalid period `" + f[2] + "`");
    }
    visits.push_back(std::move(v));
  }
  return visits;
}

void write_visits(std::ostream& out, std::span<const Visit> visits) {
  out << "entity_id,location_id,period\n";
  for (const auto& v : visits) {
    csv::write_row(out, {v.entity_id, v.location_id, std::to_string(v.period)});
  }
}

std::size_t Trajectory::token_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.locations.size();
  return n;
}

std::vector<std::string> Trajectory::distinct_locations() const {
  std::vector<std::string> out;
  for (const auto& g : groups) out.insert(out.end(), g.locations.begin(), g.locations.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool Trajectory::contains(std::string_view location) const {
  for (const auto& g : groups) {
    if (std::find(g.locations.begin(), g.locations.end(), location) != g.locations.end()) {
      return true;
    }
  }
  return false;
}

std::vector<Trajectory> build_trajectories(std::span<const Visit> visits) {
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::string> entities;
  std::vector<std::map<std::int64_t, std::vector<std::string>>> buckets;
  for (const auto& v : visits) {
    auto [it, inserted] = slot.emplace(v.entity_id, entities.size());
    if (inserted) {
      entities.push_back(v.entity_id);
      buckets.emplace_back();
    }
    buckets[it->second][v.period].push_back(v.location_id);
  }
  std::vector<Trajectory> out(entities.size());
  for (std::size_t i = 0; i < entities.size(); ++i) {
    out[i].entity_id = std::move(entities[i]);
    for (auto& [period, locations] : buckets[i]) {
      out[i].groups.push_back({period, std::move(locations)});
    }
  }
  return out;
}

std::vector<Trajectory> filter_mobile(std::span<const Trajectory> trajectories) {
  std::vector<Trajectory> out;
  for (const auto& t : trajectories) {
    const std::string* first = nullptr;
    bool mobile = false;
    for (const auto& g : t.groups) {
      for (const auto& loc : g.locations) {
        if (!first) {
          first = &loc;
        } else if (loc != *first) {
          mobile = true;
          break;
        }
      }
      if (mobile) break;
    }
    if (mobile) out.push_back(t);
  }
  return out;
}

std::vector<Trajectory> prune_general(std::span<const Trajectory> trajectories,
                                      const LocationTable& metadata) {
  // Reject cyclic parent chains up front.
  std::unordered_map<std::string, int> state;  // 1 = on stack, 2 = done
  for (const auto& record : metadata.records()) {
    std::vector<const LocationRecord*> chain;
    const LocationRecord* cur = &record;
    while (cur && state[cur->id] == 0) {
      state[cur->id] = 1;
      chain.push_back(cur);
      cur = cur->general_parent ? metadata.find(*cur->general_parent) : nullptr;
    }
    if (cur && state[cur->id] == 1) {
      throw ConfigError("cyclic general_parent chain through `" + cur->id + "`");
    }
    for (const auto* c : chain) state[c->id] = 2;
  }

  std::vector<Trajectory> out;
  out.reserve(trajectories.size());
  for (const auto& t : trajectories) {
    std::unordered_set<std::string> present;
    for (const auto& g : t.groups) present.insert(g.locations.begin(), g.locations.end());
    std::unordered_set<std::string> removed;
    for (const auto& loc : present) {
      const auto* record = metadata.find(loc);
      if (record && record->general_parent && *record->general_parent != loc &&
          present.contains(*record->general_parent)) {
        removed.insert(*record->general_parent);
      }
    }
    if (removed.empty()) {
      out.push_back(t);
      continue;
    }
    Trajectory pruned{t.entity_id, {}};
    for (const auto& g : t.groups) {
      PeriodGroup kept{g.period, {}};
      for (const auto& loc : g.locations) {
        if (!removed.contains(loc)) kept.locations.push_back(loc);
      }
      if (!kept.locations.empty()) pruned.groups.push_back(std::move(kept));
    }
    out.push_back(std::move(pruned));
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::uint64_t> counts)
    : tokens_(std::move(tokens)), counts_(std::move(counts)) {
  if (counts_.size() != tokens_.size()) {
    throw SchemaError("vocabulary token and count lists differ in length");
  }
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<std::uint32_t>(i)).second) {
      throw SchemaError("duplicate vocabulary token `" + tokens_[i] + "`");
    }
  }
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t Vocabulary::index_of(std::string_view token) const {
  if (auto i = find(token)) return *i;
  throw LookupError("token `" + std::string(token) + "` is not in the vocabulary");
}

std::uint64_t Vocabulary::count(std::string_view token) const { return counts_[index_of(token)]; }

Vocabulary build_vocabulary(std::span<const Trajectory> trajectories, std::size_t min_count) {
  if (min_count < 1) throw ConfigError("min_count must be at least 1");
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& t : trajectories) {
    for (const auto& g : t.groups) {
      for (const auto& loc : g.locations) ++counts[loc];
    }
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [token, n] : counts) {
    if (n >= min_count) kept.emplace_back(token, n);
  }
  if (kept.empty()) {
    throw InputError("empty vocabulary: no location appears at least " +
                     std::to_string(min_count) + " times");
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> c;
  tokens.reserve(kept.size());
  c.reserve(kept.size());
  for (auto& [token, n] : kept) {
    tokens.push_back(std::move(token));
    c.push_back(n);
  }
  return Vocabulary(std::move(tokens), std::move(c));
}

std::size_t EncodedTrajectory::token_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  return n;
}

EncodedTrajectory encode(const Trajectory& trajectory, const Vocabulary& vocabulary) {
  EncodedTrajectory out;
  for (const auto& g : trajectory.groups) {
    std::vector<std::uint32_t> group;
    for (const auto& loc : g.locations) {
      if (auto i = vocabulary.find(loc)) group.push_back(*i);
    }
    if (!group.empty()) out.groups.push_back(std::move(group));
  }
  return out;
}

TokenSequence realize(const EncodedTrajectory& trajectory, Rng& rng, bool collapse_duplicates) {
  TokenSequence seq;
  seq.reserve(trajectory.token_count());
  for (const auto& g : trajectory.groups) {
    const auto start = seq.size();
    seq.insert(seq.end(), g.begin(), g.end());
    shuffle(std::span<std::uint32_t>(seq).subspan(start), rng);
  }
  if (collapse_duplicates) seq.erase(std::unique(seq.begin(), seq.end()), seq.end());
  return seq;
}

TokenSequence realize(const Trajectory& trajectory, const Vocabulary& vocabulary, Rng& rng,
                      bool collapse_duplicates) {
  return realize(encode(trajectory, vocabulary), rng, collapse_duplicates);
}

}  // namespace locvec
