#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "locvec/cli.hpp"
#include "locvec/error.hpp"

namespace locvec::cli {

namespace {

struct KeySpec {
  std::string_view key;
  std::string_view fallback;
  bool is_path;
  bool in_model_hash;
};

// Every accepted key with its default.
constexpr KeySpec kKeys[] = {
    {"seed", "1", false, true},
    {"paths.metadata", "", true, true},
    {"paths.visits", "", true, true},
    {"paths.model", "", true, false},
    {"paths.output_dir", ".", true, false},
    {"paths.ranking", "", true, false},
    {"paths.positive_poles", "", true, false},
    {"paths.negative_poles", "", true, false},
    {"paths.labels", "", true, false},
    {"corpus.prune_general", "true", false, true},
    {"train.dim", "300", false, true},
    {"train.window", "1", false, true},
    {"train.negatives", "5", false, true},
    {"train.initial_rate", "0.025", false, true},
    {"train.epochs", "5", false, true},
    {"train.workers", "1", false, true},
    {"train.smoothing", "0.75", false, true},
    {"train.min_count", "50", false, true},
    {"train.collapse_duplicates", "true", false, true},
    {"train.subsample", "0", false, true},
    {"gravity.distance_kinds", "geographic,embedding", false, false},
    {"gravity.family", "auto", false, false},
    {"gravity.floor_km", "1", false, false},
    {"gravity.flux_mode", "consecutive", false, false},
    {"gravity.population", "yearly_average", false, false},
    {"gravity.scope", "all", false, false},
    {"gravity.bins", "50", false, false},
    {"baselines.alpha", "0.9", false, false},
    {"baselines.tol", "1e-12", false, false},
    {"baselines.sources", "", false, false},
    {"semaxis.n", "5", false, false},
    {"semaxis.sector", "", false, false},
    {"semaxis.positive", "", false, false},
    {"semaxis.negative", "", false, false},
    {"analysis.min_orgs", "25", false, false},
    {"analysis.exclusions", "", false, false},
    {"analysis.linkage", "average", false, false},
    {"analysis.k", "6", false, false},
    {"analysis.r", "0.1,1,10", false, false},
    {"run.check_model_hash", "true", false, false},
};

const KeySpec& spec_for(const std::string& key) {
  for (const auto& s : kKeys) {
    if (s.key == key) return s;
  }
  throw ConfigError("unknown configuration key `" + key + "`");
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

// Strips comments that are not inside quotes.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

// Arrays collapse to comma-joined lists.
std::string normalize_value(std::string raw) {
  raw = trim(raw);
  if (raw.size() >= 2 && raw.front() == '[' && raw.back() == ']') {
    std::string inner = raw.substr(1, raw.size() - 2);
    std::string out;
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = unquote(trim(item));
      if (item.empty()) continue;
      if (!out.empty()) out += ',';
      out += item;
    }
    return out;
  }
  return unquote(raw);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& s : kKeys) values_[std::string(s.key)] = std::string(s.fallback);
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  auto base = std::filesystem::absolute(path).parent_path();
  return parse(in, path.string(), base);
}

RunConfig RunConfig::parse(std::istream& in, const std::string& source,
                           const std::filesystem::path& base_dir) {
  RunConfig config;
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string text = trim(strip_comment(line));
    if (text.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(std::string_view(text).substr(1, text.size() - 2));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected `key = value`");
    const std::string name = trim(std::string_view(text).substr(0, eq));
    const std::string key = section.empty() ? name : section + "." + name;
    try {
      config.assign(key, normalize_value(text.substr(eq + 1)), base_dir);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return config;
}

void RunConfig::assign(const std::string& key, std::string value,
                       const std::filesystem::path& base) {
  const auto& spec = spec_for(key);
  if (spec.is_path && !value.empty()) {
    std::filesystem::path p(value);
    if (p.is_relative()) p = base / p;
    value = p.lexically_normal().string();
  }
  values_[key] = std::move(value);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  assign(key, normalize_value(value), std::filesystem::current_path());
}

void RunConfig::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override `" + std::string(assignment) + "` is not key=value");
  }
  set(trim(assignment.substr(0, eq)), std::string(assignment.substr(eq + 1)));
}

bool RunConfig::has(const std::string& key) const {
  auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

std::string RunConfig::get(const std::string& key) const {
  spec_for(key);
  return values_.at(key);
}

long long RunConfig::get_int(const std::string& key) const {
  const auto v = get(key);
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": expected an integer, got `" + v + "`");
  }
  return out;
}

double RunConfig::get_double(const std::string& key) const {
  const auto v = get(key);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": expected a number, got `" + v + "`");
  }
  return out;
}

bool parse_bool(std::string_view text, const std::string& what) {
  std::string v(text);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(what + ": expected a boolean, got `" + std::string(text) + "`");
}

bool RunConfig::get_bool(const std::string& key) const { return parse_bool(get(key), key); }

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : get_list(key)) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw ConfigError(key + ": `" + item + "` is not a number");
    }
    out.push_back(v);
  }
  return out;
}

std::filesystem::path RunConfig::get_path(const std::string& key) const { return get(key); }

std::filesystem::path RunConfig::require_path(const std::string& key) const {
  if (!has(key)) throw ConfigError("missing required setting `" + key + "`");
  return get(key);
}

std::string RunConfig::hash() const {
  std::string canonical;
  for (const auto& [k, v] : values_) canonical += k + "=" + v + "\n";
  return hex(fnv1a(canonical));
}

std::string RunConfig::model_hash() const {
  std::string canonical;
  for (const auto& [k, v] : values_) {
    if (spec_for(k).in_model_hash) canonical += k + "=" + v + "\n";
  }
  return hex(fnv1a(canonical));
}

TrainConfig RunConfig::train_config() const {
  auto positive = [&](const std::string& key) {
    const auto v = get_int(key);
    if (v < 0) throw ConfigError(key + " must be nonnegative");
    return static_cast<std::size_t>(v);
  };
  TrainConfig t;
  t.dim = positive("train.dim");
  t.window = positive("train.window");
  t.negatives = positive("train.negatives");
  t.initial_rate = get_double("train.initial_rate");
  t.epochs = positive("train.epochs");
  t.workers = positive("train.workers");
  t.smoothing = get_double("train.smoothing");
  t.min_count = positive("train.min_count");
  t.collapse_duplicates = get_bool("train.collapse_duplicates");
  t.subsample = get_double("train.subsample");
  t.seed = static_cast<std::uint64_t>(get_int("seed"));
  t.validate();
  return t;
}

std::filesystem::path RunConfig::output_dir() const {
  return has("paths.output_dir") ? get_path("paths.output_dir") : std::filesystem::path(".");
}

std::filesystem::path RunConfig::model_path() const {
  return has("paths.model") ? get_path("paths.model") : output_dir() / "model.vec";
}

}  // namespace locvec::cli
