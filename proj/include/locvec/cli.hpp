#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "locvec/embedding.hpp"

namespace locvec::cli {

// Flat key/value configuration read from a TOML-style file:
//
//   seed = 42
//   [train]
//   dim = 32
//   [analysis]
//   exclusions = ["US"]
//
// Section headers prefix the keys that follow (`train.dim`). Unknown keys
// are rejected. Path values are resolved against the file's directory.
class RunConfig {
 public:
  RunConfig();

  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig parse(std::istream& in, const std::string& source,
                         const std::filesystem::path& base_dir);

  // Override from the command line; relative paths resolve against the
  // working directory.
  void set(const std::string& key, const std::string& value);
  // `key=value` form.
  void set_assignment(std::string_view assignment);

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;
  long long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::filesystem::path get_path(const std::string& key) const;
  // Throws ConfigError naming the key when it is unset.
  std::filesystem::path require_path(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  // Hex digest of every key.
  std::string hash() const;
  // Hex digest of the keys that determine a trained model.
  std::string model_hash() const;

  TrainConfig train_config() const;
  std::filesystem::path model_path() const;
  std::filesystem::path output_dir() const;

 private:
  void assign(const std::string& key, std::string value, const std::filesystem::path& base);

  std::map<std::string, std::string> values_;
};

// true/1/yes/on or false/0/no/off, case-insensitive. Throws ConfigError.
bool parse_bool(std::string_view text, const std::string& what);

struct ModelManifest {
  std::string config_hash;
  std::string model_hash;
  std::size_t vocab_size = 0;
  std::size_t dim = 0;
};

std::filesystem::path manifest_path(const std::filesystem::path& model_path);

// Each command writes its outputs under the configured output directory and
// throws locvec::Error subclasses on failure.
void cmd_train(const RunConfig& config, std::ostream& log);
void cmd_gravity(const RunConfig& config, std::ostream& log);
void cmd_baselines(const RunConfig& config, std::ostream& log);
void cmd_semaxis(const RunConfig& config, std::ostream& log);
void cmd_analyze(const RunConfig& config, std::ostream& log);
void cmd_export(const RunConfig& config, std::ostream& log);

// kind is `community` or `gravity`. Writes metadata.csv, visits.csv,
// truth.json, and a config.toml pointing at them into out_dir.
void cmd_synth(const std::string& kind, const std::filesystem::path& out_dir,
               std::uint64_t seed, const std::map<std::string, std::string>& options,
               std::ostream& log);

// Full command-line entry point; returns the process exit status.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace locvec::cli
