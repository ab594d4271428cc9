#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "locvec/cli.hpp"
#include "locvec/error.hpp"

namespace locvec::cli {

namespace {

struct CommonFlags {
  std::string config;
  std::vector<std::string> sets;
  std::string out, model, metadata, visits;
  std::optional<long long> seed;
  std::optional<long long> workers;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("-c,--config", f.config, "TOML-style configuration file");
  sub->add_option("--set", f.sets, "Override a setting, key=value (repeatable)");
  sub->add_option("-o,--out", f.out, "Output directory (paths.output_dir)");
  sub->add_option("--model", f.model, "Model path (paths.model)");
  sub->add_option("--metadata", f.metadata, "Location metadata CSV (paths.metadata)");
  sub->add_option("--visits", f.visits, "Visits CSV (paths.visits)");
  sub->add_option("--seed", f.seed, "Random seed");
  sub->add_option("--workers", f.workers, "Training threads (train.workers)");
}

RunConfig build_config(const CommonFlags& f) {
  RunConfig config = f.config.empty() ? RunConfig() : RunConfig::from_file(f.config);
  for (const auto& s : f.sets) config.set_assignment(s);
  if (!f.out.empty()) config.set("paths.output_dir", f.out);
  if (!f.model.empty()) config.set("paths.model", f.model);
  if (!f.metadata.empty()) config.set("paths.metadata", f.metadata);
  if (!f.visits.empty()) config.set("paths.visits", f.visits);
  if (f.seed) config.set("seed", std::to_string(*f.seed));
  if (f.workers) config.set("train.workers", std::to_string(*f.workers));
  return config;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"locvec: location embeddings from mobility trajectories"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "locvec 0.1.0");

  using Command = void (*)(const RunConfig&, std::ostream&);
  const std::pair<const char*, std::pair<const char*, Command>> commands[] = {
      {"train", {"Train SGNS location embeddings", cmd_train}},
      {"gravity", {"Fit gravity models of flux against distances", cmd_gravity}},
      {"baselines", {"Network baselines: PPR and centralities", cmd_baselines}},
      {"semaxis", {"Score locations along a semantic axis", cmd_semaxis}},
      {"analyze", {"Cluster country centroids and summarize norms", cmd_analyze}},
      {"export", {"Re-serialize a model and export vectors with metadata", cmd_export}},
  };
  std::map<std::string, CommonFlags> flags;
  std::map<CLI::App*, Command> handlers;
  for (const auto& [name, info] : commands) {
    auto* sub = app.add_subcommand(name, info.first);
    add_common(sub, flags[name]);
    handlers[sub] = info.second;
  }

  std::string synth_kind, synth_out;
  std::uint64_t synth_seed = 1;
  std::vector<std::string> synth_options;
  auto* synth = app.add_subcommand("synth", "Generate a planted benchmark corpus");
  synth->add_option("kind", synth_kind, "community or gravity")->required();
  synth->add_option("-o,--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--option", synth_options, "Generator option, key=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (synth->parsed()) {
      std::map<std::string, std::string> options;
      for (const auto& o : synth_options) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("synth option `" + o + "` is not key=value");
        options[o.substr(0, eq)] = o.substr(eq + 1);
      }
      cmd_synth(synth_kind, synth_out, synth_seed, options, out);
      return kExitOk;
    }
    for (const auto& [sub, handler] : handlers) {
      if (sub->parsed()) {
        handler(build_config(flags[sub->get_name()]), out);
        return kExitOk;
      }
    }
  } catch (const Error& e) {
    err << "locvec: error: " << e.what() << '\n';
    return e.exit_status();
  } catch (const std::filesystem::filesystem_error& e) {
    err << "locvec: error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "locvec: internal error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitInput;
}

}  // namespace locvec::cli
