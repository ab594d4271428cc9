#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "locvec/analysis.hpp"
#include "locvec/baselines.hpp"
#include "locvec/cli.hpp"
#include "locvec/corpus.hpp"
#include "locvec/csv.hpp"
#include "locvec/distances.hpp"
#include "locvec/embedding.hpp"
#include "locvec/error.hpp"
#include "locvec/gravity.hpp"
#include "locvec/semaxis.hpp"
#include "locvec/synth.hpp"

namespace locvec::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Corpus {
  LocationTable metadata;
  std::vector<Trajectory> all;     // after pruning
  std::vector<Trajectory> mobile;  // subset with at least two locations
};

fs::path require_file(const RunConfig& config, const std::string& key) {
  const auto path = config.require_path(key);
  if (!fs::is_regular_file(path)) throw InputError(key + ": no such file " + path.string());
  return path;
}

Corpus load_corpus(const RunConfig& config, std::ostream& log) {
  Corpus c;
  c.metadata = parse_metadata(require_file(config, "paths.metadata"));
  const auto visits = parse_visits(require_file(config, "paths.visits"));
  for (const auto& v : visits) {
    if (!c.metadata.find(v.location_id)) {
      throw LookupError("visit of entity `" + v.entity_id + "` names unknown location `" +
                        v.location_id + "`");
    }
  }
  c.all = build_trajectories(visits);
  if (config.get_bool("corpus.prune_general")) c.all = prune_general(c.all, c.metadata);
  c.mobile = filter_mobile(c.all);
  log << "corpus: " << c.metadata.size() << " locations, " << visits.size() << " visits, "
      << c.all.size() << " entities, " << c.mobile.size() << " mobile\n";
  return c;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// Finite doubles only; JSON has no NaN.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json report_header(const RunConfig& config, std::string_view command) {
  return {{"command", command}, {"config_hash", config.hash()}, {"model_hash", config.model_hash()}};
}

ModelManifest read_manifest(const fs::path& model) {
  const auto doc = read_json(manifest_path(model));
  ModelManifest m;
  try {
    m.config_hash = doc.at("config_hash").get<std::string>();
    m.model_hash = doc.at("model_hash").get<std::string>();
    m.vocab_size = doc.at("vocab_size").get<std::size_t>();
    m.dim = doc.at("dim").get<std::size_t>();
  } catch (const json::exception& e) {
    throw SchemaError(manifest_path(model).string() + ": " + e.what());
  }
  return m;
}

// Rejects models trained under a different corpus or training setup.
EmbeddingModel load_checked_model(const RunConfig& config, std::ostream& log) {
  const auto path = config.model_path();
  if (!fs::is_regular_file(path)) throw InputError("paths.model: no such file " + path.string());
  if (config.get_bool("run.check_model_hash")) {
    const auto manifest = read_manifest(path);
    if (manifest.model_hash != config.model_hash()) {
      throw ConfigError("model " + path.string() + " was trained with model hash " +
                        manifest.model_hash + " but this configuration has " +
                        config.model_hash());
    }
  }
  auto model = load_model(path);
  log << "model: " << model.vocabulary.size() << " tokens, d=" << model.dim() << "\n";
  return model;
}

bool needs_model(const std::vector<DistanceKind>& kinds) {
  return std::any_of(kinds.begin(), kinds.end(), [](DistanceKind k) {
    return k == DistanceKind::EmbeddingCosine || k == DistanceKind::EmbeddingDot;
  });
}

// Model vocabulary when a model exists, otherwise one rebuilt from the corpus.
Vocabulary vocabulary_for(const RunConfig& config, const Corpus& corpus, bool model_required,
                          std::optional<EmbeddingModel>& model, std::ostream& log) {
  if (model_required || fs::is_regular_file(config.model_path())) {
    model = load_checked_model(config, log);
    return model->vocabulary;
  }
  return build_vocabulary(corpus.mobile, config.train_config().min_count);
}

std::string_view short_name(DistanceKind kind) {
  switch (kind) {
    case DistanceKind::EmbeddingCosine: return "embedding";
    case DistanceKind::EmbeddingDot: return "dot";
    case DistanceKind::GeographicKm: return "geographic";
    case DistanceKind::PprCosine: return "ppr_cosine";
    case DistanceKind::PprJsd: return "ppr_jsd";
  }
  return "unknown";
}

std::vector<std::string> read_id_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  csv::Reader reader(in, path.string());
  std::vector<std::string> ids;
  std::vector<std::string> fields;
  bool first = true;
  while (reader.next(fields)) {
    if (fields.empty() || fields[0].empty()) continue;
    if (first && fields[0] == "id") {
      first = false;
      continue;
    }
    first = false;
    ids.push_back(fields[0]);
  }
  return ids;
}

RankTable restrict(const RankTable& table, const std::set<std::string>& keep) {
  RankTable out;
  for (const auto& [id, rank] : table) {
    if (keep.count(id)) out.emplace(id, rank);
  }
  return out;
}

// Spearman over the ids both tables share; null when undefined.
json shared_spearman(const RankTable& a, const RankTable& b) {
  std::set<std::string> shared;
  for (const auto& [id, rank] : a) {
    if (b.count(id)) shared.insert(id);
  }
  json out = {{"n_shared", shared.size()}, {"rho", nullptr}};
  if (shared.size() < 2) return out;
  try {
    out["rho"] = spearman(restrict(a, shared), restrict(b, shared));
  } catch (const DomainError&) {
  }
  return out;
}

// Rank 1 for the largest value.
RankTable descending_ranks(const std::vector<std::string>& ids, const std::vector<double>& values) {
  std::vector<double> negated(values.size());
  std::transform(values.begin(), values.end(), negated.begin(), [](double v) { return -v; });
  const auto ranks = average_ranks(negated);
  RankTable out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], ranks[i]);
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

fs::path manifest_path(const fs::path& model_path) {
  return fs::path(model_path.string() + ".manifest.json");
}

void cmd_train(const RunConfig& config, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const auto train_config = config.train_config();
  const auto corpus = load_corpus(config, log);
  TrainStats stats;
  const auto model = train(corpus.mobile, train_config, &stats);
  const auto path = config.model_path();
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_model(model, path);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json manifest = report_header(config, "train");
  manifest["vocab_size"] = model.vocabulary.size();
  manifest["dim"] = model.dim();
  manifest["wall_time_s"] = seconds;
  manifest["pairs"] = stats.pairs;
  manifest["tokens"] = stats.tokens;
  manifest["mean_objective_last_epoch"] = number(stats.mean_objective_last_epoch);
  manifest["config"] = config.values();
  write_json(manifest_path(path), manifest);
  log << "train: wrote " << path.string() << " (" << model.vocabulary.size() << " x "
      << model.dim() << ") in " << seconds << " s\n";
}

void cmd_gravity(const RunConfig& config, std::ostream& log) {
  std::vector<DistanceKind> kinds;
  for (const auto& name : config.get_list("gravity.distance_kinds")) {
    kinds.push_back(parse_distance_kind(name));
  }
  if (kinds.empty()) throw ConfigError("gravity.distance_kinds is empty");
  const std::string family_name = config.get("gravity.family");
  const auto mode = parse_flux_mode(config.get("gravity.flux_mode"));
  const auto population = parse_population_source(config.get("gravity.population"));
  const double floor_km = config.get_double("gravity.floor_km");
  if (!(floor_km >= 0.0)) throw ConfigError("gravity.floor_km must be nonnegative");
  const auto bins = static_cast<std::size_t>(std::max<long long>(1, config.get_int("gravity.bins")));
  const std::string scope = config.get("gravity.scope");
  if (scope != "all" && scope != "domestic" && scope != "international") {
    throw ConfigError("gravity.scope must be all, domestic or international");
  }

  const auto corpus = load_corpus(config, log);
  std::optional<EmbeddingModel> model;
  const auto vocab = vocabulary_for(config, corpus, needs_model(kinds), model, log);
  const auto flux = compute_flux(corpus.mobile, vocab, mode);
  const auto mass = compute_population(corpus.all, vocab, population, &corpus.metadata);
  log << "gravity: " << flux.entries().size() << " nonzero pairs, total flux " << flux.total()
      << "\n";

  std::vector<const LocationRecord*> records;
  for (const auto& id : vocab.tokens()) records.push_back(&corpus.metadata.at(id));
  PairFilter keep;
  if (scope == "domestic") {
    keep = [&](std::uint32_t i, std::uint32_t j) { return records[i]->country == records[j]->country; };
  } else if (scope == "international") {
    keep = [&](std::uint32_t i, std::uint32_t j) { return records[i]->country != records[j]->country; };
  }

  std::optional<MobilityNetwork> network;
  std::unordered_map<std::uint32_t, std::vector<double>> ppr_cache;
  auto ppr_of = [&](std::uint32_t i) -> const std::vector<double>& {
    auto it = ppr_cache.find(i);
    if (it != ppr_cache.end()) return it->second;
    if (!network) network = MobilityNetwork::from_flux(flux);
    return ppr_cache.emplace(i, ppr(*network, i, config.get_double("baselines.alpha"),
                                    config.get_double("baselines.tol")).p).first->second;
  };

  const fs::path out_dir = config.output_dir();
  json report = report_header(config, "gravity");
  report["flux_mode"] = to_string(mode);
  report["population"] = to_string(population);
  report["scope"] = scope;
  report["floor_km"] = floor_km;
  report["fits"] = json::array();
  for (const auto kind : kinds) {
    PairDistance distance;
    switch (kind) {
      case DistanceKind::GeographicKm:
        distance = [&](std::uint32_t i, std::uint32_t j) {
          return great_circle_km(*records[i], *records[j], floor_km);
        };
        break;
      case DistanceKind::EmbeddingCosine:
        distance = [&](std::uint32_t i, std::uint32_t j) {
          return cosine_distance(model->in_vector(i), model->in_vector(j));
        };
        break;
      case DistanceKind::EmbeddingDot:
        // Larger dot products mean closer, so the regressor is the negation.
        distance = [&](std::uint32_t i, std::uint32_t j) {
          return -dot_similarity(model->in_vector(i), model->in_vector(j));
        };
        break;
      case DistanceKind::PprCosine:
        distance = [&](std::uint32_t i, std::uint32_t j) {
          return ppr_cosine_distance(ppr_of(i), ppr_of(j));
        };
        break;
      case DistanceKind::PprJsd:
        distance = [&](std::uint32_t i, std::uint32_t j) { return ppr_jsd(ppr_of(i), ppr_of(j)); };
        break;
    }
    const auto family = family_name == "auto" ? default_family(kind) : parse_decay_family(family_name);
    const auto samples = gravity_samples(flux, mass, distance, keep);
    const auto fit = fit_gravity(samples, family, kind);
    const auto eval = evaluate_fit(fit, samples, bins);

    json bins_json = json::array();
    const fs::path bins_path = out_dir / ("gravity_bins_" + std::string(short_name(kind)) + ".csv");
    auto bins_out = open_output(bins_path);
    csv::write_row(bins_out, {"lower", "upper", "count", "mean_ln_flux", "mean_ln_predicted"});
    for (const auto& b : eval.binned_means) {
      csv::write_row(bins_out, {fmt(b.lower), fmt(b.upper), std::to_string(b.count),
                                fmt(b.mean_ln_flux), fmt(b.mean_ln_predicted)});
      bins_json.push_back({{"lower", b.lower},
                           {"upper", b.upper},
                           {"count", b.count},
                           {"mean_ln_flux", b.mean_ln_flux},
                           {"mean_ln_predicted", b.mean_ln_predicted}});
    }
    report["fits"].push_back({{"distance_kind", to_string(kind)},
                              {"family", to_string(family)},
                              {"ln_c", number(fit.ln_c)},
                              {"decay", number(fit.decay)},
                              {"r_squared", number(fit.r_squared)},
                              {"rmse_log", number(fit.rmse_log)},
                              {"n_pairs", fit.n_pairs},
                              {"evaluation",
                               {{"r_squared_loglog", number(eval.r_squared_loglog)},
                                {"rmse", number(eval.rmse)}}},
                              {"binned_means", bins_json},
                              {"bins_csv", bins_path.filename().string()}});
    log << "gravity: " << to_string(kind) << " " << to_string(family) << " decay=" << fit.decay
        << " R2=" << fit.r_squared << " n=" << fit.n_pairs << "\n";
  }

  auto flux_out = open_output(out_dir / "flux.csv");
  write_flux_csv(flux_out, flux);
  write_json(out_dir / "gravity_report.json", report);
}

void cmd_baselines(const RunConfig& config, std::ostream& log) {
  const double alpha = config.get_double("baselines.alpha");
  const double tol = config.get_double("baselines.tol");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("baselines.alpha must lie in (0, 1)");
  if (!(tol > 0.0)) throw ConfigError("baselines.tol must be positive");
  const auto corpus = load_corpus(config, log);
  std::optional<EmbeddingModel> model;
  const auto vocab = vocabulary_for(config, corpus, false, model, log);
  const auto flux = compute_flux(corpus.mobile, vocab,
                                 parse_flux_mode(config.get("gravity.flux_mode")));
  const auto network = MobilityNetwork::from_flux(flux);
  const fs::path out_dir = config.output_dir();

  auto net_out = open_output(out_dir / "network.csv");
  write_network_csv(net_out, network);

  const auto eigen = eigenvector_centrality(network, tol);
  std::vector<double> strength(network.size());
  for (std::uint32_t i = 0; i < network.size(); ++i) strength[i] = degree_strength(network, i);
  auto cent_out = open_output(out_dir / "centrality.csv");
  csv::write_row(cent_out, {"id", "strength", "eigenvector"});
  for (std::uint32_t i = 0; i < network.size(); ++i) {
    csv::write_row(cent_out, {network.nodes()[i], fmt(strength[i]), fmt(eigen[i])});
  }

  const auto sources = config.get_list("baselines.sources");
  json ppr_json = json::array();
  if (!sources.empty()) {
    auto ppr_out = open_output(out_dir / "ppr.csv");
    csv::write_row(ppr_out, {"source", "target", "probability"});
    for (const auto& id : sources) {
      const auto p = ppr(network, network.index_of(id), alpha, tol);
      const double mass = std::accumulate(p.p.begin(), p.p.end(), 0.0);
      for (std::uint32_t j = 0; j < network.size(); ++j) {
        if (p.p[j] > 0.0) csv::write_row(ppr_out, {id, network.nodes()[j], fmt(p.p[j])});
      }
      ppr_json.push_back({{"source", id}, {"total_mass", mass}});
    }
  }

  std::size_t edges = 0;
  for (std::uint32_t i = 0; i < network.size(); ++i) edges += network.neighbors(i).size();
  const auto comps = network.components();
  json report = report_header(config, "baselines");
  report["alpha"] = alpha;
  report["tol"] = tol;
  report["nodes"] = network.size();
  report["edges"] = edges / 2;
  report["components"] = comps.empty() ? 0 : *std::max_element(comps.begin(), comps.end()) + 1;
  report["ppr_sources"] = ppr_json;
  if (config.has("paths.ranking")) {
    const auto reference = read_ranking_csv(require_file(config, "paths.ranking"));
    report["spearman"] = {
        {"strength", shared_spearman(descending_ranks(network.nodes(), strength), reference)},
        {"eigenvector", shared_spearman(descending_ranks(network.nodes(), eigen), reference)}};
  }
  write_json(out_dir / "baselines_report.json", report);
  log << "baselines: " << network.size() << " nodes, " << edges / 2 << " edges\n";
}

void cmd_semaxis(const RunConfig& config, std::ostream& log) {
  const auto metadata = parse_metadata(require_file(config, "paths.metadata"));
  const auto model = load_checked_model(config, log);
  std::optional<RankTable> reference;
  if (config.has("paths.ranking")) reference = read_ranking_csv(require_file(config, "paths.ranking"));

  std::vector<std::string> positive, negative;
  std::string pole_source;
  if (config.has("semaxis.positive") || config.has("semaxis.negative")) {
    positive = config.get_list("semaxis.positive");
    negative = config.get_list("semaxis.negative");
    pole_source = "inline";
  } else if (config.has("paths.positive_poles") || config.has("paths.negative_poles")) {
    positive = read_id_list(require_file(config, "paths.positive_poles"));
    negative = read_id_list(require_file(config, "paths.negative_poles"));
    pole_source = "files";
  } else if (reference) {
    const auto n = config.get_int("semaxis.n");
    if (n < 1) throw ConfigError("semaxis.n must be at least 1");
    // Only in-vocabulary ids can serve as poles.
    RankTable usable;
    for (const auto& [id, rank] : *reference) {
      if (model.vocabulary.contains(id)) usable.emplace(id, rank);
    }
    const auto poles = match_poles(usable, metadata, static_cast<std::size_t>(n));
    positive = poles.top;
    negative = poles.bottom;
    pole_source = "ranking";
  } else {
    throw ConfigError("semaxis needs poles: semaxis.positive/negative, pole files, or paths.ranking");
  }
  const auto axis = build_axis(model, positive, negative);

  std::optional<Sector> sector;
  if (config.has("semaxis.sector")) sector = parse_sector(config.get("semaxis.sector"));
  std::vector<std::string> ids;
  for (const auto& id : model.vocabulary.tokens()) {
    const auto* rec = metadata.find(id);
    if (sector && (!rec || rec->sector != *sector)) continue;
    ids.push_back(id);
  }
  if (ids.empty()) throw InputError("semaxis: no locations match the sector filter");
  const auto ranking = rank_by_axis(model, ids, axis);
  const auto ranks = to_rank_table(ranking);

  const fs::path out_dir = config.output_dir();
  auto out = open_output(out_dir / "semaxis_ranking.csv");
  csv::write_row(out, {"id", "score", "rank"});
  json scores = json::array();
  for (const auto& item : ranking) {
    csv::write_row(out, {item.id, fmt(item.score), fmt(ranks.at(item.id))});
    scores.push_back({{"id", item.id}, {"score", item.score}, {"rank", ranks.at(item.id)}});
  }
  json report = report_header(config, "semaxis");
  report["pole_source"] = pole_source;
  report["positive"] = positive;
  report["negative"] = negative;
  report["scores"] = scores;
  if (reference) {
    report["spearman"] = shared_spearman(ranks, *reference);
    log << "semaxis: spearman vs reference " << report["spearman"]["rho"].dump() << "\n";
  }
  write_json(out_dir / "semaxis_report.json", report);
  log << "semaxis: scored " << ranking.size() << " locations\n";
}

void cmd_analyze(const RunConfig& config, std::ostream& log) {
  const auto metadata = parse_metadata(require_file(config, "paths.metadata"));
  const auto model = load_checked_model(config, log);
  const auto min_orgs = config.get_int("analysis.min_orgs");
  if (min_orgs < 1) throw ConfigError("analysis.min_orgs must be at least 1");
  const auto exclusions_list = config.get_list("analysis.exclusions");
  const std::set<std::string> exclusions(exclusions_list.begin(), exclusions_list.end());
  const auto linkage = parse_linkage(config.get("analysis.linkage"));
  const auto k = config.get_int("analysis.k");
  const auto rs = config.get_double_list("analysis.r");

  const auto countries =
      select_countries(model.vocabulary, metadata, static_cast<std::size_t>(min_orgs), exclusions);
  if (countries.size() < 2) {
    throw InputError("analysis: " + std::to_string(countries.size()) +
                     " countries pass min_orgs; need at least 2");
  }
  if (k < 1 || static_cast<std::size_t>(k) > countries.size()) {
    throw ConfigError("analysis.k must lie in [1, " + std::to_string(countries.size()) + "]");
  }
  std::vector<std::vector<double>> centroids;
  for (const auto& c : countries) centroids.push_back(country_centroid(model, metadata, c));
  const auto tree = hierarchical_cluster(countries, centroids, linkage);
  const auto labels = cut(tree, static_cast<std::size_t>(k));

  const fs::path out_dir = config.output_dir();
  {
    auto out = open_output(out_dir / "dendrogram.json");
    write_dendrogram_json(out, tree);
  }
  {
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < countries.size(); ++i) position[countries[i]] = i;
    auto out = open_output(out_dir / "similarity_matrix.csv");
    std::vector<std::string> header{"country"};
    header.insert(header.end(), tree.leaves.begin(), tree.leaves.end());
    csv::write_row(out, header);
    for (const auto& a : tree.leaves) {
      std::vector<std::string> row{a};
      for (const auto& b : tree.leaves) {
        row.push_back(fmt(cosine_similarity(centroids[position[a]], centroids[position[b]])));
      }
      csv::write_row(out, row);
    }
  }
  {
    auto out = open_output(out_dir / "clusters.csv");
    csv::write_row(out, {"country", "cluster"});
    for (std::size_t i = 0; i < tree.leaves.size(); ++i) {
      csv::write_row(out, {tree.leaves[i], std::to_string(labels[i])});
    }
  }

  json norms_json = json::array();
  {
    auto out = open_output(out_dir / "norms.csv");
    auto points = open_output(out_dir / "norm_points.csv");
    csv::write_row(out, {"country", "mean_norm", "n_orgs", "skewness", "gini"});
    csv::write_row(points, {"country", "id", "count", "norm"});
    for (const auto& c : countries) {
      const auto s = norm_summary(model, metadata, c);
      csv::write_row(out, {c, fmt(s.mean_norm), std::to_string(s.org_ids.size()), fmt(s.skewness),
                           fmt(s.gini)});
      for (std::size_t i = 0; i < s.org_ids.size(); ++i) {
        csv::write_row(points, {c, s.org_ids[i], std::to_string(model.vocabulary.count(s.org_ids[i])),
                                fmt(s.org_norms[i])});
      }
      norms_json.push_back({{"country", c},
                            {"mean_norm", s.mean_norm},
                            {"n_orgs", s.org_ids.size()},
                            {"skewness", s.skewness},
                            {"gini", s.gini}});
    }
  }

  // Label sets for element-centric scoring, keyed by name, aligned with leaves.
  std::map<std::string, std::map<std::string, std::string>> label_sets;
  {
    std::map<std::string, std::map<std::string, std::size_t>> region_votes;
    for (const auto& r : metadata.records()) {
      if (model.vocabulary.contains(r.id) && !r.region.empty()) ++region_votes[r.country][r.region];
    }
    for (const auto& c : countries) {
      const auto& votes = region_votes[c];
      if (votes.empty()) continue;
      auto best = std::max_element(votes.begin(), votes.end(), [](const auto& a, const auto& b) {
        return a.second < b.second;
      });
      label_sets["region"][c] = best->first;
    }
  }
  if (config.has("paths.labels")) {
    const auto path = require_file(config, "paths.labels");
    std::ifstream in(path);
    csv::Reader reader(in, path.string());
    std::vector<std::string> header, fields;
    if (!reader.next(header) || header.size() < 2 || header[0] != "country") {
      throw SchemaError(path.string() + ": expected header `country,<label>,...`");
    }
    while (reader.next(fields)) {
      if (fields.size() != header.size()) {
        throw ParseError(path.string() + ":" + std::to_string(reader.line()) + ": expected " +
                         std::to_string(header.size()) + " fields");
      }
      for (std::size_t col = 1; col < header.size(); ++col) label_sets[header[col]][fields[0]] = fields[col];
    }
  }

  json scores = json::array();
  for (const auto& [name, by_country] : label_sets) {
    std::vector<int> flat;
    std::map<std::string, int> ids;
    bool complete = true;
    for (const auto& leaf : tree.leaves) {
      auto it = by_country.find(leaf);
      if (it == by_country.end()) {
        complete = false;
        break;
      }
      flat.push_back(ids.emplace(it->second, static_cast<int>(ids.size())).first->second);
    }
    if (!complete) {
      log << "analyze: label set `" << name << "` does not cover every country; skipped\n";
      continue;
    }
    json by_r = json::array();
    for (double r : rs) {
      by_r.push_back({{"r", r}, {"similarity", element_centric_similarity(tree, flat, r)}});
    }
    scores.push_back({{"labels", name},
                      {"n_labels", ids.size()},
                      {"flat_cut_similarity", element_centric_similarity(labels, flat)},
                      {"hierarchical", by_r}});
  }

  json report = report_header(config, "analyze");
  report["countries"] = tree.leaves;
  report["linkage"] = to_string(linkage);
  report["k"] = k;
  report["clusters"] = labels;
  report["element_centric"] = scores;
  report["norms"] = norms_json;
  write_json(out_dir / "analysis_report.json", report);
  log << "analyze: " << countries.size() << " countries in " << k << " clusters\n";
}

void cmd_export(const RunConfig& config, std::ostream& log) {
  const auto model = load_checked_model(config, log);
  const fs::path out_dir = config.output_dir();
  const fs::path exported = out_dir / "export" / config.model_path().filename();
  fs::create_directories(exported.parent_path());
  save_model(model, exported);

  std::optional<LocationTable> metadata;
  if (config.has("paths.metadata")) metadata = parse_metadata(require_file(config, "paths.metadata"));
  auto out = open_output(out_dir / "vectors.csv");
  std::vector<std::string> header{"id", "name", "country", "region", "sector", "count", "norm"};
  for (std::size_t j = 0; j < model.dim(); ++j) header.push_back("v" + std::to_string(j));
  csv::write_row(out, header);
  for (std::uint32_t i = 0; i < model.vocabulary.size(); ++i) {
    const auto& id = model.vocabulary.token(i);
    const LocationRecord* rec = metadata ? metadata->find(id) : nullptr;
    std::vector<std::string> row{id,
                                 rec ? rec->name : "",
                                 rec ? rec->country : "",
                                 rec ? rec->region : "",
                                 rec ? std::string(to_string(rec->sector)) : "",
                                 std::to_string(model.vocabulary.count(i)),
                                 fmt(l2_norm(model.in_vector(i)))};
    for (double v : model.in_vector(i)) row.push_back(fmt(v));
    csv::write_row(out, row);
  }
  json report = report_header(config, "export");
  report["model"] = exported.string();
  report["vocab_size"] = model.vocabulary.size();
  report["dim"] = model.dim();
  write_json(out_dir / "export_report.json", report);
  log << "export: wrote " << exported.string() << " and vectors.csv\n";
}

namespace {

template <class T>
void apply_option(std::map<std::string, std::string>& rest, const std::string& key, T& field) {
  auto it = rest.find(key);
  if (it == rest.end()) return;
  if constexpr (std::is_same_v<T, bool>) {
    field = parse_bool(it->second, "synth option " + key);
  } else {
    std::istringstream in(it->second);
    T value{};
    in >> value;
    if (in.fail() || !in.eof()) throw ConfigError("synth option " + key + ": invalid value `" + it->second + "`");
    field = value;
  }
  rest.erase(it);
}

void reject_leftovers(const std::map<std::string, std::string>& rest) {
  if (!rest.empty()) throw ConfigError("unknown synth option `" + rest.begin()->first + "`");
}

void write_table_files(const fs::path& dir, const LocationTable& metadata,
                       std::span<const Visit> visits, bool with_visits) {
  auto meta = open_output(dir / "metadata.csv");
  write_metadata(meta, metadata);
  if (with_visits) {
    auto vis = open_output(dir / "visits.csv");
    write_visits(vis, visits);
  }
}

}  // namespace

void cmd_synth(const std::string& kind, const fs::path& out_dir, std::uint64_t seed,
               const std::map<std::string, std::string>& options, std::ostream& log) {
  auto rest = options;
  fs::create_directories(out_dir);
  if (kind == "community") {
    synth::CommunityOptions o;
    o.seed = seed;
    apply_option(rest, "communities", o.communities);
    apply_option(rest, "per_community", o.per_community);
    apply_option(rest, "ratio", o.ratio);
    apply_option(rest, "entities", o.entities);
    apply_option(rest, "trajectory_length", o.trajectory_length);
    std::size_t dim = 32, epochs = 5, min_count = 5, k = 3;
    apply_option(rest, "dim", dim);
    apply_option(rest, "epochs", epochs);
    apply_option(rest, "min_count", min_count);
    apply_option(rest, "k", k);
    reject_leftovers(rest);
    const auto bench = synth::planted_communities(o);
    write_table_files(out_dir, bench.metadata, bench.visits, true);
    {
      auto out = open_output(out_dir / "ranking.csv");
      csv::write_row(out, {"id", "rank"});
      for (std::size_t i = 0; i < bench.location_ids.size(); ++i) {
        csv::write_row(out, {bench.location_ids[i], fmt(bench.planted_rank[i])});
      }
    }
    {
      auto out = open_output(out_dir / "labels.csv");
      csv::write_row(out, {"country", "parity"});
      for (std::size_t c = 0; c < o.communities; ++c) {
        csv::write_row(out, {"K" + std::to_string(c), c % 2 ? "odd" : "even"});
      }
    }
    json truth = {{"kind", kind},
                  {"seed", seed},
                  {"communities", o.communities},
                  {"per_community", o.per_community},
                  {"ratio", o.ratio},
                  {"entities", o.entities},
                  {"trajectory_length", o.trajectory_length},
                  {"location_ids", bench.location_ids},
                  {"community", bench.community},
                  {"planted_rank", bench.planted_rank}};
    write_json(out_dir / "truth.json", truth);
    auto cfg = open_output(out_dir / "config.toml");
    cfg << "# Planted community benchmark\n"
        << "seed = " << seed << "\n\n"
        << "[paths]\n"
        << "metadata = \"metadata.csv\"\n"
        << "visits = \"visits.csv\"\n"
        << "output_dir = \"out\"\n"
        << "model = \"out/model.vec\"\n"
        << "ranking = \"ranking.csv\"\n"
        << "labels = \"labels.csv\"\n\n"
        << "[train]\n"
        << "dim = " << dim << "\n"
        << "window = 1\n"
        << "epochs = " << epochs << "\n"
        << "min_count = " << min_count << "\n\n"
        << "[gravity]\n"
        << "distance_kinds = [\"geographic\", \"embedding\"]\n"
        << "population = \"unique\"\n\n"
        << "[semaxis]\n"
        << "n = 5\n\n"
        << "[analysis]\n"
        << "min_orgs = " << std::min<std::size_t>(25, o.per_community) << "\n"
        << "k = " << std::min(k, o.communities) << "\n";
    log << "synth: " << bench.location_ids.size() << " locations, " << bench.visits.size()
        << " visits in " << out_dir.string() << "\n";
    return;
  }
  if (kind == "gravity") {
    synth::GravityOptions o;
    o.seed = seed;
    apply_option(rest, "locations", o.locations);
    apply_option(rest, "alpha", o.alpha);
    apply_option(rest, "log_mass_mean", o.log_mass_mean);
    apply_option(rest, "log_mass_sd", o.log_mass_sd);
    apply_option(rest, "min_expected_flux", o.min_expected_flux);
    apply_option(rest, "poisson", o.poisson);
    apply_option(rest, "floor_km", o.floor_km);
    std::uint64_t max_visits = 2000000;
    apply_option(rest, "max_visits", max_visits);
    reject_leftovers(rest);
    const auto bench = synth::planted_gravity(o);
    // One entity per unit of flux makes the visit table huge for wide mass
    // ranges, so it is only written below a cap.
    const bool with_visits = 2 * bench.flux.total() <= max_visits;
    write_table_files(out_dir, bench.metadata, with_visits ? bench.visits() : std::vector<Visit>{},
                      with_visits);
    {
      auto out = open_output(out_dir / "flux.csv");
      write_flux_csv(out, bench.flux);
    }
    json truth = {{"kind", kind},
                  {"seed", seed},
                  {"locations", o.locations},
                  {"alpha", bench.alpha},
                  {"ln_c", bench.ln_c},
                  {"poisson", o.poisson},
                  {"floor_km", bench.floor_km},
                  {"total_flux", bench.flux.total()},
                  {"visits_written", with_visits}};
    write_json(out_dir / "truth.json", truth);
    auto cfg = open_output(out_dir / "config.toml");
    cfg << "# Planted gravity benchmark\n"
        << "seed = " << seed << "\n\n"
        << "[paths]\n"
        << "metadata = \"metadata.csv\"\n"
        << "visits = \"visits.csv\"\n"
        << "output_dir = \"out\"\n\n"
        << "[train]\n"
        << "min_count = 1\n\n"
        << "[corpus]\n"
        << "prune_general = false\n\n"
        << "[gravity]\n"
        << "distance_kinds = [\"geographic\"]\n"
        << "family = \"power\"\n"
        << "population = \"external\"\n"
        << "floor_km = " << fmt(o.floor_km) << "\n";
    if (!with_visits) {
      log << "synth: total flux " << bench.flux.total() << " exceeds max_visits/2; visits.csv not written\n";
    }
    log << "synth: " << o.locations << " locations, total flux " << bench.flux.total() << " in "
        << out_dir.string() << "\n";
    return;
  }
  throw ConfigError("unknown synth kind `" + kind + "` (expected community or gravity)");
}

}  // namespace locvec::cli
