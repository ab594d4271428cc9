#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "locvec/analysis.hpp"
#include "locvec/baselines.hpp"
#include "locvec/cli.hpp"
#include "locvec/corpus.hpp"
#include "locvec/distances.hpp"
#include "locvec/embedding.hpp"
#include "locvec/error.hpp"
#include "locvec/gravity.hpp"
#include "locvec/semaxis.hpp"

namespace py = pybind11;
using namespace locvec;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw DomainError("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v) {
  Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array matrix_to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

std::vector<Visit> to_visits(const std::vector<std::tuple<std::string, std::string, std::int64_t>>& rows) {
  std::vector<Visit> visits;
  visits.reserve(rows.size());
  for (const auto& [entity, location, period] : rows) visits.push_back({entity, location, period});
  return visits;
}

TrainConfig train_config(std::size_t dim, std::size_t window, std::size_t negatives, double rate,
                         std::size_t epochs, std::uint64_t seed, std::size_t workers,
                         std::size_t min_count, bool collapse) {
  TrainConfig c;
  c.dim = dim;
  c.window = window;
  c.negatives = negatives;
  c.initial_rate = rate;
  c.epochs = epochs;
  c.seed = seed;
  c.workers = workers;
  c.min_count = min_count;
  c.collapse_duplicates = collapse;
  c.validate();
  return c;
}

MobilityNetwork network_from(std::size_t n,
                             const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& edges) {
  std::vector<std::string> nodes;
  for (std::size_t i = 0; i < n; ++i) nodes.push_back(std::to_string(i));
  MobilityNetwork net(std::move(nodes));
  for (const auto& [i, j, w] : edges) {
    if (i >= n || j >= n) throw DomainError("edge endpoint out of range");
    net.add_edge(i, j, w);
  }
  return net;
}

py::dict fit_to_dict(const GravityFit& fit, const FitEvaluation& eval) {
  py::dict d;
  d["family"] = std::string(to_string(fit.family));
  d["ln_c"] = fit.ln_c;
  d["decay"] = fit.decay;
  d["r_squared"] = fit.r_squared;
  d["rmse_log"] = fit.rmse_log;
  d["n_pairs"] = fit.n_pairs;
  d["rmse"] = eval.rmse;
  py::list bins;
  for (const auto& b : eval.binned_means) {
    py::dict e;
    e["lower"] = b.lower;
    e["upper"] = b.upper;
    e["count"] = b.count;
    e["mean_ln_flux"] = b.mean_ln_flux;
    e["mean_ln_predicted"] = b.mean_ln_predicted;
    bins.append(e);
  }
  d["binned_means"] = bins;
  return d;
}

}  // namespace

PYBIND11_MODULE(_locvec, m) {
  m.doc() = "Location embeddings from mobility trajectories";

  auto base = py::register_exception<Error>(m, "LocvecError", PyExc_Exception);
  auto input = py::register_exception<InputError>(m, "InputError", base.ptr());
  auto numeric = py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", input.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", input.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", input.ptr());
  py::register_exception<LookupError>(m, "LookupError", input.ptr());
  py::register_exception<DomainError>(m, "DomainError", input.ptr());
  py::register_exception<MatchingError>(m, "MatchingError", input.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", numeric.ptr());
  py::register_exception<FitError>(m, "FitError", numeric.ptr());

  py::class_<EmbeddingModel>(m, "Model")
      .def_property_readonly("tokens", [](const EmbeddingModel& e) { return e.vocabulary.tokens(); })
      .def_property_readonly("counts", [](const EmbeddingModel& e) { return e.vocabulary.counts(); })
      .def_property_readonly("dim", &EmbeddingModel::dim)
      .def_property_readonly("in_vectors", [](const EmbeddingModel& e) { return matrix_to_array(e.in_vectors); })
      .def_property_readonly("out_vectors", [](const EmbeddingModel& e) { return matrix_to_array(e.out_vectors); })
      .def("vector", [](const EmbeddingModel& e, const std::string& id) {
        auto v = e.in_vector(std::string_view(id));
        return std::vector<double>(v.begin(), v.end());
      }, py::arg("id"))
      .def("__len__", [](const EmbeddingModel& e) { return e.vocabulary.size(); })
      .def("__contains__", [](const EmbeddingModel& e, const std::string& id) { return e.vocabulary.contains(id); })
      .def("save", [](const EmbeddingModel& e, const std::filesystem::path& p) { save_model(e, p); }, py::arg("path"));

  m.def("load_model", &load_model, py::arg("path"));

  m.def("read_visits", [](const std::filesystem::path& p) {
    std::vector<std::tuple<std::string, std::string, std::int64_t>> rows;
    for (const auto& v : parse_visits(p)) rows.emplace_back(v.entity_id, v.location_id, v.period);
    return rows;
  }, py::arg("path"), "Visits as (entity_id, location_id, period) tuples.");

  m.def("train", [](const std::vector<std::tuple<std::string, std::string, std::int64_t>>& rows,
                    std::size_t dim, std::size_t window, std::size_t negatives, double rate,
                    std::size_t epochs, std::uint64_t seed, std::size_t workers, std::size_t min_count,
                    bool collapse) {
    const auto config = train_config(dim, window, negatives, rate, epochs, seed, workers, min_count, collapse);
    const auto visits = to_visits(rows);
    EmbeddingModel model;
    {
      py::gil_scoped_release release;
      const auto mobile = filter_mobile(build_trajectories(visits));
      model = train(mobile, config);
    }
    return model;
  }, py::arg("visits"), py::arg("dim") = 300, py::arg("window") = 1, py::arg("negatives") = 5,
     py::arg("initial_rate") = 0.025, py::arg("epochs") = 5, py::arg("seed") = 1, py::arg("workers") = 1,
     py::arg("min_count") = kDefaultMinCount, py::arg("collapse_duplicates") = true,
     "Trains SGNS embeddings on the mobile trajectories of (entity_id, location_id, period) visits.");

  m.def("cosine_distance", [](const Array& u, const Array& v) {
    return cosine_distance(to_vector(u), to_vector(v));
  }, py::arg("u"), py::arg("v"));
  m.def("great_circle_km", [](double lat1, double lon1, double lat2, double lon2, double floor_km) {
    return great_circle_km(GeoPoint{lat1, lon1}, GeoPoint{lat2, lon2}, floor_km);
  }, py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"), py::arg("floor_km") = kInterCityFloorKm);

  m.def("fit_gravity", [](const Array& flux, const Array& mass_i, const Array& mass_j, const Array& distance,
                          const std::string& family, std::size_t bins) {
    const auto t = to_vector(flux), a = to_vector(mass_i), b = to_vector(mass_j), r = to_vector(distance);
    if (a.size() != t.size() || b.size() != t.size() || r.size() != t.size())
      throw DomainError("fit_gravity: arrays differ in length");
    std::vector<GravitySample> samples;
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (t[k] <= 0) continue;
      samples.push_back({0, 0, t[k], a[k], b[k], r[k]});
    }
    const auto fam = parse_decay_family(family);
    const auto fit = fit_gravity(samples, fam, DistanceKind::GeographicKm);
    return fit_to_dict(fit, evaluate_fit(fit, samples, bins));
  }, py::arg("flux"), py::arg("mass_i"), py::arg("mass_j"), py::arg("distance"),
     py::arg("family") = "power", py::arg("bins") = kDefaultBins,
     "Log-space OLS gravity fit over per-pair arrays; zero-flux pairs are dropped.");

  m.def("ppr", [](std::size_t n, const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& edges,
                  std::uint32_t source, double alpha, double tol) {
    if (source >= n) throw DomainError("ppr: source out of range");
    auto p = ppr(network_from(n, edges), source, alpha, tol).p;
    return to_array(p);
  }, py::arg("n"), py::arg("edges"), py::arg("source"), py::arg("alpha") = kDefaultPprAlpha,
     py::arg("tol") = 1e-12);
  m.def("eigenvector_centrality", [](std::size_t n,
                                     const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& edges,
                                     double tol) {
    auto c = eigenvector_centrality(network_from(n, edges), tol);
    return to_array(c);
  }, py::arg("n"), py::arg("edges"), py::arg("tol") = 1e-12);
  m.def("jsd", [](const Array& p, const Array& q) { return ppr_jsd(to_vector(p), to_vector(q)); },
        py::arg("p"), py::arg("q"));

  m.def("rank_by_axis", [](const EmbeddingModel& model, const std::vector<std::string>& ids,
                           const std::vector<std::string>& positive, const std::vector<std::string>& negative) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& r : rank_by_axis(model, ids, build_axis(model, positive, negative)))
      out.emplace_back(r.id, r.score);
    return out;
  }, py::arg("model"), py::arg("ids"), py::arg("positive"), py::arg("negative"),
     "(id, score) by descending cosine to the pole-difference axis.");
  m.def("spearman", &spearman, py::arg("a"), py::arg("b"));

  py::class_<Dendrogram>(m, "Dendrogram")
      .def_readonly("leaves", &Dendrogram::leaves)
      .def_property_readonly("merges", [](const Dendrogram& d) {
        std::vector<std::tuple<std::size_t, std::size_t, double, std::size_t>> out;
        for (const auto& mg : d.merges) out.emplace_back(mg.left, mg.right, mg.height, mg.size);
        return out;
      })
      .def("cut", [](const Dendrogram& d, std::size_t k) { return cut(d, k); }, py::arg("k"));
  m.def("hierarchical_cluster", [](const std::vector<std::string>& labels,
                                   const std::vector<std::vector<double>>& centroids, const std::string& linkage) {
    return hierarchical_cluster(labels, centroids, parse_linkage(linkage));
  }, py::arg("labels"), py::arg("centroids"), py::arg("linkage") = "average");
  m.def("element_centric_similarity", [](const std::vector<int>& a, const std::vector<int>& b, double alpha) {
    return element_centric_similarity(a, b, alpha);
  }, py::arg("a"), py::arg("b"), py::arg("alpha") = kElementCentricAlpha);
  m.def("gini", [](const Array& v) { return gini(to_vector(v)); }, py::arg("values"));
  m.def("skewness", [](const Array& v) { return skewness(to_vector(v)); }, py::arg("values"));

  m.def("run", [](const std::vector<std::string>& args) {
    std::vector<std::string> argv_storage{"locvec"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) argv.push_back(a.data());
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs a CLI command; returns (exit_code, stdout, stderr).");
}
