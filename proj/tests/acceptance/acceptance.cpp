// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.
// Usage: acceptance <path-to-locvec-binary> [scratch-dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "locvec/analysis.hpp"
#include "locvec/baselines.hpp"
#include "locvec/embedding.hpp"
#include "locvec/gravity.hpp"
#include "locvec/semaxis.hpp"
#include "locvec/synth.hpp"

using namespace locvec;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path g_cli;
fs::path g_scratch;

// 1: analytic SGNS gradients against central differences, d=10, 100 samples.
Outcome sgns_gradient_check() {
  const std::size_t d = 10, v = 20;
  const double h = 1e-5;
  Rng rng(2024);
  double worst = 0.0;
  for (int sample = 0; sample < 100; ++sample) {
    std::vector<std::string> toks;
    for (std::size_t i = 0; i < v; ++i) toks.push_back("t" + std::to_string(i));
    TrainConfig cfg;
    cfg.dim = d;
    auto m = init_model(cfg, Vocabulary(toks, std::vector<std::uint64_t>(v, 1)), rng);
    for (auto& x : m.in_vectors.data()) x = standard_normal(rng) * 0.5;
    for (auto& x : m.out_vectors.data()) x = standard_normal(rng) * 0.5;
    const auto c = static_cast<std::uint32_t>(uniform_below(rng, v));
    const auto ctx = static_cast<std::uint32_t>(uniform_below(rng, v));
    std::vector<std::uint32_t> neg;
    while (neg.size() < 5) {
      const auto n = static_cast<std::uint32_t>(uniform_below(rng, v));
      if (n != ctx && std::find(neg.begin(), neg.end(), n) == neg.end()) neg.push_back(n);
    }
    const auto g = sgns_gradient(m, c, ctx, neg);
    auto check = [&](double& p, double analytic) {
      const double saved = p;
      p = saved + h;
      const double up = sgns_objective(m, c, ctx, neg);
      p = saved - h;
      const double down = sgns_objective(m, c, ctx, neg);
      p = saved;
      const double numeric = (up - down) / (2 * h);
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-3});
      worst = std::max(worst, std::abs(numeric - analytic) / denom);
    };
    for (std::size_t j = 0; j < d; ++j) check(m.in_vectors(c, j), g.center[j]);
    for (std::size_t j = 0; j < d; ++j) check(m.out_vectors(ctx, j), g.context[j]);
    for (std::size_t k = 0; k < neg.size(); ++k)
      for (std::size_t j = 0; j < d; ++j) check(m.out_vectors(neg[k], j), g.negatives[k][j]);
  }
  return {worst < 1e-5, fmt("max relative error %.3e (limit 1e-5)", worst)};
}

// 2: planted gravity recovery, noiseless and Poisson.
Outcome planted_gravity() {
  auto fit_of = [](bool poisson) {
    synth::GravityOptions o;
    o.locations = 200;
    o.alpha = 2.0;
    o.poisson = poisson;
    auto b = synth::planted_gravity(o);
    return fit_gravity(b.flux, b.mass, [&](auto i, auto j) { return b.distance(i, j); },
                       DecayFamily::PowerLaw, DistanceKind::GeographicKm);
  };
  const auto clean = fit_of(false);
  const auto noisy = fit_of(true);
  const bool ok = clean.decay >= 1.98 && clean.decay <= 2.02 && clean.r_squared > 0.999 &&
                  noisy.decay >= 1.9 && noisy.decay <= 2.1 && noisy.r_squared > 0.9;
  return {ok, fmt("noiseless alpha=%.4f R2=%.5f; poisson alpha=%.4f R2=%.4f", clean.decay,
                  clean.r_squared, noisy.decay, noisy.r_squared)};
}

// 3: embedding distance explains planted community flux better than geography.
Outcome functional_distance() {
  synth::CommunityOptions o;
  auto bench = synth::planted_communities(o);
  auto trajs = filter_mobile(build_trajectories(bench.visits));
  TrainConfig cfg;
  cfg.dim = 32;
  cfg.window = 1;
  cfg.epochs = 5;
  cfg.min_count = 5;
  auto model = train(trajs, cfg);
  const auto& vocab = model.vocabulary;
  auto flux = compute_flux(trajs, vocab);
  auto mass = compute_population(trajs, vocab, PopulationSource::UniqueEntities);
  auto geo = fit_gravity(
      flux, mass,
      [&](auto i, auto j) {
        return great_circle_km(bench.metadata.at(vocab.token(i)), bench.metadata.at(vocab.token(j)));
      },
      DecayFamily::PowerLaw, DistanceKind::GeographicKm);
  auto emb = fit_gravity(
      flux, mass, [&](auto i, auto j) { return cosine_distance(model.in_vector(i), model.in_vector(j)); },
      DecayFamily::Exponential, DistanceKind::EmbeddingCosine);
  const double gap = emb.r_squared - geo.r_squared;
  return {gap >= 0.15, fmt("embedding R2=%.4f geographic R2=%.4f gap=%.4f (need >= 0.15)",
                           emb.r_squared, geo.r_squared, gap)};
}

// 4: PPR closed form, stochasticity, path-graph centrality.
Outcome ppr_exactness() {
  MobilityNetwork two({"A", "B"});
  two.add_edge(0, 1, 1.0);
  const auto p = ppr(two, 0, 0.9);
  const double err2 = std::max(std::abs(p.p[0] - 10.0 / 19.0), std::abs(p.p[1] - 9.0 / 19.0));

  Rng rng(4);
  std::vector<std::string> nodes;
  for (int i = 0; i < 60; ++i) nodes.push_back("n" + std::to_string(i));
  MobilityNetwork net(nodes);
  for (std::uint32_t i = 0; i < 60; ++i)
    for (std::uint32_t j = i + 1; j < 60; ++j)
      if (uniform01(rng) < 0.08) net.add_edge(i, j, 1 + std::floor(20 * uniform01(rng)));
  double worst_sum = 0.0;
  for (std::uint32_t s = 0; s < net.size(); ++s) {
    if (net.neighbors(s).empty()) continue;
    const auto q = ppr(net, s);
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(q.p.begin(), q.p.end(), 0.0) - 1.0));
  }

  MobilityNetwork path({"A", "B", "C"});
  path.add_edge(0, 1, 1.0);
  path.add_edge(1, 2, 1.0);
  const auto c = eigenvector_centrality(path);
  const double ratio_err = std::abs(c[1] / c[0] - std::sqrt(2.0));
  const bool ok = err2 < 1e-8 && worst_sum <= 1e-9 && ratio_err <= 1e-6;
  return {ok, fmt("2-node err=%.2e, max |sum-1|=%.2e, path ratio err=%.2e", err2, worst_sum, ratio_err)};
}

// 5: JSD bounds on random distributions.
Outcome jsd_bounds() {
  Rng rng(5);
  const double ln2 = std::log(2.0);
  double lo = 1.0, hi = 0.0, ident = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t n = 2 + uniform_below(rng, 30);
    std::vector<double> p(n), q(n);
    for (auto& x : p) x = uniform01(rng) < 0.2 ? 0.0 : -std::log(1.0 - uniform01(rng));
    for (auto& x : q) x = uniform01(rng) < 0.2 ? 0.0 : -std::log(1.0 - uniform01(rng));
    p[uniform_below(rng, n)] += 1e-6;
    q[uniform_below(rng, n)] += 1e-6;
    const double sp = std::accumulate(p.begin(), p.end(), 0.0);
    const double sq = std::accumulate(q.begin(), q.end(), 0.0);
    for (auto& x : p) x /= sp;
    for (auto& x : q) x /= sq;
    const double d = ppr_jsd(p, q);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
    ident = std::max(ident, std::abs(ppr_jsd(p, p)));
  }
  const bool ok = lo >= 0.0 && hi <= ln2 && ident <= 1e-12;
  return {ok, fmt("range [%.3e, %.6f] (ln2=%.6f), identical max %.1e", lo, hi, ln2, ident)};
}

// 6: SemAxis recovers a planted coordinate-0 trait.
Outcome semaxis_planted() {
  const std::size_t n = 100, d = 16;
  Rng rng(6);
  std::vector<double> offset(d);
  for (auto& x : offset) x = standard_normal(rng);
  std::vector<std::string> ids;
  std::vector<double> trait;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back(fmt("L%03zu", i));
    trait.push_back(standard_normal(rng));
  }
  EmbeddingModel m;
  m.vocabulary = Vocabulary(ids, std::vector<std::uint64_t>(n, 1));
  m.in_vectors = Matrix(n, d);
  m.out_vectors = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 1; j < d; ++j) m.in_vectors(i, j) = offset[j];
    m.in_vectors(i, 0) = trait[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return trait[a] > trait[b]; });
  RankTable planted;
  for (std::size_t r = 0; r < n; ++r) planted[ids[order[r]]] = double(r + 1);
  std::vector<std::string> pos, neg;
  for (std::size_t k = 0; k < 5; ++k) {
    pos.push_back(ids[order[k]]);
    neg.push_back(ids[order[n - 1 - k]]);
  }
  const auto fwd = rank_by_axis(m, ids, build_axis(m, pos, neg));
  const auto rev = rank_by_axis(m, ids, build_axis(m, neg, pos));
  const double rho = spearman(to_rank_table(fwd), planted);
  bool reversed = fwd.size() == rev.size();
  for (std::size_t i = 0; reversed && i < fwd.size(); ++i) {
    reversed = fwd[i].id == rev[n - 1 - i].id && fwd[i].score == -rev[n - 1 - i].score;
  }
  return {rho == 1.0 && reversed, fmt("spearman=%.12f, pole swap reverses exactly: %s", rho, reversed ? "yes" : "no")};
}

// Element-centric score by explicit Neumann series of the cluster-induced
// random walk, independent of the library's solver.
std::vector<double> affinity_oracle(const std::vector<int>& lab, double alpha) {
  const std::size_t n = lab.size();
  std::vector<double> P(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double size = 0;
    for (std::size_t j = 0; j < n; ++j) size += lab[j] == lab[i];
    for (std::size_t j = 0; j < n; ++j) if (lab[j] == lab[i]) P[i * n + j] = 1.0 / size;
  }
  std::vector<double> A(n * n, 0.0), term(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) term[i * n + i] = 1.0 - alpha;
  for (int k = 0; k < 500; ++k) {
    for (std::size_t x = 0; x < n * n; ++x) A[x] += term[x];
    std::vector<double> next(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < n; ++l)
        for (std::size_t j = 0; j < n; ++j) next[i * n + j] += alpha * term[i * n + l] * P[l * n + j];
    term.swap(next);
  }
  return A;
}

double ecs_oracle(const std::vector<double>& A, const std::vector<double>& B, std::size_t n,
                  double alpha) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double l1 = 0;
    for (std::size_t j = 0; j < n; ++j) l1 += std::abs(A[i * n + j] - B[i * n + j]);
    s += 1 - l1 / (2 * alpha);
  }
  return s / double(n);
}

void set_partitions(std::size_t n, std::vector<int>& cur, int used, std::vector<std::vector<int>>& out) {
  if (cur.size() == n) {
    out.push_back(cur);
    return;
  }
  for (int c = 0; c <= used; ++c) {
    cur.push_back(c);
    set_partitions(n, cur, std::max(used, c + 1), out);
    cur.pop_back();
  }
}

// 7: clustering cuts and element-centric similarity.
Outcome clustering() {
  Rng rng(7);
  bool cuts_ok = true;
  for (auto linkage : {Linkage::Average, Linkage::Complete, Linkage::Single}) {
    const std::size_t n = 30;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> centroids;
    for (std::size_t i = 0; i < n; ++i) {
      labels.push_back(fmt("K%02zu", i));
      std::vector<double> v(6);
      for (auto& x : v) x = standard_normal(rng);
      centroids.push_back(v);
    }
    const auto d = hierarchical_cluster(labels, centroids, linkage);
    for (std::size_t k = 1; k <= n; ++k) {
      const auto l = cut(d, k);
      cuts_ok = cuts_ok && std::set<int>(l.begin(), l.end()).size() == k;
    }
  }
  std::vector<std::vector<int>> parts;
  std::vector<int> cur;
  set_partitions(5, cur, 0, parts);
  std::vector<std::vector<double>> oracle;
  for (const auto& p : parts) oracle.push_back(affinity_oracle(p, 0.9));
  double self_err = 0.0, oracle_err = 0.0;
  for (std::size_t x = 0; x < parts.size(); ++x) {
    self_err = std::max(self_err, std::abs(element_centric_similarity(parts[x], parts[x]) - 1.0));
    for (std::size_t y = 0; y < parts.size(); ++y) {
      const double lib = element_centric_similarity(parts[x], parts[y]);
      oracle_err = std::max(oracle_err, std::abs(lib - ecs_oracle(oracle[x], oracle[y], 5, 0.9)));
    }
  }
  for (int t = 0; t < 50; ++t) {
    std::vector<int> c(3 + uniform_below(rng, 40));
    for (auto& x : c) x = static_cast<int>(uniform_below(rng, 6));
    self_err = std::max(self_err, std::abs(element_centric_similarity(c, c) - 1.0));
  }
  const bool ok = cuts_ok && self_err <= 1e-12 && oracle_err <= 1e-10;
  return {ok, fmt("cuts exact: %s; self-similarity err %.1e; %zu partitions of 5, max oracle err %.1e",
                  cuts_ok ? "yes" : "no", self_err, parts.size(), oracle_err)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 8: deterministic training and byte-identical export round-trip.
Outcome determinism() {
  synth::CommunityOptions o;
  o.entities = 5000;
  auto bench = synth::planted_communities(o);
  auto trajs = filter_mobile(build_trajectories(bench.visits));
  TrainConfig cfg;
  cfg.dim = 32;
  cfg.min_count = 5;
  cfg.workers = 1;
  const auto dir = g_scratch / "determinism";
  fs::create_directories(dir);
  save_model(train(trajs, cfg), dir / "run1.vec");
  save_model(train(trajs, cfg), dir / "run2.vec");
  const bool same = slurp(dir / "run1.vec") == slurp(dir / "run2.vec") &&
                    slurp(dir / "run1.vec.out") == slurp(dir / "run2.vec.out");
  save_model(load_model(dir / "run1.vec"), dir / "export1.vec");
  save_model(load_model(dir / "export1.vec"), dir / "export2.vec");
  const bool round = slurp(dir / "export1.vec") == slurp(dir / "export2.vec") &&
                     slurp(dir / "export1.vec") == slurp(dir / "run1.vec");
  return {same && round, fmt("two runs identical: %s; export-import-export identical: %s",
                             same ? "yes" : "no", round ? "yes" : "no")};
}

// 9: the CLI pipeline on the synthetic fixture corpus.
Outcome end_to_end() {
  const auto dir = g_scratch / "e2e";
  fs::remove_all(dir);
  const std::string cli = "\"" + g_cli.string() + "\"";
  const std::string cfg = "\"" + (dir / "config.toml").string() + "\"";
  const std::string quiet = " > \"" + (dir.string() + ".log") + "\" 2>&1";
  const std::vector<std::pair<std::string, std::string>> steps{
      {"synth", cli + " synth community -o \"" + dir.string() + "\" --seed 11"},
      {"train", cli + " train -c " + cfg},
      {"gravity", cli + " gravity -c " + cfg},
      {"semaxis", cli + " semaxis -c " + cfg},
      {"analyze", cli + " analyze -c " + cfg},
  };
  std::string done;
  for (const auto& [name, cmd] : steps) {
    const int status = std::system((cmd + quiet).c_str());
    if (status != 0) return {false, "step `" + name + "` exited with status " + std::to_string(status)};
    done += (done.empty() ? "" : " -> ") + name;
  }
  const bool outputs = fs::exists(dir / "out" / "gravity_report.json") &&
                       fs::exists(dir / "out" / "semaxis_report.json") &&
                       fs::exists(dir / "out" / "analysis_report.json");
  return {outputs, done + (outputs ? ", all reports written" : ", reports missing")};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <locvec-binary> [scratch-dir]\n";
    return 2;
  }
  g_cli = fs::absolute(argv[1]);
  g_scratch = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "locvec_acceptance";
  fs::create_directories(g_scratch);

  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "SGNS gradient check", 5, sgns_gradient_check},
      {2, "Planted gravity recovery", 60, planted_gravity},
      {3, "Functional-distance superiority", 300, functional_distance},
      {4, "PPR exactness", 5, ppr_exactness},
      {5, "JSD bounds", 5, jsd_bounds},
      {6, "SemAxis planted trait", 5, semaxis_planted},
      {7, "Clustering", 30, clustering},
      {8, "Determinism and round-trip", 60, determinism},
      {9, "End-to-end smoke", 300, end_to_end},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << c.id << ": " << c.name << " | "
              << o.detail << " | " << fmt("%.2f s (limit %.0f s)", secs, c.limit_s)
              << (in_time ? "" : " TIME EXCEEDED") << std::endl;
  }
  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAILED")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
