#include "locvec/embedding.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "locvec/error.hpp"

namespace locvec {

namespace {

constexpr double kRateFloor = 1e-4;

// Per-element access to the shared parameter matrices. Multi-worker training
// goes through relaxed atomics so concurrent updates are lossy but defined.
template <bool Shared>
struct Access {
  static double load(const double& x) {
    if constexpr (Shared) {
      return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed);
    } else {
      return x;
    }
  }
  static void add(double& x, double delta) {
    if constexpr (Shared) {
      std::atomic_ref<double> ref(x);
      ref.store(ref.load(std::memory_order_relaxed) + delta, std::memory_order_relaxed);
    } else {
      x += delta;
    }
  }
};

double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct NonFinite {
  std::uint32_t target;
};

// One SGNS step. `scratch` holds d doubles. Throws NonFinite.
template <bool Shared>
double sgns_step(Matrix& in, Matrix& out, std::uint32_t center, std::uint32_t context,
                 std::span<const std::uint32_t> negatives, double rate, std::span<double> scratch) {
  using A = Access<Shared>;
  const std::size_t d = in.cols();
  double* v = in.row(center).data();
  std::fill(scratch.begin(), scratch.end(), 0.0);
  double objective = 0.0;
  for (std::size_t k = 0; k <= negatives.size(); ++k) {
    const bool positive = k == 0;
    const std::uint32_t target = positive ? context : negatives[k - 1];
    double* u = out.row(target).data();
    double f = 0.0;
    for (std::size_t j = 0; j < d; ++j) f += A::load(v[j]) * A::load(u[j]);
    if (!std::isfinite(f)) throw NonFinite{target};
    objective += positive ? log_sigmoid(f) : log_sigmoid(-f);
    const double g = ((positive ? 1.0 : 0.0) - sigmoid(f)) * rate;
    for (std::size_t j = 0; j < d; ++j) scratch[j] += g * A::load(u[j]);
    for (std::size_t j = 0; j < d; ++j) A::add(u[j], g * A::load(v[j]));
  }
  for (std::size_t j = 0; j < d; ++j) A::add(v[j], scratch[j]);
  return objective;
}

[[noreturn]] void throw_non_finite(const Vocabulary& vocab, std::uint32_t center,
                                   std::uint32_t context, std::uint32_t target) {
  throw TrainingError("non-finite score in update for pair (" + vocab.token(center) + ", " +
                      vocab.token(context) + ") at target " + vocab.token(target));
}

void check_index(const EmbeddingModel& model, std::uint32_t i) {
  if (i >= model.vocabulary.size()) {
    throw LookupError("token index " + std::to_string(i) + " outside vocabulary");
  }
}

void check_indices(const EmbeddingModel& model, std::uint32_t center, std::uint32_t context,
                   std::span<const std::uint32_t> negatives) {
  check_index(model, center);
  check_index(model, context);
  for (auto n : negatives) check_index(model, n);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

// Word2vec-style subsampling keep probability.
double keep_probability(std::uint64_t count, std::uint64_t total, double threshold) {
  const double f = static_cast<double>(count) / static_cast<double>(total);
  const double t = threshold;
  return std::min(1.0, (std::sqrt(f / t) + 1.0) * t / f);
}

struct Worker {
  Rng rng;
  std::vector<double> scratch;
  std::vector<std::uint32_t> negatives;
  double objective_sum = 0.0;
  std::uint64_t pairs = 0;
};

template <bool Shared>
void train_range(EmbeddingModel& model, std::span<const EncodedTrajectory> trajectories,
                 const AliasSampler& sampler, const TrainConfig& config, double total_tokens,
                 std::atomic<std::uint64_t>& processed, std::uint64_t corpus_tokens,
                 Worker& worker) {
  for (const auto& trajectory : trajectories) {
    const double progress = static_cast<double>(processed.load(std::memory_order_relaxed));
    const double rate =
        config.initial_rate * std::max(kRateFloor, 1.0 - progress / total_tokens);
    TokenSequence seq = realize(trajectory, worker.rng, config.collapse_duplicates);
    if (config.subsample > 0.0) {
      TokenSequence kept;
      for (auto t : seq) {
        if (uniform01(worker.rng) <
            keep_probability(model.vocabulary.count(t), corpus_tokens, config.subsample)) {
          kept.push_back(t);
        }
      }
      seq = std::move(kept);
    }
    const std::size_t n = seq.size();
    const std::size_t w = config.window;
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t lo = t >= w ? t - w : 0;
      const std::size_t hi = std::min(n - 1, t + w);
      for (std::size_t s = lo; s <= hi; ++s) {
        if (s == t) continue;
        worker.negatives.clear();
        for (std::size_t k = 0; k < config.negatives; ++k) {
          const auto neg = sampler.sample(worker.rng);
          if (neg != seq[s]) worker.negatives.push_back(neg);
        }
        try {
          worker.objective_sum += sgns_step<Shared>(model.in_vectors, model.out_vectors, seq[t],
                                                    seq[s], worker.negatives, rate, worker.scratch);
        } catch (const NonFinite& e) {
          throw_non_finite(model.vocabulary, seq[t], seq[s], e.target);
        }
        ++worker.pairs;
      }
    }
    processed.fetch_add(trajectory.token_count(), std::memory_order_relaxed);
  }
}

void write_real(std::ostream& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  out << buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (dim < 2) throw ConfigError("train.dim must be at least 2");
  if (window < 1) throw ConfigError("train.window must be positive");
  if (negatives < 1) throw ConfigError("train.negatives must be positive");
  if (!(initial_rate > 0.0)) throw ConfigError("train.initial_rate must be positive");
  if (workers < 1) throw ConfigError("train.workers must be positive");
  if (min_count < 1) throw ConfigError("train.min_count must be positive");
  if (!(smoothing >= 0.0)) throw ConfigError("train.smoothing must be nonnegative");
  if (!(subsample >= 0.0)) throw ConfigError("train.subsample must be nonnegative");
}

std::span<const double> EmbeddingModel::in_vector(std::string_view id) const {
  return in_vectors.row(vocabulary.index_of(id));
}

EmbeddingModel init_model(const TrainConfig& config, Vocabulary vocabulary, Rng& rng) {
  config.validate();
  if (vocabulary.empty()) throw InputError("cannot initialize a model over an empty vocabulary");
  EmbeddingModel model;
  const std::size_t n = vocabulary.size();
  const std::size_t d = config.dim;
  model.vocabulary = std::move(vocabulary);
  model.config = config;
  model.in_vectors = Matrix(n, d);
  model.out_vectors = Matrix(n, d);
  const double scale = 1.0 / static_cast<double>(d);
  for (double& x : model.in_vectors.data()) x = (uniform01(rng) - 0.5) * scale;
  return model;
}

std::vector<double> negative_table(const Vocabulary& vocabulary, double exponent) {
  if (!(exponent >= 0.0)) throw ConfigError("negative sampling exponent must be nonnegative");
  std::vector<double> p(vocabulary.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::pow(static_cast<double>(vocabulary.count(static_cast<std::uint32_t>(i))), exponent);
    total += p[i];
  }
  if (!(total > 0.0)) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
    return p;
  }
  for (double& x : p) x /= total;
  return p;
}

AliasSampler::AliasSampler(std::span<const double> probabilities)
    : prob_(probabilities.size()), alias_(probabilities.size()) {
  const std::size_t n = probabilities.size();
  if (n == 0) throw InputError("cannot sample from an empty distribution");
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = probabilities[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (auto i : large) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
  for (auto i : small) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
}

std::uint32_t AliasSampler::sample(Rng& rng) const {
  const auto i = static_cast<std::uint32_t>(uniform_below(rng, prob_.size()));
  return uniform01(rng) < prob_[i] ? i : alias_[i];
}

double sgns_objective(const EmbeddingModel& model, std::uint32_t center, std::uint32_t context,
                      std::span<const std::uint32_t> negatives) {
  check_indices(model, center, context, negatives);
  const auto v = model.in_vectors.row(center);
  double objective = log_sigmoid(dot(model.out_vectors.row(context), v));
  for (auto n : negatives) objective += log_sigmoid(-dot(model.out_vectors.row(n), v));
  return objective;
}

SgnsGradient sgns_gradient(const EmbeddingModel& model, std::uint32_t center,
                           std::uint32_t context, std::span<const std::uint32_t> negatives) {
  check_indices(model, center, context, negatives);
  const std::size_t d = model.dim();
  const auto v = model.in_vectors.row(center);
  SgnsGradient grad;
  grad.center.assign(d, 0.0);
  grad.context.assign(d, 0.0);
  const auto u_ctx = model.out_vectors.row(context);
  const double g_ctx = 1.0 - sigmoid(dot(u_ctx, v));
  for (std::size_t j = 0; j < d; ++j) {
    grad.center[j] += g_ctx * u_ctx[j];
    grad.context[j] = g_ctx * v[j];
  }
  for (auto n : negatives) {
    const auto u = model.out_vectors.row(n);
    const double g = -sigmoid(dot(u, v));
    std::vector<double> gu(d);
    for (std::size_t j = 0; j < d; ++j) {
      grad.center[j] += g * u[j];
      gu[j] = g * v[j];
    }
    grad.negatives.push_back(std::move(gu));
  }
  return grad;
}

double sgns_update(EmbeddingModel& model, std::uint32_t center, std::uint32_t context,
                   std::span<const std::uint32_t> negatives, double rate) {
  if (!(rate > 0.0)) throw ConfigError("update rate must be positive");
  check_indices(model, center, context, negatives);
  std::vector<double> scratch(model.dim());
  try {
    return sgns_step<false>(model.in_vectors, model.out_vectors, center, context, negatives, rate,
                            scratch);
  } catch (const NonFinite& e) {
    throw_non_finite(model.vocabulary, center, context, e.target);
  }
}

EmbeddingModel train(std::span<const Trajectory> trajectories, const TrainConfig& config,
                     TrainStats* stats) {
  return train(trajectories, build_vocabulary(trajectories, config.min_count), config, stats);
}

EmbeddingModel train(std::span<const Trajectory> trajectories, Vocabulary vocabulary,
                     const TrainConfig& config, TrainStats* stats) {
  config.validate();
  Rng rng(config.seed);
  EmbeddingModel model = init_model(config, std::move(vocabulary), rng);

  std::vector<EncodedTrajectory> encoded;
  encoded.reserve(trajectories.size());
  std::uint64_t corpus_tokens = 0;
  for (const auto& t : trajectories) {
    auto e = encode(t, model.vocabulary);
    if (e.groups.empty()) continue;
    corpus_tokens += e.token_count();
    encoded.push_back(std::move(e));
  }
  const double total_tokens =
      std::max(1.0, static_cast<double>(corpus_tokens) * static_cast<double>(config.epochs));
  const auto probabilities = negative_table(model.vocabulary, config.smoothing);
  const AliasSampler sampler(probabilities);

  const std::size_t workers = std::min<std::size_t>(config.workers, std::max<std::size_t>(1, encoded.size()));
  std::vector<Worker> pool(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    // Worker 0 continues the init stream so single-worker runs use one engine.
    pool[w].rng = w == 0 ? rng : Rng(config.seed + 0x9E3779B97F4A7C15ULL * w);
    pool[w].scratch.assign(config.dim, 0.0);
  }

  std::atomic<std::uint64_t> processed{0};
  TrainStats local;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (auto& w : pool) {
      w.objective_sum = 0.0;
      w.pairs = 0;
    }
    if (workers == 1) {
      train_range<false>(model, encoded, sampler, config, total_tokens, processed, corpus_tokens,
                         pool[0]);
    } else {
      std::vector<std::thread> threads;
      std::vector<std::exception_ptr> errors(workers);
      const std::size_t chunk = (encoded.size() + workers - 1) / workers;
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = std::min(encoded.size(), w * chunk);
        const std::size_t end = std::min(encoded.size(), begin + chunk);
        threads.emplace_back([&, w, begin, end] {
          try {
            train_range<true>(model, std::span(encoded).subspan(begin, end - begin), sampler,
                              config, total_tokens, processed, corpus_tokens, pool[w]);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    double sum = 0.0;
    std::uint64_t pairs = 0;
    for (const auto& w : pool) {
      sum += w.objective_sum;
      pairs += w.pairs;
    }
    local.pairs += pairs;
    local.mean_objective_last_epoch = pairs ? sum / static_cast<double>(pairs) : 0.0;
  }
  local.tokens = processed.load();
  if (stats) *stats = local;
  return model;
}

void write_vectors(std::ostream& out, const Vocabulary& vocabulary, const Matrix& vectors) {
  if (vectors.rows() != vocabulary.size()) {
    throw SchemaError("vector matrix rows do not match vocabulary size");
  }
  out << vectors.rows() << ' ' << vectors.cols() << '\n';
  for (std::size_t i = 0; i < vectors.rows(); ++i) {
    const auto& token = vocabulary.token(static_cast<std::uint32_t>(i));
    if (token.find_first_of(" \t\n\r") != std::string::npos) {
      throw SchemaError("token `" + token + "` contains whitespace and cannot be serialized");
    }
    out << token;
    for (double x : vectors.row(i)) {
      out << ' ';
      write_real(out, x);
    }
    out << '\n';
  }
}

std::pair<std::vector<std::string>, Matrix> read_vectors(std::istream& in,
                                                         const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ": empty model file");
  std::istringstream header(line);
  std::size_t rows = 0, cols = 0;
  if (!(header >> rows >> cols)) throw ParseError(source + ":1: expected `<vocab_size> <d>`");
  std::vector<std::string> tokens;
  tokens.reserve(rows);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) {
      throw ParseError(source + ": expected " + std::to_string(rows) + " vector rows, found " +
                       std::to_string(i));
    }
    const std::string where = source + ":" + std::to_string(i + 2);
    const char* p = line.data();
    const char* end = p + line.size();
    const char* sp = std::find(p, end, ' ');
    if (sp == p || sp == end) throw ParseError(where + ": malformed vector row");
    tokens.emplace_back(p, sp);
    p = sp;
    for (std::size_t j = 0; j < cols; ++j) {
      if (p == end || *p != ' ') throw ParseError(where + ": too few components");
      ++p;
      auto [next, ec] = std::from_chars(p, end, m(i, j));
      if (ec != std::errc()) throw ParseError(where + ": invalid real");
      p = next;
    }
    if (p != end && !(p + 1 == end && *p == '\r')) throw ParseError(where + ": too many components");
  }
  return {std::move(tokens), std::move(m)};
}

std::filesystem::path out_vectors_path(const std::filesystem::path& model_path) {
  auto p = model_path;
  p += ".out";
  return p;
}

std::filesystem::path counts_path(const std::filesystem::path& model_path) {
  auto p = model_path;
  p += ".counts";
  return p;
}

void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  auto write_file = [](const std::filesystem::path& p, auto&& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write " + p.string());
    body(out);
    if (!out) throw InputError("write failed for " + p.string());
  };
  write_file(path, [&](std::ostream& o) { write_vectors(o, model.vocabulary, model.in_vectors); });
  write_file(out_vectors_path(path),
             [&](std::ostream& o) { write_vectors(o, model.vocabulary, model.out_vectors); });
  write_file(counts_path(path), [&](std::ostream& o) {
    for (std::size_t i = 0; i < model.vocabulary.size(); ++i) {
      const auto idx = static_cast<std::uint32_t>(i);
      o << model.vocabulary.token(idx) << ' ' << model.vocabulary.count(idx) << '\n';
    }
  });
}

EmbeddingModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model " + path.string());
  auto [tokens, in_vectors] = read_vectors(in, path.string());

  std::vector<std::uint64_t> counts(tokens.size(), 0);
  if (std::ifstream cin(counts_path(path)); cin) {
    std::string token;
    std::uint64_t count = 0;
    std::size_t i = 0;
    while (cin >> token >> count) {
      if (i >= tokens.size() || token != tokens[i]) {
        throw SchemaError(counts_path(path).string() + ": token order differs from model");
      }
      counts[i++] = count;
    }
  }
  EmbeddingModel model;
  model.vocabulary = Vocabulary(tokens, std::move(counts));
  model.config.dim = in_vectors.cols();
  if (std::ifstream oin(out_vectors_path(path), std::ios::binary); oin) {
    auto [out_tokens, out_vectors] = read_vectors(oin, out_vectors_path(path).string());
    if (out_tokens != tokens || out_vectors.cols() != in_vectors.cols()) {
      throw SchemaError(out_vectors_path(path).string() + ": layout differs from in-vectors");
    }
    model.out_vectors = std::move(out_vectors);
  } else {
    model.out_vectors = Matrix(in_vectors.rows(), in_vectors.cols());
  }
  model.in_vectors = std::move(in_vectors);
  for (double x : model.in_vectors.data()) {
    if (!std::isfinite(x)) throw ParseError(path.string() + ": non-finite vector entry");
  }
  return model;
}

}  // namespace locvec
