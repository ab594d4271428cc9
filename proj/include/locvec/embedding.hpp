#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "locvec/corpus.hpp"
#include "locvec/random.hpp"

namespace locvec {

struct TrainConfig {
  std::size_t dim = 300;
  std::size_t window = 1;
  std::size_t negatives = 5;
  double initial_rate = 0.025;
  std::size_t epochs = 5;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  double smoothing = 0.75;
  std::size_t min_count = kDefaultMinCount;
  bool collapse_duplicates = true;
  // Frequent-token subsampling threshold; 0 disables it.
  double subsample = 0.0;

  // Throws ConfigError when a field is out of range.
  void validate() const;
};

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct EmbeddingModel {
  Vocabulary vocabulary;
  Matrix in_vectors;
  Matrix out_vectors;
  TrainConfig config;

  std::size_t dim() const { return in_vectors.cols(); }
  std::span<const double> in_vector(std::uint32_t index) const { return in_vectors.row(index); }
  // Throws LookupError for unknown ids.
  std::span<const double> in_vector(std::string_view id) const;
};

// In-vectors uniform on [-0.5/d, 0.5/d], out-vectors zero.
EmbeddingModel init_model(const TrainConfig& config, Vocabulary vocabulary, Rng& rng);

// (center, context) pairs within `window` positions, truncated at the ends.
template <class Token>
std::vector<std::pair<Token, Token>> context_pairs(std::span<const Token> sequence,
                                                   std::size_t window) {
  std::vector<std::pair<Token, Token>> pairs;
  const std::size_t n = sequence.size();
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= window ? t - window : 0;
    const std::size_t hi = std::min(n - 1, t + window);
    for (std::size_t s = lo; s <= hi; ++s) {
      if (s != t) pairs.emplace_back(sequence[t], sequence[s]);
    }
  }
  return pairs;
}

// P(i) proportional to count_i^exponent; sums to one.
std::vector<double> negative_table(const Vocabulary& vocabulary, double exponent);

// Walker alias sampler over a fixed discrete distribution.
class AliasSampler {
 public:
  AliasSampler() = default;
  explicit AliasSampler(std::span<const double> probabilities);

  std::uint32_t sample(Rng& rng) const;
  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

// Gradient of the negative-sampling objective
//   log sigma(u_ctx . v_c) + sum_n log sigma(-u_n . v_c)
// with respect to the center in-vector and each out-vector involved.
struct SgnsGradient {
  std::vector<double> center;
  std::vector<double> context;
  std::vector<std::vector<double>> negatives;
};

double sgns_objective(const EmbeddingModel& model, std::uint32_t center, std::uint32_t context,
                      std::span<const std::uint32_t> negatives);

SgnsGradient sgns_gradient(const EmbeddingModel& model, std::uint32_t center,
                           std::uint32_t context, std::span<const std::uint32_t> negatives);

// One gradient-ascent step on the objective above. Mutates only the center's
// in-vector and the context/negative out-vectors. Returns the objective
// before the update. Throws TrainingError on non-finite intermediates.
double sgns_update(EmbeddingModel& model, std::uint32_t center, std::uint32_t context,
                   std::span<const std::uint32_t> negatives, double rate);

struct TrainStats {
  std::uint64_t pairs = 0;
  std::uint64_t tokens = 0;
  double mean_objective_last_epoch = 0.0;
};

// Builds the vocabulary with config.min_count, then trains.
EmbeddingModel train(std::span<const Trajectory> trajectories, const TrainConfig& config,
                     TrainStats* stats = nullptr);

// Trains over a fixed vocabulary. Each epoch re-realizes every trajectory
// with fresh within-period shuffles. The learning rate decays linearly from
// initial_rate to initial_rate * 1e-4 over the scheduled token count.
EmbeddingModel train(std::span<const Trajectory> trajectories, Vocabulary vocabulary,
                     const TrainConfig& config, TrainStats* stats = nullptr);

// Text serialization: `<vocab_size> <d>` then `<token> <v_1> ... <v_d>`
// with 17 significant digits.
void write_vectors(std::ostream& out, const Vocabulary& vocabulary, const Matrix& vectors);
std::pair<std::vector<std::string>, Matrix> read_vectors(std::istream& in,
                                                         const std::string& source);

// Writes in-vectors to `path`, out-vectors to `path.out`, and token counts to
// `path.counts`.
void save_model(const EmbeddingModel& model, const std::filesystem::path& path);
// Reads what save_model wrote. Missing `.out` yields zero out-vectors and
// missing `.counts` yields zero counts.
EmbeddingModel load_model(const std::filesystem::path& path);

std::filesystem::path out_vectors_path(const std::filesystem::path& model_path);
std::filesystem::path counts_path(const std::filesystem::path& model_path);

}  // namespace locvec
