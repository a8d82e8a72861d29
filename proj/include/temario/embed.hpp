#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "temario/corpus.hpp"

namespace temario {

struct EmbedConfig {
  int dim = 30;
  int ngram_min = 3;
  int ngram_max = 6;
  std::uint32_t bucket_count = 1u << 20;
  int window = 5;       // context radius upper bound
  int negatives = 5;
  int epochs = 10;
  double learning_rate = 0.05;  // decays linearly to 0 over training
  std::size_t min_count = 1;
  std::uint64_t seed = 0;
  bool normalize_doc_vectors = false;

  void validate() const;
};

nlohmann::json to_json(const EmbedConfig& config);
EmbedConfig embed_config_from_json(const nlohmann::json& j, EmbedConfig defaults = {});

/// Character n-grams (by code point) of "<word>" for lengths nmin..nmax,
/// ordered by length then position. The wrapped word itself is excluded.
std::vector<std::string> subword_ngrams(std::string_view word, int nmin, int nmax);

/// 32-bit FNV-1a over the UTF-8 bytes (offset basis 2166136261, prime 16777619).
constexpr std::uint32_t fnv1a32(std::string_view bytes) {
  std::uint32_t h = 2166136261u;
  for (char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 16777619u;
  }
  return h;
}

constexpr std::uint32_t ngram_bucket(std::string_view ngram, std::uint32_t bucket_count) {
  return fnv1a32(ngram) % bucket_count;
}

inline double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

/// One logistic term of the skip-gram negative-sampling loss,
///   positive: -log σ(u·h)      negative: -log σ(-u·h).
/// Adds dL/dh to `grad_hidden` and returns the loss; dL/du = coefficient * h.
template <typename DerivedH, typename DerivedU, typename DerivedG>
typename DerivedH::Scalar sgns_term(const Eigen::MatrixBase<DerivedH>& hidden,
                                    const Eigen::MatrixBase<DerivedU>& output, bool positive,
                                    const Eigen::MatrixBase<DerivedG>& grad_hidden,
                                    typename DerivedH::Scalar& coefficient) {
  using Scalar = typename DerivedH::Scalar;
  const Scalar score = output.dot(hidden);
  const double s = static_cast<double>(score);
  const double sigma = s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
  coefficient = static_cast<Scalar>(sigma - (positive ? 1.0 : 0.0));
  const_cast<Eigen::MatrixBase<DerivedG>&>(grad_hidden).noalias() += coefficient * output;
  return static_cast<Scalar>(positive ? -log_sigmoid(s) : -log_sigmoid(-s));
}

/// Loss of one (word, context, negatives) step. Row 0 of `outputs` is the
/// context word, the remaining rows are negatives.
template <typename DerivedH, typename DerivedU>
typename DerivedH::Scalar sgns_loss(const Eigen::MatrixBase<DerivedH>& hidden,
                                    const Eigen::MatrixBase<DerivedU>& outputs) {
  using Scalar = typename DerivedH::Scalar;
  Scalar loss = 0;
  for (Eigen::Index r = 0; r < outputs.rows(); ++r) {
    const double s = static_cast<double>(outputs.row(r).dot(hidden.transpose()));
    loss += static_cast<Scalar>(r == 0 ? -log_sigmoid(s) : -log_sigmoid(-s));
  }
  return loss;
}

template <typename Scalar>
struct SgnsGradient {
  Scalar loss = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> hidden;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> outputs;
};

/// Analytic gradient of sgns_loss, assembled from the same sgns_term kernel
/// the trainer uses.
template <typename DerivedH, typename DerivedU>
SgnsGradient<typename DerivedH::Scalar> sgns_gradient(const Eigen::MatrixBase<DerivedH>& hidden,
                                                      const Eigen::MatrixBase<DerivedU>& outputs) {
  using Scalar = typename DerivedH::Scalar;
  SgnsGradient<Scalar> g;
  g.hidden.setZero(hidden.size());
  g.outputs.resize(outputs.rows(), outputs.cols());
  for (Eigen::Index r = 0; r < outputs.rows(); ++r) {
    Scalar coefficient = 0;
    g.loss += sgns_term(hidden, outputs.row(r).transpose(), r == 0, g.hidden, coefficient);
    g.outputs.row(r) = coefficient * hidden.transpose();
  }
  return g;
}

using EmbeddingMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Input rows: V word vectors followed by bucket_count n-gram vectors.
/// Output rows: V context vectors.
class EmbeddingModel {
 public:
  EmbeddingModel() = default;
  EmbeddingModel(EmbedConfig config, Vocabulary vocabulary, EmbeddingMatrix input,
                 EmbeddingMatrix output);

  const EmbedConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }
  const EmbeddingMatrix& input() const { return input_; }
  const EmbeddingMatrix& output() const { return output_; }
  EmbeddingMatrix& input() { return input_; }
  EmbeddingMatrix& output() { return output_; }
  int dim() const { return config_.dim; }

  /// Input rows summed into the vector of in-vocabulary word `id`.
  const std::vector<std::int32_t>& input_rows(WordId id) const {
    return rows_[static_cast<std::size_t>(id)];
  }
  std::vector<std::int32_t> input_rows(std::string_view word) const;

  /// input[word] + Σ input[bucket(g)]; out-of-vocabulary words use the
  /// n-gram buckets alone.
  Eigen::VectorXf word_vector(std::string_view word) const;
  Eigen::VectorXf word_vector(WordId id) const;

  /// Unnormalized sum of word vectors; empty input gives the zero vector.
  Eigen::VectorXd doc_vector(std::span<const std::string> tokens) const;
  Eigen::VectorXd doc_vector(std::span<const WordId> tokens) const;

  /// Mean loss per training epoch.
  std::vector<double> epoch_loss;

  /// Binary model: header, little-endian float32 matrices, vocabulary table.
  void save(const std::filesystem::path& path) const;
  static EmbeddingModel load(const std::filesystem::path& path);

 private:
  void index_rows();

  EmbedConfig config_;
  Vocabulary vocabulary_;
  EmbeddingMatrix input_;
  EmbeddingMatrix output_;
  std::vector<std::vector<std::int32_t>> rows_;
};

/// Input uniform in [-1/dim, 1/dim], output zero.
EmbeddingModel init_embeddings(const Vocabulary& vocabulary, const EmbedConfig& config);

/// Single-threaded skip-gram with negative sampling over subword-enriched
/// input vectors. Deterministic given config.seed.
EmbeddingModel train_embeddings(std::span<const TokenizedDocument> docs,
                                const Vocabulary& vocabulary, const EmbedConfig& config);

double cosine(const Eigen::Ref<const Eigen::VectorXf>& a, const Eigen::Ref<const Eigen::VectorXf>& b);

}  // namespace temario
