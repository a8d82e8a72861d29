#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "temario/corpus.hpp"

namespace temario {

struct LdaConfig {
  int k = 10;
  double alpha = 5.0;   // symmetric doc-topic prior
  double beta = 0.01;   // symmetric topic-word prior
  int iterations = 500; // Gibbs sweeps
  std::uint64_t seed = 0;

  /// alpha = 50/k, beta = 0.01, 500 sweeps.
  static LdaConfig defaults(int k, std::uint64_t seed = 0);

  void validate() const;
};

using CountMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic>;

struct TopicModel {
  LdaConfig config;
  CountMatrix topic_word_counts;  // k x V
  CountMatrix doc_topic_counts;   // D x k
  Eigen::VectorXi topic_totals;   // k
  std::vector<std::vector<std::int32_t>> token_assignments;
  Eigen::MatrixXd phi;    // k x V, rows sum to 1
  Eigen::MatrixXd theta;  // D x k, rows sum to 1

  int k() const { return config.k; }
  Eigen::Index vocabulary_size() const { return phi.cols(); }
};

/// Collapsed Gibbs sampler. Topic estimates come from the final state:
///   phi[t][w]   = (n_tw + beta) / (n_t + V beta)
///   theta[d][t] = (n_dt + alpha) / (n_d + k alpha)
/// Documents without tokens keep a uniform theta row.
TopicModel fit_lda(std::span<const TokenizedDocument> docs, std::size_t vocabulary_size,
                   const LdaConfig& config);

/// Unnormalized collapsed conditional for one token, with the token's own
/// assignment already removed from the counts:
///   p(z = t) ∝ (n_dt + alpha) (n_tw + beta) / (n_t + V beta)
void collapsed_conditional(const Eigen::Ref<const Eigen::VectorXi>& doc_topic,
                           const Eigen::Ref<const Eigen::VectorXi>& topic_word,
                           const Eigen::Ref<const Eigen::VectorXi>& topic_totals, double alpha,
                           double beta, std::size_t vocabulary_size, Eigen::Ref<Eigen::VectorXd> out);

/// Recomputes every count table from token_assignments and compares.
bool counts_consistent(const TopicModel& model, std::span<const TokenizedDocument> docs);

/// Indices of the n largest entries, ties by ascending index. n is clamped.
std::vector<WordId> top_words(const Eigen::Ref<const Eigen::RowVectorXd>& weights, std::size_t n);
std::vector<WordId> top_words(const TopicModel& model, int topic, std::size_t n);

/// Config, phi and the top words of every topic; count tables are omitted.
nlohmann::json to_json(const TopicModel& model, const Vocabulary& vocabulary, std::size_t n_top);

}  // namespace temario
