#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "temario/corpus.hpp"
#include "temario/lda.hpp"

namespace temario {

/// Boolean sliding-window statistics restricted to a set of query words.
struct WindowStats {
  std::size_t window = 0;
  std::int64_t windows = 0;  // virtual document count
  std::vector<WordId> words; // sorted, unique
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> word_counts;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> pair_counts;  // symmetric

  /// Windows containing w; 0 for words outside the query set.
  std::int64_t count(WordId w) const;
  /// Windows containing both; count(w, w) == count(w).
  std::int64_t count(WordId a, WordId b) const;

 private:
  std::optional<Eigen::Index> slot(WordId w) const;
};

/// Slides a window of `window` tokens with stride 1 over each document;
/// documents no longer than the window form a single window. A word or pair
/// is counted at most once per window.
WindowStats window_stats(std::span<const TokenizedDocument> docs, std::span<const WordId> words,
                         std::size_t window);

struct CoherenceParams {
  std::size_t window = 110;
  double eps = 1e-12;
  double gamma = 1.0;
};

/// log((p12 + eps) / (p1 p2)) / -log(p12 + eps), clamped to [-1, 1].
/// Returns 0 when either word never occurs.
double npmi(WordId w1, WordId w2, const WindowStats& stats, double eps = 1e-12);

/// C_V of one ranked top-word list (one-set segmentation, NPMI context
/// vectors, cosine against the summed vector, arithmetic mean).
double cv_topic(std::span<const WordId> top_words, const WindowStats& stats,
                const CoherenceParams& params = {});

/// Mean cv_topic over all topics, with statistics gathered from `docs`.
double cv_model(const std::vector<std::vector<WordId>>& topics,
                std::span<const TokenizedDocument> docs, const CoherenceParams& params = {});

struct SweepParams {
  std::vector<int> k_values;
  int runs = 64;
  std::size_t top_n = 10;
  std::optional<double> alpha;  // unset: 50/k
  double beta = 0.01;
  int iterations = 500;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency
  CoherenceParams coherence;

  void validate() const;
};

struct SweepResult {
  std::vector<int> k_values;
  std::vector<double> mean_cv;
  std::vector<double> std_cv;  // population standard deviation
  int runs = 0;
};

/// LDA configuration used for run `run_index` at `k`.
LdaConfig sweep_lda_config(const SweepParams& params, int k, int run_index);

/// Fits one LDA model and scores it. Pure function of its arguments.
double sweep_run_score(std::span<const TokenizedDocument> docs, std::size_t vocabulary_size,
                       const SweepParams& params, int k, int run_index);

/// scores[i][r] is the score of run r at k_values[i].
SweepResult aggregate_sweep(const std::vector<int>& k_values,
                            const std::vector<std::vector<double>>& scores);

/// Runs every (k, run) pair on a worker pool and aggregates. The result does
/// not depend on scheduling or thread count.
SweepResult coherence_sweep(std::span<const TokenizedDocument> docs, std::size_t vocabulary_size,
                            const SweepParams& params);

struct ElbowChoice {
  int k = 0;
  bool warning = false;
  std::vector<double> distances;  // signed distance above the chord, per k
};

/// Picks the point farthest above the chord joining the first and last sweep
/// points; ties go to the smaller k. Degenerate curves (monotone decreasing,
/// or no point above the chord) return the first k with `warning` set.
ElbowChoice select_k_elbow(const SweepResult& sweep);

std::string to_csv(const SweepResult& sweep);
nlohmann::json to_json(const SweepResult& sweep);
SweepResult sweep_from_json(const nlohmann::json& j);

}  // namespace temario
