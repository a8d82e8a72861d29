#include "temario/coherence.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "temario/error.hpp"
#include "temario/rng.hpp"

namespace temario {

std::optional<Eigen::Index> WindowStats::slot(WordId w) const {
  auto it = std::lower_bound(words.begin(), words.end(), w);
  if (it == words.end() || *it != w) return std::nullopt;
  return static_cast<Eigen::Index>(it - words.begin());
}

std::int64_t WindowStats::count(WordId w) const {
  auto s = slot(w);
  return s ? word_counts(*s) : 0;
}

std::int64_t WindowStats::count(WordId a, WordId b) const {
  auto sa = slot(a);
  auto sb = slot(b);
  return (sa && sb) ? pair_counts(*sa, *sb) : 0;
}

WindowStats window_stats(std::span<const TokenizedDocument> docs, std::span<const WordId> words,
                         std::size_t window) {
  if (window < 1) throw Error("window_stats: window must be >= 1");
  WindowStats stats;
  stats.window = window;
  stats.words.assign(words.begin(), words.end());
  std::sort(stats.words.begin(), stats.words.end());
  stats.words.erase(std::unique(stats.words.begin(), stats.words.end()), stats.words.end());
  const auto m = static_cast<Eigen::Index>(stats.words.size());
  stats.word_counts.setZero(m);
  stats.pair_counts.setZero(m, m);

  std::vector<std::int32_t> in_window(static_cast<std::size_t>(m), 0);
  std::vector<Eigen::Index> present;
  present.reserve(static_cast<std::size_t>(m));

  auto local = [&](WordId w) -> Eigen::Index {
    auto it = std::lower_bound(stats.words.begin(), stats.words.end(), w);
    return (it != stats.words.end() && *it == w) ? it - stats.words.begin() : -1;
  };
  auto record = [&] {
    ++stats.windows;
    present.clear();
    for (Eigen::Index s = 0; s < m; ++s) {
      if (in_window[static_cast<std::size_t>(s)] > 0) present.push_back(s);
    }
    for (std::size_t a = 0; a < present.size(); ++a) {
      ++stats.word_counts(present[a]);
      for (std::size_t b = a; b < present.size(); ++b) {
        ++stats.pair_counts(present[a], present[b]);
      }
    }
  };

  for (const auto& doc : docs) {
    std::vector<Eigen::Index> slots(doc.tokens.size());
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) slots[i] = local(doc.tokens[i]);
    std::fill(in_window.begin(), in_window.end(), 0);

    const std::size_t first = std::min(window, slots.size());
    for (std::size_t i = 0; i < first; ++i) {
      if (slots[i] >= 0) ++in_window[static_cast<std::size_t>(slots[i])];
    }
    record();
    for (std::size_t end = window; end < slots.size(); ++end) {
      if (slots[end - window] >= 0) --in_window[static_cast<std::size_t>(slots[end - window])];
      if (slots[end] >= 0) ++in_window[static_cast<std::size_t>(slots[end])];
      record();
    }
  }

  // Mirror the upper triangle.
  stats.pair_counts.triangularView<Eigen::StrictlyLower>() = stats.pair_counts.transpose();
  return stats;
}

double npmi(WordId w1, WordId w2, const WindowStats& stats, double eps) {
  if (stats.windows == 0) return 0.0;
  const double n = static_cast<double>(stats.windows);
  const double p1 = static_cast<double>(stats.count(w1)) / n;
  const double p2 = static_cast<double>(stats.count(w2)) / n;
  if (p1 == 0.0 || p2 == 0.0) return 0.0;
  const double p12 = static_cast<double>(stats.count(w1, w2)) / n;
  const double value = std::log((p12 + eps) / (p1 * p2)) / -std::log(p12 + eps);
  return std::clamp(value, -1.0, 1.0);
}

double cv_topic(std::span<const WordId> top_words, const WindowStats& stats,
                const CoherenceParams& params) {
  const auto n = static_cast<Eigen::Index>(top_words.size());
  if (n < 2) throw Error("cv_topic: need at least two top words");

  Eigen::MatrixXd context(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = npmi(top_words[i], top_words[j], stats, params.eps);
      context(i, j) = params.gamma == 1.0 ? v : std::copysign(std::pow(std::abs(v), params.gamma), v);
    }
  }
  const Eigen::RowVectorXd total = context.colwise().sum();
  const double total_norm = total.norm();

  double score = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double denom = context.row(i).norm() * total_norm;
    if (denom > 0.0) score += context.row(i).dot(total) / denom;
  }
  return score / static_cast<double>(n);
}

double cv_model(const std::vector<std::vector<WordId>>& topics,
                std::span<const TokenizedDocument> docs, const CoherenceParams& params) {
  if (topics.empty()) throw Error("cv_model: no topics");
  std::vector<WordId> all;
  for (const auto& topic : topics) all.insert(all.end(), topic.begin(), topic.end());
  const WindowStats stats = window_stats(docs, all, params.window);
  double sum = 0.0;
  for (const auto& topic : topics) sum += cv_topic(topic, stats, params);
  return sum / static_cast<double>(topics.size());
}

void SweepParams::validate() const {
  if (k_values.empty()) throw Error("sweep: empty k range");
  for (int k : k_values) {
    if (k < 1) throw Error("sweep: k values must be >= 1");
  }
  if (runs < 1) throw Error("sweep: runs must be >= 1");
  if (top_n < 2) throw Error("sweep: top_n must be >= 2");
  if (iterations < 1) throw Error("sweep: iterations must be >= 1");
  if (coherence.window < 1) throw Error("sweep: window must be >= 1");
}

LdaConfig sweep_lda_config(const SweepParams& params, int k, int run_index) {
  LdaConfig config = LdaConfig::defaults(
      k, stream_seed(params.seed, Stream::lda, static_cast<std::uint64_t>(k),
                     static_cast<std::uint64_t>(run_index)));
  if (params.alpha) config.alpha = *params.alpha;
  config.beta = params.beta;
  config.iterations = params.iterations;
  return config;
}

double sweep_run_score(std::span<const TokenizedDocument> docs, std::size_t vocabulary_size,
                       const SweepParams& params, int k, int run_index) {
  const TopicModel model = fit_lda(docs, vocabulary_size, sweep_lda_config(params, k, run_index));
  std::vector<std::vector<WordId>> topics;
  topics.reserve(static_cast<std::size_t>(k));
  for (int t = 0; t < k; ++t) topics.push_back(top_words(model, t, params.top_n));
  return cv_model(topics, docs, params.coherence);
}

SweepResult aggregate_sweep(const std::vector<int>& k_values,
                            const std::vector<std::vector<double>>& scores) {
  if (scores.size() != k_values.size()) throw Error("aggregate_sweep: size mismatch");
  SweepResult result;
  result.k_values = k_values;
  result.runs = scores.empty() ? 0 : static_cast<int>(scores.front().size());
  for (const auto& runs : scores) {
    if (static_cast<int>(runs.size()) != result.runs) throw Error("aggregate_sweep: ragged runs");
    const Eigen::Map<const Eigen::VectorXd> v(runs.data(), static_cast<Eigen::Index>(runs.size()));
    const double mean = v.mean();
    result.mean_cv.push_back(mean);
    result.std_cv.push_back(std::sqrt((v.array() - mean).square().mean()));
  }
  return result;
}

SweepResult coherence_sweep(std::span<const TokenizedDocument> docs, std::size_t vocabulary_size,
                            const SweepParams& params) {
  params.validate();
  const std::size_t nk = params.k_values.size();
  const auto runs = static_cast<std::size_t>(params.runs);
  std::vector<std::vector<double>> scores(nk, std::vector<double>(runs, 0.0));

  const std::size_t tasks = nk * runs;
  unsigned threads = params.threads ? params.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tasks)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t task = next++; task < tasks; task = next++) {
      const std::size_t ki = task / runs;
      const std::size_t run = task % runs;
      try {
        scores[ki][run] = sweep_run_score(docs, vocabulary_size, params, params.k_values[ki],
                                          static_cast<int>(run));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return aggregate_sweep(params.k_values, scores);
}

ElbowChoice select_k_elbow(const SweepResult& sweep) {
  const std::size_t n = sweep.k_values.size();
  if (n < 3 || sweep.mean_cv.size() != n) throw Error("select_k_elbow: need at least 3 sweep points");

  ElbowChoice choice;
  choice.k = sweep.k_values.front();
  choice.distances.assign(n, 0.0);

  const double x0 = sweep.k_values.front(), y0 = sweep.mean_cv.front();
  const double x1 = sweep.k_values.back(), y1 = sweep.mean_cv.back();
  const double dx = x1 - x0, dy = y1 - y0;
  const double length = std::hypot(dx, dy);
  if (length == 0.0) {
    choice.warning = true;
    return choice;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double px = sweep.k_values[i] - x0;
    const double py = sweep.mean_cv[i] - y0;
    choice.distances[i] = (dx * py - dy * px) / length;
  }

  bool decreasing = true;
  for (std::size_t i = 1; i < n; ++i) decreasing = decreasing && sweep.mean_cv[i] <= sweep.mean_cv[i - 1];

  // Points within rounding noise of the chord count as on it.
  const double tolerance = 1e-12 * std::max(1.0, length);
  std::size_t best = 0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (choice.distances[i] > choice.distances[best] + tolerance) best = i;
  }
  if (decreasing || choice.distances[best] <= tolerance) {
    choice.warning = true;
    return choice;
  }
  choice.k = sweep.k_values[best];
  return choice;
}

std::string to_csv(const SweepResult& sweep) {
  std::ostringstream out;
  out.precision(17);
  out << "k,mean_cv,std_cv,runs\n";
  for (std::size_t i = 0; i < sweep.k_values.size(); ++i) {
    out << sweep.k_values[i] << ',' << sweep.mean_cv[i] << ',' << sweep.std_cv[i] << ','
        << sweep.runs << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const SweepResult& sweep) {
  return {{"k", sweep.k_values}, {"mean_cv", sweep.mean_cv}, {"std_cv", sweep.std_cv},
          {"runs", sweep.runs}};
}

SweepResult sweep_from_json(const nlohmann::json& j) {
  SweepResult sweep;
  sweep.k_values = j.at("k").get<std::vector<int>>();
  sweep.mean_cv = j.at("mean_cv").get<std::vector<double>>();
  sweep.std_cv = j.at("std_cv").get<std::vector<double>>();
  sweep.runs = j.at("runs").get<int>();
  return sweep;
}

}  // namespace temario
