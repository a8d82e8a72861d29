#include "temario/lda.hpp"

#include <algorithm>
#include <numeric>

#include "temario/error.hpp"
#include "temario/rng.hpp"

namespace temario {

LdaConfig LdaConfig::defaults(int k, std::uint64_t seed) {
  LdaConfig config;
  config.k = k;
  config.alpha = 50.0 / static_cast<double>(std::max(k, 1));
  config.seed = seed;
  return config;
}

void LdaConfig::validate() const {
  if (k < 1) throw Error("LDA: k must be >= 1");
  if (!(alpha > 0.0)) throw Error("LDA: alpha must be > 0");
  if (!(beta > 0.0)) throw Error("LDA: beta must be > 0");
  if (iterations < 1) throw Error("LDA: iterations must be >= 1");
}

void collapsed_conditional(const Eigen::Ref<const Eigen::VectorXi>& doc_topic,
                           const Eigen::Ref<const Eigen::VectorXi>& topic_word,
                           const Eigen::Ref<const Eigen::VectorXi>& topic_totals, double alpha,
                           double beta, std::size_t vocabulary_size, Eigen::Ref<Eigen::VectorXd> out) {
  const double vbeta = static_cast<double>(vocabulary_size) * beta;
  out = (doc_topic.cast<double>().array() + alpha) * (topic_word.cast<double>().array() + beta) /
        (topic_totals.cast<double>().array() + vbeta);
}

TopicModel fit_lda(std::span<const TokenizedDocument> docs, std::size_t vocabulary_size,
                   const LdaConfig& config) {
  config.validate();
  if (docs.empty() || total_tokens(docs) == 0) throw Error("LDA: empty corpus");
  if (vocabulary_size == 0) throw Error("LDA: empty vocabulary");

  const int k = config.k;
  const std::size_t V = vocabulary_size;
  const std::size_t D = docs.size();
  const double alpha = config.alpha;
  const double beta = config.beta;
  const double vbeta = static_cast<double>(V) * beta;

  // Word-major layout keeps the k counts of one word contiguous.
  std::vector<std::int32_t> word_topic(V * static_cast<std::size_t>(k), 0);
  std::vector<std::int32_t> doc_topic(D * static_cast<std::size_t>(k), 0);
  std::vector<std::int32_t> totals(static_cast<std::size_t>(k), 0);
  std::vector<std::vector<std::int32_t>> z(D);

  Rng rng(config.seed);
  for (std::size_t d = 0; d < D; ++d) {
    z[d].resize(docs[d].tokens.size());
    for (std::size_t i = 0; i < docs[d].tokens.size(); ++i) {
      const auto w = static_cast<std::size_t>(docs[d].tokens[i]);
      if (w >= V) throw Error("LDA: token index out of vocabulary range");
      const auto t = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(k)));
      z[d][i] = t;
      ++word_topic[w * k + t];
      ++doc_topic[d * k + t];
      ++totals[t];
    }
  }

  std::vector<double> inv_denominator(static_cast<std::size_t>(k));
  for (int t = 0; t < k; ++t) inv_denominator[t] = 1.0 / (totals[t] + vbeta);
  std::vector<double> cumulative(static_cast<std::size_t>(k));

  for (int sweep = 0; sweep < config.iterations; ++sweep) {
    for (std::size_t d = 0; d < D; ++d) {
      std::int32_t* nd = doc_topic.data() + d * k;
      const auto& tokens = docs[d].tokens;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto w = static_cast<std::size_t>(tokens[i]);
        std::int32_t* nw = word_topic.data() + w * k;
        std::int32_t t = z[d][i];
        --nw[t];
        --nd[t];
        --totals[t];
        inv_denominator[t] = 1.0 / (totals[t] + vbeta);

        double sum = 0.0;
        for (int s = 0; s < k; ++s) {
          sum += (nd[s] + alpha) * (nw[s] + beta) * inv_denominator[s];
          cumulative[s] = sum;
        }
        const double u = rng.uniform() * sum;
        t = 0;
        while (t < k - 1 && cumulative[t] <= u) ++t;

        z[d][i] = t;
        ++nw[t];
        ++nd[t];
        ++totals[t];
        inv_denominator[t] = 1.0 / (totals[t] + vbeta);
      }
    }
  }

  TopicModel model;
  model.config = config;
  model.topic_word_counts.resize(k, static_cast<Eigen::Index>(V));
  for (std::size_t w = 0; w < V; ++w) {
    for (int t = 0; t < k; ++t) model.topic_word_counts(t, static_cast<Eigen::Index>(w)) = word_topic[w * k + t];
  }
  model.doc_topic_counts.resize(static_cast<Eigen::Index>(D), k);
  for (std::size_t d = 0; d < D; ++d) {
    for (int t = 0; t < k; ++t) model.doc_topic_counts(static_cast<Eigen::Index>(d), t) = doc_topic[d * k + t];
  }
  model.topic_totals = Eigen::Map<const Eigen::VectorXi>(totals.data(), k);
  model.token_assignments = std::move(z);

  model.phi = (model.topic_word_counts.cast<double>().array() + beta).colwise() /
              (model.topic_totals.cast<double>().array() + vbeta);
  const Eigen::VectorXd doc_lengths = model.doc_topic_counts.cast<double>().rowwise().sum();
  model.theta = (model.doc_topic_counts.cast<double>().array() + alpha).colwise() /
                (doc_lengths.array() + k * alpha);
  return model;
}

bool counts_consistent(const TopicModel& model, std::span<const TokenizedDocument> docs) {
  const int k = model.k();
  if (model.token_assignments.size() != docs.size()) return false;
  CountMatrix tw = CountMatrix::Zero(k, model.topic_word_counts.cols());
  CountMatrix dt = CountMatrix::Zero(static_cast<Eigen::Index>(docs.size()), k);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& z = model.token_assignments[d];
    if (z.size() != docs[d].tokens.size()) return false;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (z[i] < 0 || z[i] >= k) return false;
      ++tw(z[i], docs[d].tokens[i]);
      ++dt(static_cast<Eigen::Index>(d), z[i]);
    }
  }
  const Eigen::VectorXi totals = tw.rowwise().sum();
  return tw == model.topic_word_counts && dt == model.doc_topic_counts && totals == model.topic_totals;
}

std::vector<WordId> top_words(const Eigen::Ref<const Eigen::RowVectorXd>& weights, std::size_t n) {
  std::vector<WordId> order(static_cast<std::size_t>(weights.size()));
  std::iota(order.begin(), order.end(), 0);
  n = std::min(n, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](WordId a, WordId b) {
                      return weights(a) != weights(b) ? weights(a) > weights(b) : a < b;
                    });
  order.resize(n);
  return order;
}

std::vector<WordId> top_words(const TopicModel& model, int topic, std::size_t n) {
  if (topic < 0 || topic >= model.k()) throw Error("top_words: topic out of range");
  return top_words(model.phi.row(topic), n);
}

nlohmann::json to_json(const TopicModel& model, const Vocabulary& vocabulary, std::size_t n_top) {
  nlohmann::json out;
  out["config"] = {{"k", model.config.k},
                   {"alpha", model.config.alpha},
                   {"beta", model.config.beta},
                   {"iterations", model.config.iterations},
                   {"seed", model.config.seed}};
  out["vocabulary"] = vocabulary.words();
  nlohmann::json topics = nlohmann::json::array();
  for (int t = 0; t < model.k(); ++t) {
    nlohmann::json topic;
    topic["id"] = t;
    nlohmann::json words = nlohmann::json::array();
    for (WordId w : top_words(model, t, n_top)) {
      words.push_back({{"word", vocabulary.word(w)}, {"id", w}, {"weight", model.phi(t, w)}});
    }
    topic["top_words"] = std::move(words);
    topic["phi"] = std::vector<double>(model.phi.row(t).begin(), model.phi.row(t).end());
    topics.push_back(std::move(topic));
  }
  out["topics"] = std::move(topics);
  return out;
}

}  // namespace temario
