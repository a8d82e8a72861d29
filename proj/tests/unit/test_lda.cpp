#include <doctest.h>

#include <numeric>

#include "fixtures.hpp"
#include "temario/error.hpp"
#include "temario/lda.hpp"
#include "temario/rng.hpp"

using namespace temario;

namespace {

std::vector<TokenizedDocument> random_corpus(std::uint64_t seed, int docs, int vocabulary, int max_length) {
  Rng rng(seed);
  std::vector<TokenizedDocument> out;
  for (int d = 0; d < docs; ++d) {
    TokenizedDocument doc{std::to_string(d), {}};
    const auto len = rng.below(static_cast<std::uint64_t>(max_length) + 1);
    for (std::uint64_t i = 0; i < len; ++i) doc.tokens.push_back(static_cast<WordId>(rng.below(vocabulary)));
    out.push_back(std::move(doc));
  }
  return out;
}

}  // namespace

TEST_CASE("LdaConfig defaults and validation") {
  const auto config = LdaConfig::defaults(10, 3);
  CHECK(config.alpha == doctest::Approx(5.0));
  CHECK(config.beta == 0.01);
  CHECK(config.iterations == 500);
  CHECK(config.seed == 3);
  LdaConfig bad = config;
  bad.k = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = config;
  bad.alpha = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = config;
  bad.beta = -1;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = config;
  bad.iterations = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("single topic is forced") {
  const auto docs = random_corpus(1, 20, 9, 12);
  LdaConfig config = LdaConfig::defaults(1, 1);
  config.iterations = 5;
  const auto model = fit_lda(docs, 9, config);
  std::vector<double> freq(9, 0.0);
  double tokens = 0;
  for (const auto& d : docs) {
    for (auto w : d.tokens) freq[static_cast<std::size_t>(w)] += 1;
    tokens += static_cast<double>(d.tokens.size());
  }
  for (Eigen::Index d = 0; d < model.theta.rows(); ++d) CHECK(model.theta(d, 0) == doctest::Approx(1.0));
  for (int w = 0; w < 9; ++w) {
    CHECK(model.phi(0, w) == doctest::Approx((freq[static_cast<std::size_t>(w)] + 0.01) / (tokens + 9 * 0.01)));
  }
}

TEST_CASE("estimates are normalized and counts consistent") {
  const auto docs = random_corpus(2, 40, 30, 20);
  LdaConfig config = LdaConfig::defaults(4, 2);
  config.iterations = 20;
  const auto model = fit_lda(docs, 30, config);
  for (Eigen::Index t = 0; t < model.phi.rows(); ++t) CHECK(std::abs(model.phi.row(t).sum() - 1.0) <= 1e-9);
  for (Eigen::Index d = 0; d < model.theta.rows(); ++d) CHECK(std::abs(model.theta.row(d).sum() - 1.0) <= 1e-9);
  CHECK(counts_consistent(model, docs));
  for (std::size_t d = 0; d < docs.size(); ++d) {
    CHECK(model.doc_topic_counts.row(static_cast<Eigen::Index>(d)).sum() == static_cast<int>(docs[d].tokens.size()));
  }
  CHECK(model.topic_word_counts.rowwise().sum().cast<int>() == model.topic_totals);
}

TEST_CASE("consistency survives a post hoc topic relabeling") {
  const auto docs = random_corpus(3, 30, 20, 15);
  LdaConfig config = LdaConfig::defaults(3, 3);
  config.iterations = 10;
  auto model = fit_lda(docs, 20, config);
  const std::vector<int> perm = {2, 0, 1};
  CountMatrix tw(model.topic_word_counts.rows(), model.topic_word_counts.cols());
  CountMatrix dt(model.doc_topic_counts.rows(), model.doc_topic_counts.cols());
  Eigen::VectorXi totals(3);
  for (int t = 0; t < 3; ++t) {
    tw.row(perm[static_cast<std::size_t>(t)]) = model.topic_word_counts.row(t);
    dt.col(perm[static_cast<std::size_t>(t)]) = model.doc_topic_counts.col(t);
    totals(perm[static_cast<std::size_t>(t)]) = model.topic_totals(t);
  }
  for (auto& doc : model.token_assignments) {
    for (auto& z : doc) z = perm[static_cast<std::size_t>(z)];
  }
  model.topic_word_counts = tw;
  model.doc_topic_counts = dt;
  model.topic_totals = totals;
  CHECK(counts_consistent(model, docs));
  for (auto& doc : model.token_assignments) {
    if (doc.empty()) continue;
    doc[0] = (doc[0] + 1) % 3;
    break;
  }
  CHECK_FALSE(counts_consistent(model, docs));
}

TEST_CASE("collapsed conditional matches the closed form") {
  Eigen::VectorXi doc_topic(3), topic_word(3), totals(3);
  doc_topic << 2, 0, 5;
  topic_word << 1, 4, 0;
  totals << 10, 20, 5;
  Eigen::VectorXd p(3);
  collapsed_conditional(doc_topic, topic_word, totals, 0.5, 0.1, 7, p);
  for (int t = 0; t < 3; ++t) {
    const double expected = (doc_topic(t) + 0.5) * (topic_word(t) + 0.1) / (totals(t) + 0.7);
    CHECK(p(t) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("conditional is non-negative and normalizable for every token") {
  const auto docs = random_corpus(4, 15, 12, 10);
  LdaConfig config = LdaConfig::defaults(3, 4);
  config.iterations = 3;
  const auto model = fit_lda(docs, 12, config);
  Eigen::VectorXd p(3);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (std::size_t i = 0; i < docs[d].tokens.size(); ++i) {
      const int z = model.token_assignments[d][i];
      const WordId w = docs[d].tokens[i];
      Eigen::VectorXi dt = model.doc_topic_counts.row(static_cast<Eigen::Index>(d)).transpose();
      Eigen::VectorXi tw = model.topic_word_counts.col(w);
      Eigen::VectorXi tt = model.topic_totals;
      --dt(z);
      --tw(z);
      --tt(z);
      collapsed_conditional(dt, tw, tt, config.alpha, config.beta, 12, p);
      CHECK((p.array() >= 0.0).all());
      CHECK(p.sum() > 0.0);
      CHECK(std::isfinite(p.sum()));
    }
  }
}

TEST_CASE("two disjoint groups separate into pure topics") {
  // The default alpha = 50/k leaves this fixture mixed at k=2.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::vector<TokenizedDocument> docs;
    Rng rng(seed);
    for (int d = 0; d < 100; ++d) {
      TokenizedDocument doc{std::to_string(d), {}};
      const int base = (d % 2) * 20;
      for (int i = 0; i < 20; ++i) doc.tokens.push_back(static_cast<WordId>(base + static_cast<int>(rng.below(20))));
      docs.push_back(doc);
    }
    LdaConfig config = LdaConfig::defaults(2, seed);
    config.alpha = 0.1;
    config.iterations = 200;
    const auto model = fit_lda(docs, 40, config);
    for (int t = 0; t < 2; ++t) {
      const auto top = top_words(model, t, 10);
      const bool low = std::all_of(top.begin(), top.end(), [](WordId w) { return w < 20; });
      const bool high = std::all_of(top.begin(), top.end(), [](WordId w) { return w >= 20; });
      CHECK((low || high));
    }
  }
}

TEST_CASE("fit is deterministic given the seed") {
  const auto docs = random_corpus(6, 30, 25, 20);
  LdaConfig config = LdaConfig::defaults(4, 9);
  config.iterations = 15;
  const auto a = fit_lda(docs, 25, config);
  const auto b = fit_lda(docs, 25, config);
  CHECK(a.phi == b.phi);
  CHECK(a.theta == b.theta);
  config.seed = 10;
  CHECK(fit_lda(docs, 25, config).token_assignments != a.token_assignments);
}

TEST_CASE("fit rejects empty input") {
  CHECK_THROWS_AS(fit_lda(std::vector<TokenizedDocument>{}, 3, LdaConfig::defaults(2)), Error);
  CHECK_THROWS_AS(fit_lda(std::vector<TokenizedDocument>{{"a", {}}}, 3, LdaConfig::defaults(2)), Error);
}

TEST_CASE("top_words ranking") {
  Eigen::RowVectorXd phi(3);
  phi << 0.5, 0.3, 0.2;
  CHECK(top_words(phi, 2) == std::vector<WordId>{0, 1});
  CHECK(top_words(phi, 0).empty());
  CHECK(top_words(phi, 10).size() == 3);
  Eigen::RowVectorXd tie = Eigen::RowVectorXd::Zero(8);
  tie(3) = 0.4;
  tie(7) = 0.4;
  tie(1) = 0.2;
  CHECK(top_words(tie, 3) == std::vector<WordId>{3, 7, 1});
}

TEST_CASE("topic model JSON omits count tables") {
  const std::vector<SurfaceDocument> surface = {{"1", {"aa", "bb", "aa"}}, {"2", {"cc", "bb"}}};
  const auto built = build_vocabulary(surface, 1);
  LdaConfig config = LdaConfig::defaults(2, 1);
  config.iterations = 5;
  const auto model = fit_lda(built.documents, built.vocabulary.size(), config);
  const auto j = to_json(model, built.vocabulary, 2);
  CHECK(j["config"]["k"] == 2);
  CHECK_FALSE(j.contains("topic_word_counts"));
  REQUIRE(j["topics"].size() == 2);
  CHECK(j["topics"][0]["top_words"].size() == 2);
  CHECK(j["topics"][0]["phi"].size() == built.vocabulary.size());
}
