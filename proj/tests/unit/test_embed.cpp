#include <doctest.h>

#include <fstream>

#include "fixtures.hpp"
#include "temario/embed.hpp"
#include "temario/error.hpp"

using namespace temario;

namespace {

EmbedConfig small_config(std::uint64_t seed) {
  EmbedConfig config;
  config.dim = 12;
  config.bucket_count = 4096;
  config.epochs = 3;
  config.seed = seed;
  return config;
}

VocabularyBuild cooccurrence(std::uint64_t seed) {
  return build_vocabulary(fixtures::cooccurrence_corpus(seed).documents, 1);
}

}  // namespace

TEST_CASE("subword n-grams of a wrapped word") {
  CHECK(subword_ngrams("casa", 3, 3) == std::vector<std::string>{"<ca", "cas", "asa", "sa>"});
  CHECK(subword_ngrams("a", 3, 3).empty());
  CHECK(subword_ngrams("ab", 1, 1) == std::vector<std::string>{"<", "a", "b", ">"});
  CHECK(subword_ngrams("ab", 3, 4) == std::vector<std::string>{"<ab", "ab>"});
  CHECK(subword_ngrams("ñu", 2, 2) == std::vector<std::string>{"<ñ", "ñu", "u>"});
}

TEST_CASE("FNV-1a buckets") {
  CHECK(fnv1a32("") == 2166136261u);
  CHECK(fnv1a32("a") == 0xe40c292cu);
  CHECK(fnv1a32("abc") == 0x1a47e90bu);
  CHECK(ngram_bucket("abc", 1u << 20) == 518411u);
  CHECK(ngram_bucket("anything", 1) == 0u);
  CHECK(ngram_bucket("<ca", 4096) == ngram_bucket("<ca", 4096));
}

TEST_CASE("config validation") {
  EmbedConfig config;
  config.validate();
  CHECK(config.dim == 30);
  CHECK(config.bucket_count == (1u << 20));
  auto bad = config;
  bad.ngram_min = 7;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = config;
  bad.negatives = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = config;
  bad.dim = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  const auto round = embed_config_from_json(to_json(small_config(4)));
  CHECK(round.dim == 12);
  CHECK(round.bucket_count == 4096u);
  CHECK(round.seed == 4);
}

TEST_CASE("zero epochs returns the initialization") {
  const auto built = cooccurrence(1);
  auto config = small_config(1);
  config.epochs = 0;
  const auto trained = train_embeddings(built.documents, built.vocabulary, config);
  const auto init = init_embeddings(built.vocabulary, config);
  CHECK(trained.input() == init.input());
  CHECK(trained.output() == init.output());
  CHECK(init.output().isZero());
  CHECK(init.input().cwiseAbs().maxCoeff() <= 1.0f / 12.0f);
}

TEST_CASE("training is deterministic and finite") {
  const auto built = cooccurrence(2);
  const auto a = train_embeddings(built.documents, built.vocabulary, small_config(2));
  const auto b = train_embeddings(built.documents, built.vocabulary, small_config(2));
  CHECK(a.input() == b.input());
  CHECK(a.output() == b.output());
  CHECK(a.input().allFinite());
  CHECK(a.output().allFinite());
  const auto c = train_embeddings(built.documents, built.vocabulary, small_config(3));
  CHECK(c.input() != a.input());
}

TEST_CASE("training rejects an empty corpus") {
  const auto built = cooccurrence(2);
  CHECK_THROWS_AS(train_embeddings(std::vector<TokenizedDocument>{}, built.vocabulary, small_config(1)), Error);
}

TEST_CASE("co-occurring pairs end up closer than pairs across groups") {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto corpus = fixtures::cooccurrence_corpus(seed);
    const auto built = build_vocabulary(corpus.documents, 1);
    auto config = small_config(seed);
    config.epochs = 10;
    const auto model = train_embeddings(built.documents, built.vocabulary, config);
    const auto& [a, b] = corpus.pairs[0];
    const auto& c = corpus.pairs[1].first;
    wins += cosine(model.word_vector(a), model.word_vector(b)) > cosine(model.word_vector(a), model.word_vector(c));
  }
  CHECK(wins == 5);
}

TEST_CASE("epoch loss falls over the first three epochs on most seeds") {
  int decreasing = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto built = cooccurrence(seed);
    const auto model = train_embeddings(built.documents, built.vocabulary, small_config(seed));
    REQUIRE(model.epoch_loss.size() == 3);
    decreasing += model.epoch_loss[1] <= model.epoch_loss[0] && model.epoch_loss[2] <= model.epoch_loss[1];
  }
  CHECK(decreasing >= 3);
}

TEST_CASE("word vectors compose word and n-gram rows") {
  const std::vector<SurfaceDocument> docs = {{"1", {"casa", "casas", "perro"}}, {"2", {"casa", "perro"}}};
  const auto built = build_vocabulary(docs, 1);
  auto config = small_config(5);
  config.epochs = 2;
  const auto model = train_embeddings(built.documents, built.vocabulary, config);
  const auto id = *built.vocabulary.find("casa");

  Eigen::VectorXf expected = model.input().row(id).transpose();
  for (const auto& g : subword_ngrams("casa", config.ngram_min, config.ngram_max)) {
    expected += model.input().row(built.vocabulary.size() + ngram_bucket(g, config.bucket_count)).transpose();
  }
  CHECK((model.word_vector("casa") - expected).norm() <= 1e-5f);
  CHECK(model.word_vector("casa") == model.word_vector(id));

  // Without its word row, the vector is what an out-of-vocabulary lookup sums.
  Eigen::VectorXf buckets = Eigen::VectorXf::Zero(config.dim);
  for (auto row : model.input_rows(id)) {
    if (row != id) buckets += model.input().row(row).transpose();
  }
  CHECK((model.word_vector("casa") - buckets - model.input().row(id).transpose()).norm() <= 1e-5f);

  auto no_grams = config;
  no_grams.ngram_min = 9;
  no_grams.ngram_max = 9;
  const auto bare = train_embeddings(built.documents, built.vocabulary, no_grams);
  CHECK(bare.word_vector("casa") == Eigen::VectorXf(bare.input().row(id).transpose()));
  CHECK(bare.word_vector("gato").isZero());
  CHECK_FALSE(model.word_vector("gato").isZero());
}

TEST_CASE("document vectors are linear sums") {
  const auto built = cooccurrence(6);
  const auto model = train_embeddings(built.documents, built.vocabulary, small_config(6));
  const std::vector<std::string> none;
  CHECK(model.doc_vector(std::span<const std::string>(none)).isZero());
  const std::vector<std::string> one = {built.vocabulary.word(0)};
  const std::vector<std::string> twice = {built.vocabulary.word(0), built.vocabulary.word(0)};
  const Eigen::VectorXd w = model.word_vector(built.vocabulary.word(0)).cast<double>();
  CHECK((model.doc_vector(std::span<const std::string>(one)) - w).norm() <= 1e-6);
  CHECK((model.doc_vector(std::span<const std::string>(twice)) - 2.0 * w).norm() <= 1e-6);

  const std::vector<std::string> ab = {built.vocabulary.word(1), built.vocabulary.word(2), "nuevo"};
  const std::vector<std::string> ba = {"nuevo", built.vocabulary.word(2), built.vocabulary.word(1)};
  std::vector<std::string> joined = ab;
  joined.insert(joined.end(), one.begin(), one.end());
  const auto sab = model.doc_vector(std::span<const std::string>(ab));
  CHECK((sab - model.doc_vector(std::span<const std::string>(ba))).norm() <= 1e-6);
  CHECK((model.doc_vector(std::span<const std::string>(joined)) - sab - w).norm() <= 1e-6);

  const std::vector<WordId> ids = {1, 2};
  const std::vector<std::string> words = {built.vocabulary.word(1), built.vocabulary.word(2)};
  CHECK((model.doc_vector(std::span<const WordId>(ids)) - model.doc_vector(std::span<const std::string>(words))).norm() <= 1e-9);
}

TEST_CASE("model file round trip") {
  const auto built = cooccurrence(7);
  const auto model = train_embeddings(built.documents, built.vocabulary, small_config(7));
  const auto dir = fixtures::temp_dir("embed-io");
  model.save(dir / "m.bin");
  const auto back = EmbeddingModel::load(dir / "m.bin");
  CHECK(back.input() == model.input());
  CHECK(back.output() == model.output());
  CHECK(back.vocabulary().words() == model.vocabulary().words());
  CHECK(back.vocabulary().frequencies() == model.vocabulary().frequencies());
  CHECK(back.config().ngram_min == model.config().ngram_min);
  CHECK(back.word_vector("zzzz") == model.word_vector("zzzz"));

  std::ifstream in(dir / "m.bin", std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  CHECK(std::string(magic, 7) == "TMREMBD");

  std::ofstream(dir / "bad.bin", std::ios::binary) << "not a model";
  CHECK_THROWS_AS(EmbeddingModel::load(dir / "bad.bin"), Error);
  CHECK_THROWS_AS(EmbeddingModel::load(dir / "missing.bin"), Error);
}

TEST_CASE("sgns gradient at a hand-checkable point") {
  Eigen::VectorXd hidden = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd outputs(2, 2);
  outputs << 1, 0, 0, 1;
  const auto g = sgns_gradient(hidden, outputs);
  CHECK(g.loss == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(g.hidden(0) == doctest::Approx(-0.5));
  CHECK(g.hidden(1) == doctest::Approx(0.5));
  CHECK(g.outputs.isZero());
  CHECK(log_sigmoid(0.0) == doctest::Approx(-std::log(2.0)));
  CHECK(std::isfinite(log_sigmoid(-800.0)));
}
