#include "temario/embed.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "temario/error.hpp"
#include "temario/rng.hpp"
#include "temario/utf8.hpp"

namespace temario {

namespace {

constexpr std::array<char, 8> kMagic = {'T', 'M', 'R', 'E', 'M', 'B', 'D', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T))) throw Error("embedding model: truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

void put_matrix(std::ostream& out, const EmbeddingMatrix& m) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(float)));
  } else {
    for (Eigen::Index i = 0; i < m.size(); ++i) put(out, m.data()[i]);
  }
}

void get_matrix(std::istream& in, EmbeddingMatrix& m) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)))) {
      throw Error("embedding model: truncated matrix");
    }
  } else {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = get<float>(in);
  }
}

// Sampling table for negatives, proportional to frequency^(3/4).
class NegativeSampler {
 public:
  explicit NegativeSampler(const Vocabulary& vocabulary) {
    cumulative_.reserve(vocabulary.size());
    double sum = 0.0;
    for (auto f : vocabulary.frequencies()) {
      sum += std::pow(static_cast<double>(f), 0.75);
      cumulative_.push_back(sum);
    }
  }

  WordId draw(Rng& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<WordId>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace

void EmbedConfig::validate() const {
  if (dim < 1) throw Error("embed: dim must be >= 1");
  if (ngram_min < 1) throw Error("embed: ngram_min must be >= 1");
  if (ngram_min > ngram_max) throw Error("embed: ngram_min must not exceed ngram_max");
  if (bucket_count < 1) throw Error("embed: bucket_count must be >= 1");
  if (window < 1) throw Error("embed: window must be >= 1");
  if (negatives < 1) throw Error("embed: negatives must be >= 1");
  if (epochs < 0) throw Error("embed: epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw Error("embed: learning_rate must be > 0");
  if (min_count < 1) throw Error("embed: min_count must be >= 1");
}

nlohmann::json to_json(const EmbedConfig& c) {
  return {{"dim", c.dim},
          {"ngram_min", c.ngram_min},
          {"ngram_max", c.ngram_max},
          {"bucket_count", c.bucket_count},
          {"window", c.window},
          {"negatives", c.negatives},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"min_count", c.min_count},
          {"seed", c.seed},
          {"normalize_doc_vectors", c.normalize_doc_vectors}};
}

EmbedConfig embed_config_from_json(const nlohmann::json& j, EmbedConfig c) {
  c.dim = j.value("dim", c.dim);
  c.ngram_min = j.value("ngram_min", c.ngram_min);
  c.ngram_max = j.value("ngram_max", c.ngram_max);
  c.bucket_count = j.value("bucket_count", c.bucket_count);
  c.window = j.value("window", c.window);
  c.negatives = j.value("negatives", c.negatives);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.min_count = j.value("min_count", c.min_count);
  c.seed = j.value("seed", c.seed);
  c.normalize_doc_vectors = j.value("normalize_doc_vectors", c.normalize_doc_vectors);
  return c;
}

std::vector<std::string> subword_ngrams(std::string_view word, int nmin, int nmax) {
  std::vector<std::string> chars{"<"};
  for (auto& c : utf8::characters(word)) chars.push_back(std::move(c));
  chars.emplace_back(">");
  const auto len = static_cast<int>(chars.size());

  std::vector<std::string> grams;
  for (int n = std::max(nmin, 1); n <= nmax && n <= len; ++n) {
    if (n == len) continue;
    for (int pos = 0; pos + n <= len; ++pos) {
      std::string gram;
      for (int i = pos; i < pos + n; ++i) gram += chars[static_cast<std::size_t>(i)];
      grams.push_back(std::move(gram));
    }
  }
  return grams;
}

EmbeddingModel::EmbeddingModel(EmbedConfig config, Vocabulary vocabulary, EmbeddingMatrix input,
                               EmbeddingMatrix output)
    : config_(std::move(config)),
      vocabulary_(std::move(vocabulary)),
      input_(std::move(input)),
      output_(std::move(output)) {
  const auto V = static_cast<Eigen::Index>(vocabulary_.size());
  if (input_.rows() != V + config_.bucket_count || input_.cols() != config_.dim ||
      output_.rows() != V || output_.cols() != config_.dim) {
    throw Error("embedding model: matrix shapes do not match config and vocabulary");
  }
  index_rows();
}

void EmbeddingModel::index_rows() {
  rows_.clear();
  rows_.reserve(vocabulary_.size());
  for (std::size_t w = 0; w < vocabulary_.size(); ++w) {
    rows_.push_back(input_rows(vocabulary_.words()[w]));
  }
}

std::vector<std::int32_t> EmbeddingModel::input_rows(std::string_view word) const {
  std::vector<std::int32_t> rows;
  const auto V = static_cast<std::int32_t>(vocabulary_.size());
  if (auto id = vocabulary_.find(word)) rows.push_back(*id);
  for (const auto& gram : subword_ngrams(word, config_.ngram_min, config_.ngram_max)) {
    rows.push_back(V + static_cast<std::int32_t>(ngram_bucket(gram, config_.bucket_count)));
  }
  return rows;
}

Eigen::VectorXf EmbeddingModel::word_vector(std::string_view word) const {
  Eigen::VectorXf v = Eigen::VectorXf::Zero(config_.dim);
  for (auto r : input_rows(word)) v += input_.row(r).transpose();
  return v;
}

Eigen::VectorXf EmbeddingModel::word_vector(WordId id) const {
  Eigen::VectorXf v = Eigen::VectorXf::Zero(config_.dim);
  for (auto r : input_rows(id)) v += input_.row(r).transpose();
  return v;
}

Eigen::VectorXd EmbeddingModel::doc_vector(std::span<const std::string> tokens) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(config_.dim);
  for (const auto& token : tokens) v += word_vector(token).cast<double>();
  return v;
}

Eigen::VectorXd EmbeddingModel::doc_vector(std::span<const WordId> tokens) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(config_.dim);
  for (auto token : tokens) v += word_vector(token).cast<double>();
  return v;
}

void EmbeddingModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write embedding model " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(config_.dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(vocabulary_.size()));
  put<std::uint32_t>(out, config_.bucket_count);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(config_.ngram_min));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(config_.ngram_max));
  put_matrix(out, input_);
  put_matrix(out, output_);
  for (std::size_t w = 0; w < vocabulary_.size(); ++w) {
    const auto& word = vocabulary_.words()[w];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(word.size()));
    out.write(word.data(), static_cast<std::streamsize>(word.size()));
    put<std::int64_t>(out, vocabulary_.frequencies()[w]);
  }
  if (!out) throw Error("failed writing embedding model " + path.string());
}

EmbeddingModel EmbeddingModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embedding model " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error("embedding model: bad magic in " + path.string());
  }
  if (get<std::uint32_t>(in) != kVersion) throw Error("embedding model: unsupported version");
  EmbedConfig config;
  config.dim = static_cast<int>(get<std::uint32_t>(in));
  const auto V = get<std::uint32_t>(in);
  config.bucket_count = get<std::uint32_t>(in);
  config.ngram_min = static_cast<int>(get<std::uint32_t>(in));
  config.ngram_max = static_cast<int>(get<std::uint32_t>(in));
  if (config.dim < 1 || config.bucket_count < 1) throw Error("embedding model: corrupt header");

  EmbeddingMatrix input(static_cast<Eigen::Index>(V) + config.bucket_count, config.dim);
  EmbeddingMatrix output(static_cast<Eigen::Index>(V), config.dim);
  get_matrix(in, input);
  get_matrix(in, output);

  std::vector<std::string> words;
  std::vector<std::int64_t> freqs;
  words.reserve(V);
  freqs.reserve(V);
  for (std::uint32_t w = 0; w < V; ++w) {
    const auto n = get<std::uint32_t>(in);
    std::string word(n, '\0');
    if (!in.read(word.data(), n)) throw Error("embedding model: truncated vocabulary");
    words.push_back(std::move(word));
    freqs.push_back(get<std::int64_t>(in));
  }
  return EmbeddingModel(config, Vocabulary(std::move(words), std::move(freqs)), std::move(input),
                        std::move(output));
}

EmbeddingModel init_embeddings(const Vocabulary& vocabulary, const EmbedConfig& config) {
  config.validate();
  const auto V = static_cast<Eigen::Index>(vocabulary.size());
  EmbeddingMatrix input(V + config.bucket_count, config.dim);
  Rng rng(stream_seed(config.seed, Stream::embed, 0));
  const double bound = 1.0 / config.dim;
  for (Eigen::Index i = 0; i < input.size(); ++i) {
    input.data()[i] = static_cast<float>(rng.uniform(-bound, bound));
  }
  EmbeddingMatrix output = EmbeddingMatrix::Zero(V, config.dim);
  return EmbeddingModel(config, vocabulary, std::move(input), std::move(output));
}

EmbeddingModel train_embeddings(std::span<const TokenizedDocument> docs,
                                const Vocabulary& vocabulary, const EmbedConfig& config) {
  const std::size_t tokens = total_tokens(docs);
  if (tokens == 0 || vocabulary.empty()) throw Error("train_embeddings: empty corpus");
  EmbeddingModel model = init_embeddings(vocabulary, config);
  if (config.epochs == 0) return model;

  EmbeddingMatrix& input = model.input();
  EmbeddingMatrix& output = model.output();
  const NegativeSampler sampler(vocabulary);
  Rng rng(stream_seed(config.seed, Stream::embed, 1));

  const double total = static_cast<double>(tokens) * config.epochs;
  double processed = 0.0;
  Eigen::VectorXf hidden(config.dim);
  Eigen::VectorXf grad(config.dim);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t loss_terms = 0;
    for (const auto& doc : docs) {
      const auto n = static_cast<std::ptrdiff_t>(doc.tokens.size());
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        const float lr = static_cast<float>(config.learning_rate * (1.0 - processed / total));
        processed += 1.0;
        const auto radius = static_cast<std::ptrdiff_t>(1 + rng.below(static_cast<std::uint64_t>(config.window)));
        const auto& rows = model.input_rows(doc.tokens[static_cast<std::size_t>(i)]);

        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - radius);
             j <= std::min(n - 1, i + radius); ++j) {
          if (j == i) continue;
          hidden.setZero();
          for (auto r : rows) hidden += input.row(r).transpose();
          grad.setZero();

          const WordId target = doc.tokens[static_cast<std::size_t>(j)];
          float coefficient = 0.0f;
          loss_sum += sgns_term(hidden, output.row(target).transpose(), true, grad, coefficient);
          output.row(target) -= lr * coefficient * hidden.transpose();
          for (int s = 0; s < config.negatives; ++s) {
            WordId negative = sampler.draw(rng);
            for (int retry = 0; negative == target && vocabulary.size() > 1 && retry < 16; ++retry) {
              negative = sampler.draw(rng);
            }
            if (negative == target) continue;
            loss_sum += sgns_term(hidden, output.row(negative).transpose(), false, grad, coefficient);
            output.row(negative) -= lr * coefficient * hidden.transpose();
          }
          ++loss_terms;
          for (auto r : rows) input.row(r) -= lr * grad.transpose();
        }
      }
    }
    model.epoch_loss.push_back(loss_terms ? loss_sum / static_cast<double>(loss_terms) : 0.0);
  }
  return model;
}

double cosine(const Eigen::Ref<const Eigen::VectorXf>& a, const Eigen::Ref<const Eigen::VectorXf>& b) {
  const double denom = static_cast<double>(a.norm()) * static_cast<double>(b.norm());
  return denom > 0.0 ? static_cast<double>(a.dot(b)) / denom : 0.0;
}

}  // namespace temario
