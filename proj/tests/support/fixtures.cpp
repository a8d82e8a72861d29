#include "fixtures.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

#include "temario/error.hpp"
#include "temario/rng.hpp"

namespace temario::fixtures {

std::string group_word(int group, int index) {
  if (group < 0 || group > 5 || index < 0 || index >= 256) throw Error("group_word out of range");
  std::string word(4, 'a');
  for (int p = 3; p >= 0; --p) {
    word[static_cast<std::size_t>(p)] = static_cast<char>('a' + 4 * group + index % 4);
    index /= 4;
  }
  return word;
}

PlantedCorpus planted_corpus(std::uint64_t seed, int documents, int topics, int words_per_topic, int min_length,
                             int max_length, double noise) {
  PlantedCorpus corpus;
  for (int t = 0; t < topics; ++t) {
    std::vector<std::string> words;
    for (int w = 0; w < words_per_topic; ++w) words.push_back(group_word(t, w));
    corpus.words.push_back(std::move(words));
  }
  Rng rng(seed);
  const auto total = static_cast<std::uint64_t>(topics) * static_cast<std::uint64_t>(words_per_topic);
  for (int d = 0; d < documents; ++d) {
    const int topic = d % topics;
    const auto length = min_length + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_length - min_length + 1)));
    std::string text;
    for (int i = 0; i < length; ++i) {
      std::string word;
      if (rng.uniform() < noise) {
        const auto w = rng.below(total);
        word = corpus.words[w / words_per_topic][w % words_per_topic];
      } else {
        word = corpus.words[static_cast<std::size_t>(topic)][rng.below(static_cast<std::uint64_t>(words_per_topic))];
      }
      if (i) text += ' ';
      text += word;
    }
    corpus.documents.push_back({"d" + std::to_string(d), std::nullopt, text});
    corpus.topics.push_back(topic);
  }
  return corpus;
}

double top_word_purity(const std::vector<std::string>& top, const PlantedCorpus& corpus) {
  if (top.empty()) return 0.0;
  std::map<std::string, int> owner;
  for (std::size_t t = 0; t < corpus.words.size(); ++t) {
    for (const auto& w : corpus.words[t]) owner[w] = static_cast<int>(t);
  }
  std::map<int, int> votes;
  for (const auto& w : top) ++votes[owner.at(w)];
  int best = 0;
  for (const auto& [_, v] : votes) best = std::max(best, v);
  return static_cast<double>(best) / static_cast<double>(top.size());
}

Blobs two_blobs(std::uint64_t seed, int per_blob, int dim, double separation) {
  Rng rng(seed);
  Blobs blobs;
  blobs.points.resize(2 * per_blob, dim);
  for (int i = 0; i < 2 * per_blob; ++i) {
    const int label = i < per_blob ? 0 : 1;
    for (int j = 0; j < dim; ++j) blobs.points(i, j) = rng.normal();
    blobs.points(i, 0) += label * separation;
    blobs.labels.push_back(label);
  }
  return blobs;
}

CooccurrenceCorpus cooccurrence_corpus(std::uint64_t seed, int groups, int documents_per_group, int context_words,
                                       int length) {
  CooccurrenceCorpus corpus;
  Rng rng(seed);
  std::vector<std::vector<std::string>> vocab(static_cast<std::size_t>(groups));
  for (int g = 0; g < groups; ++g) {
    for (int w = 0; w < context_words + 2; ++w) vocab[static_cast<std::size_t>(g)].push_back(group_word(g, w));
    corpus.pairs.emplace_back(vocab[static_cast<std::size_t>(g)][0], vocab[static_cast<std::size_t>(g)][1]);
  }
  int id = 0;
  for (int d = 0; d < documents_per_group; ++d) {
    for (int g = 0; g < groups; ++g) {
      const auto& words = vocab[static_cast<std::size_t>(g)];
      SurfaceDocument doc{"c" + std::to_string(id++), {}};
      for (int i = 0; i < length; ++i) doc.tokens.push_back(words[rng.below(words.size())]);
      corpus.documents.push_back(std::move(doc));
    }
  }
  return corpus;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<RawDocument>& documents) {
  std::ofstream out(path);
  for (const auto& doc : documents) out << nlohmann::json{{"id", doc.id}, {"text", doc.text}}.dump() << "\n";
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("temario-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace temario::fixtures
