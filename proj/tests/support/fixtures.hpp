#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "temario/corpus.hpp"
#include "temario/types.hpp"

namespace temario::fixtures {

/// Word `index` of group `group`, spelled only with that group's four letters
/// so that no character n-gram is shared between groups.
std::string group_word(int group, int index);

struct PlantedCorpus {
  std::vector<RawDocument> documents;
  std::vector<int> topics;                      // planted topic per document
  std::vector<std::vector<std::string>> words;  // vocabulary per topic
};

/// Single-topic documents over disjoint topic vocabularies; each token is
/// replaced by a uniform draw from the whole vocabulary with `noise` odds.
PlantedCorpus planted_corpus(std::uint64_t seed, int documents = 2000, int topics = 6, int words_per_topic = 100,
                             int min_length = 15, int max_length = 30, double noise = 0.05);

/// Fraction of a top-word list that belongs to its majority topic vocabulary.
double top_word_purity(const std::vector<std::string>& top, const PlantedCorpus& corpus);

struct Blobs {
  PointMatrix<double> points;
  std::vector<int> labels;
};

/// Isotropic Gaussian blobs of unit variance, centers `separation` apart
/// along the first axis.
Blobs two_blobs(std::uint64_t seed, int per_blob = 20, int dim = 30, double separation = 10.0);

struct CooccurrenceCorpus {
  std::vector<SurfaceDocument> documents;
  std::vector<std::pair<std::string, std::string>> pairs;
};

/// Each group owns one word pair plus context words; documents draw only from
/// a single group, so pair members share contexts and never meet across groups.
CooccurrenceCorpus cooccurrence_corpus(std::uint64_t seed, int groups = 4, int documents_per_group = 150,
                                       int context_words = 6, int length = 12);

void write_jsonl(const std::filesystem::path& path, const std::vector<RawDocument>& documents);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

}  // namespace temario::fixtures
