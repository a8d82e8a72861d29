#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace temario {

using WordId = std::int32_t;

struct RawDocument {
  std::string id;
  std::optional<std::string> timestamp;
  std::string text;
};

enum class CorpusFormat { jsonl, csv };

CorpusFormat parse_corpus_format(std::string_view name);

/// Reads one document per record, preserving file order. Malformed records
/// and duplicate ids raise Error with the offending line number(s).
std::vector<RawDocument> load_corpus(const std::filesystem::path& path, CorpusFormat format);

using LemmaTable = std::unordered_map<std::string, std::string>;

/// Follows surface -> lemma chains to their fixed point so that applying the
/// table twice equals applying it once. Cycles are rejected.
LemmaTable resolve_lemma_chains(const LemmaTable& table);

/// Two-column TSV `surface<TAB>lemma`; chains are resolved on load.
LemmaTable load_lemma_table(const std::filesystem::path& path);

/// One word per line; blank lines and lines starting with '#' are skipped.
std::unordered_set<std::string> load_stoplist(const std::filesystem::path& path);

struct PreprocessRules {
  bool lowercase = true;
  bool strip_urls = true;
  bool strip_mentions = true;
  bool strip_hashtags = true;
  bool strip_punctuation = true;
  LemmaTable lemma_table;
  std::unordered_set<std::string> stopwords;
  std::size_t min_token_length = 2;
};

/// Normalizes one text into surface tokens.
///
/// Order of operations: lowercase; drop whitespace-delimited URLs, mentions
/// and hashtags whole; split the rest into maximal runs of letters/digits;
/// lemmatize; drop tokens shorter than min_token_length (in code points) or
/// listed as stopwords.
std::vector<std::string> preprocess(std::string_view text, const PreprocessRules& rules);

struct SurfaceDocument {
  std::string id;
  std::vector<std::string> tokens;
};

struct TokenizedDocument {
  std::string id;
  std::vector<WordId> tokens;
};

class Vocabulary {
 public:
  Vocabulary() = default;

  /// Builds from words already in index order.
  Vocabulary(std::vector<std::string> words, std::vector<std::int64_t> frequencies);

  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

  const std::string& word(WordId id) const { return words_.at(static_cast<std::size_t>(id)); }
  std::int64_t frequency(WordId id) const { return frequencies_.at(static_cast<std::size_t>(id)); }
  std::optional<WordId> find(std::string_view word) const;

  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::int64_t>& frequencies() const { return frequencies_; }

 private:
  std::vector<std::string> words_;
  std::vector<std::int64_t> frequencies_;
  std::unordered_map<std::string, WordId> index_;
};

struct VocabularyBuild {
  Vocabulary vocabulary;
  std::vector<TokenizedDocument> documents;
};

/// Drops words rarer than min_count and indexes the rest by descending
/// frequency, ties broken lexicographically. Documents may come out empty;
/// an all-empty result raises "empty corpus".
VocabularyBuild build_vocabulary(std::span<const SurfaceDocument> docs, std::size_t min_count);

std::size_t total_tokens(std::span<const TokenizedDocument> docs);

}  // namespace temario
