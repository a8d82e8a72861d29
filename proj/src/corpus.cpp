#include "temario/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "temario/error.hpp"
#include "temario/utf8.hpp"

namespace temario {

namespace {

std::string location(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ": line " + std::to_string(line);
}

// RFC 4180 records: quoted fields may contain separators, doubled quotes and
// newlines. Returns false at end of input. `line` tracks the physical line
// where the record starts.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line,
                     std::size_t& next_line, const std::filesystem::path& path) {
  fields.clear();
  line = next_line;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++next_line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      if (!field.empty()) {
        throw Error(location(path, line) + ": stray quote inside unquoted field");
      }
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      // tolerate CRLF
    } else if (c == '\n') {
      ++next_line;
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) throw Error(location(path, line) + ": unterminated quoted field");
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

class IdRegistry {
 public:
  explicit IdRegistry(const std::filesystem::path& path) : path_(path) {}

  void add(const std::string& id, std::size_t line) {
    auto [it, inserted] = seen_.emplace(id, line);
    if (!inserted) {
      throw Error(path_.string() + ": duplicate id '" + id + "' on lines " +
                  std::to_string(it->second) + " and " + std::to_string(line));
    }
  }

 private:
  const std::filesystem::path& path_;
  std::unordered_map<std::string, std::size_t> seen_;
};

std::vector<RawDocument> load_jsonl(const std::filesystem::path& path, std::istream& in) {
  std::vector<RawDocument> docs;
  IdRegistry ids(path);
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (is_blank(text)) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(location(path, line) + ": malformed JSON record: " + e.what());
    }
    if (!record.is_object()) throw Error(location(path, line) + ": record is not an object");
    auto id = record.find("id");
    auto body = record.find("text");
    if (id == record.end() || body == record.end() || !body->is_string()) {
      throw Error(location(path, line) + ": record needs string 'text' and an 'id'");
    }
    RawDocument doc;
    if (id->is_string()) {
      doc.id = id->get<std::string>();
    } else if (id->is_number_integer()) {
      doc.id = std::to_string(id->get<std::int64_t>());
    } else {
      throw Error(location(path, line) + ": 'id' must be a string or integer");
    }
    doc.text = body->get<std::string>();
    if (auto ts = record.find("timestamp"); ts != record.end() && !ts->is_null()) {
      if (!ts->is_string()) throw Error(location(path, line) + ": 'timestamp' must be a string");
      doc.timestamp = ts->get<std::string>();
    }
    ids.add(doc.id, line);
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<RawDocument> load_csv(const std::filesystem::path& path, std::istream& in) {
  std::vector<RawDocument> docs;
  std::vector<std::string> fields;
  std::size_t line = 1;
  std::size_t next_line = 1;
  if (!read_csv_record(in, fields, line, next_line, path)) return docs;

  std::ptrdiff_t id_col = -1, text_col = -1, ts_col = -1;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    std::string name = fields[i];
    if (i == 0 && name.rfind("\xEF\xBB\xBF", 0) == 0) name.erase(0, 3);
    if (name == "id") id_col = static_cast<std::ptrdiff_t>(i);
    if (name == "text") text_col = static_cast<std::ptrdiff_t>(i);
    if (name == "timestamp") ts_col = static_cast<std::ptrdiff_t>(i);
  }
  if (id_col < 0 || text_col < 0) {
    throw Error(location(path, 1) + ": CSV header must name 'id' and 'text' columns");
  }
  const std::size_t width = fields.size();

  IdRegistry ids(path);
  while (read_csv_record(in, fields, line, next_line, path)) {
    if (fields.size() == 1 && is_blank(fields[0])) continue;
    if (fields.size() != width) {
      throw Error(location(path, line) + ": expected " + std::to_string(width) + " fields, found " +
                  std::to_string(fields.size()));
    }
    RawDocument doc;
    doc.id = fields[static_cast<std::size_t>(id_col)];
    doc.text = fields[static_cast<std::size_t>(text_col)];
    if (ts_col >= 0 && !fields[static_cast<std::size_t>(ts_col)].empty()) {
      doc.timestamp = fields[static_cast<std::size_t>(ts_col)];
    }
    ids.add(doc.id, line);
    docs.push_back(std::move(doc));
  }
  return docs;
}

bool starts_with_url(std::string_view lowered) {
  return lowered.rfind("http://", 0) == 0 || lowered.rfind("https://", 0) == 0;
}

}  // namespace

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::jsonl;
  if (name == "csv") return CorpusFormat::csv;
  throw ConfigError("unknown corpus format '" + std::string(name) + "' (expected jsonl or csv)");
}

std::vector<RawDocument> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file " + path.string());
  return format == CorpusFormat::jsonl ? load_jsonl(path, in) : load_csv(path, in);
}

LemmaTable resolve_lemma_chains(const LemmaTable& table) {
  LemmaTable resolved;
  resolved.reserve(table.size());
  for (const auto& [surface, lemma] : table) {
    std::string current = lemma;
    std::unordered_set<std::string> visited{surface};
    while (true) {
      auto next = table.find(current);
      if (next == table.end() || next->second == current) break;
      if (!visited.insert(current).second) {
        throw Error("lemma table has a cycle through '" + current + "'");
      }
      current = next->second;
    }
    resolved.emplace(surface, std::move(current));
  }
  return resolved;
}

LemmaTable load_lemma_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lemma table " + path.string());
  LemmaTable table;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(location(path, number) + ": expected two tab-separated columns");
    }
    table[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return resolve_lemma_chains(table);
}

std::unordered_set<std::string> load_stoplist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stoplist " + path.string());
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    words.insert(line);
  }
  return words;
}

std::vector<std::string> preprocess(std::string_view text, const PreprocessRules& rules) {
  std::u32string cps = utf8::decode(text);
  if (rules.lowercase) {
    for (auto& cp : cps) cp = utf8::to_lower(cp);
  }

  std::vector<std::u32string> pieces;
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && utf8::is_space(cps[i])) ++i;
    std::size_t j = i;
    while (j < cps.size() && !utf8::is_space(cps[j])) ++j;
    if (j == i) break;
    std::u32string_view chunk(cps.data() + i, j - i);
    i = j;

    // Leading punctuation such as "(" or "¡" does not hide a marker.
    std::size_t lead = 0;
    while (lead < chunk.size() && !utf8::is_word_char(chunk[lead]) && chunk[lead] != U'@' &&
           chunk[lead] != U'#') {
      ++lead;
    }
    const std::u32string_view core = chunk.substr(lead);
    if (!core.empty()) {
      if (rules.strip_mentions && core.front() == U'@') continue;
      if (rules.strip_hashtags && core.front() == U'#') continue;
      if (rules.strip_urls && starts_with_url(utf8::to_lower(utf8::encode(core.substr(0, 8))))) {
        continue;
      }
    }

    if (!rules.strip_punctuation) {
      pieces.emplace_back(chunk);
      continue;
    }
    std::size_t k = 0;
    while (k < chunk.size()) {
      while (k < chunk.size() && !utf8::is_word_char(chunk[k])) ++k;
      std::size_t m = k;
      while (m < chunk.size() && utf8::is_word_char(chunk[m])) ++m;
      if (m > k) pieces.emplace_back(chunk.substr(k, m - k));
      k = m;
    }
  }

  std::vector<std::string> tokens;
  tokens.reserve(pieces.size());
  for (const auto& piece : pieces) {
    std::string surface = utf8::encode(piece);
    if (rules.stopwords.count(surface)) continue;
    if (auto lemma = rules.lemma_table.find(surface); lemma != rules.lemma_table.end()) {
      surface = lemma->second;
    }
    if (utf8::length(surface) < rules.min_token_length) continue;
    if (rules.stopwords.count(surface)) continue;
    tokens.push_back(std::move(surface));
  }
  return tokens;
}

Vocabulary::Vocabulary(std::vector<std::string> words, std::vector<std::int64_t> frequencies)
    : words_(std::move(words)), frequencies_(std::move(frequencies)) {
  if (words_.size() != frequencies_.size()) throw Error("vocabulary words/frequencies size mismatch");
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], static_cast<WordId>(i)).second) {
      throw Error("vocabulary word '" + words_[i] + "' appears twice");
    }
  }
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

VocabularyBuild build_vocabulary(std::span<const SurfaceDocument> docs, std::size_t min_count) {
  if (min_count < 1) throw Error("min_count must be at least 1");

  std::unordered_map<std::string, std::int64_t> counts;
  for (const auto& doc : docs) {
    for (const auto& token : doc.tokens) ++counts[token];
  }

  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (auto& [word, count] : counts) {
    if (count >= static_cast<std::int64_t>(min_count)) kept.emplace_back(word, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  std::vector<std::string> words;
  std::vector<std::int64_t> freqs;
  words.reserve(kept.size());
  freqs.reserve(kept.size());
  for (auto& [word, count] : kept) {
    words.push_back(std::move(word));
    freqs.push_back(count);
  }

  VocabularyBuild build{Vocabulary(std::move(words), std::move(freqs)), {}};
  build.documents.reserve(docs.size());
  bool any = false;
  for (const auto& doc : docs) {
    TokenizedDocument out{doc.id, {}};
    for (const auto& token : doc.tokens) {
      if (auto id = build.vocabulary.find(token)) out.tokens.push_back(*id);
    }
    any = any || !out.tokens.empty();
    build.documents.push_back(std::move(out));
  }
  if (!any) throw Error("empty corpus");
  return build;
}

std::size_t total_tokens(std::span<const TokenizedDocument> docs) {
  std::size_t n = 0;
  for (const auto& doc : docs) n += doc.tokens.size();
  return n;
}

}  // namespace temario
