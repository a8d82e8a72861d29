#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <functional>

#include "fixtures.hpp"
#include "temario/corpus.hpp"
#include "temario/error.hpp"
#include "temario/utf8.hpp"

using namespace temario;

namespace {

std::filesystem::path write_file(const std::string& dir, const std::string& name, const std::string& contents) {
  const auto path = fixtures::temp_dir(dir) / name;
  std::ofstream(path) << contents;
  return path;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("load_corpus keeps JSONL records in file order") {
  const auto path = write_file("corpus-jsonl", "c.jsonl",
                               R"({"id":"x","text":"uno"}
{"id":"y","text":"dos","timestamp":"2019-01-01T00:00:00Z"}
{"id":3,"text":""}
)");
  const auto docs = load_corpus(path, CorpusFormat::jsonl);
  REQUIRE(docs.size() == 3);
  CHECK(docs[0].id == "x");
  CHECK(docs[1].timestamp == "2019-01-01T00:00:00Z");
  CHECK(docs[2].id == "3");
  CHECK(docs[2].text.empty());
}

TEST_CASE("load_corpus on an empty file") {
  CHECK(load_corpus(write_file("corpus-empty", "e.jsonl", ""), CorpusFormat::jsonl).empty());
  CHECK(load_corpus(write_file("corpus-empty-csv", "e.csv", ""), CorpusFormat::csv).empty());
}

TEST_CASE("duplicate ids name both lines") {
  const auto path = write_file("corpus-dup", "d.jsonl", "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
  const auto message = error_of([&] { load_corpus(path, CorpusFormat::jsonl); });
  CHECK(message.find("duplicate id") != std::string::npos);
  CHECK(message.find("lines 1 and 2") != std::string::npos);
}

TEST_CASE("malformed JSONL names the line") {
  const auto path = write_file("corpus-bad", "b.jsonl", "{\"id\":\"a\",\"text\":\"x\"}\n{not json\n");
  CHECK(error_of([&] { load_corpus(path, CorpusFormat::jsonl); }).find("line 2") != std::string::npos);
}

TEST_CASE("CSV with quoted fields") {
  const auto path = write_file("corpus-csv", "c.csv",
                               "id,timestamp,text\r\n1,,\"hola, \"\"mundo\"\"\"\r\n2,2020-02-02,\"dos\nlineas\"\r\n");
  const auto docs = load_corpus(path, CorpusFormat::csv);
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].text == "hola, \"mundo\"");
  CHECK_FALSE(docs[0].timestamp.has_value());
  CHECK(docs[1].text == "dos\nlineas");
  CHECK(docs[1].timestamp == "2020-02-02");
}

TEST_CASE("CSV requires id and text columns") {
  const auto path = write_file("corpus-csv-bad", "c.csv", "key,body\n1,x\n");
  CHECK_THROWS_AS(load_corpus(path, CorpusFormat::csv), Error);
}

TEST_CASE("preprocess follows the rule order") {
  PreprocessRules rules;
  rules.lemma_table = {{"mira", "mirar"}};
  CHECK(preprocess("Mira esto https://t.co/x #Bogotá @NoticiasRCN ¡Robo!", rules) ==
        std::vector<std::string>{"mirar", "esto", "robo"});
  CHECK(preprocess("", PreprocessRules{}).empty());
  CHECK(preprocess("ROBO", PreprocessRules{}) == std::vector<std::string>{"robo"});
}

TEST_CASE("preprocess flags") {
  PreprocessRules keep;
  keep.strip_hashtags = false;
  keep.strip_mentions = false;
  keep.strip_urls = false;
  CHECK(preprocess("#Bogotá @rcn", keep) == std::vector<std::string>{"bogotá", "rcn"});

  PreprocessRules cased;
  cased.lowercase = false;
  CHECK(preprocess("ÁRBOL Casa", cased) == std::vector<std::string>{"ÁRBOL", "Casa"});

  PreprocessRules shortest;
  shortest.min_token_length = 1;
  CHECK(preprocess("a b 3", shortest) == std::vector<std::string>{"a", "b", "3"});
  CHECK(preprocess("a b 3 42", PreprocessRules{}) == std::vector<std::string>{"42"});
}

TEST_CASE("min_token_length counts code points") {
  PreprocessRules rules;
  rules.min_token_length = 3;
  CHECK(preprocess("ñá año", rules) == std::vector<std::string>{"año"});
}

TEST_CASE("stopwords drop tokens before and after lemmatization") {
  PreprocessRules rules;
  rules.stopwords = {"de", "ser"};
  rules.lemma_table = {{"fue", "ser"}};
  CHECK(preprocess("robo de celular fue", rules) == std::vector<std::string>{"robo", "celular"});
}

TEST_CASE("preprocess is idempotent on its own output") {
  PreprocessRules rules;
  rules.lemma_table = resolve_lemma_chains({{"robos", "robo"}, {"robó", "robos"}, {"fue", "ir"}});
  const auto corpus = fixtures::planted_corpus(11, 30);
  std::vector<std::string> texts = {"¡Robó! dos celulares... http://x.co @a #b", "Fue   ROBOS, robó; 12-30"};
  for (const auto& d : corpus.documents) texts.push_back(d.text);
  for (const auto& text : texts) {
    const auto once = preprocess(text, rules);
    std::string joined;
    for (const auto& t : once) joined += t + " ";
    CHECK(preprocess(joined, rules) == once);
    CHECK(preprocess(text, rules) == once);
  }
}

TEST_CASE("lemma chains resolve to a fixed point") {
  const auto table = resolve_lemma_chains({{"a", "b"}, {"b", "c"}, {"x", "x"}});
  CHECK(table.at("a") == "c");
  CHECK(table.at("b") == "c");
  for (const auto& [surface, lemma] : table) {
    const auto it = table.find(lemma);
    CHECK((it == table.end() || it->second == lemma));
  }
  CHECK_THROWS_AS(resolve_lemma_chains({{"a", "b"}, {"b", "a"}}), Error);
}

TEST_CASE("lemma table and stoplist files") {
  const auto lemmas = write_file("lemma", "l.tsv", "robos\trobo\nrobó\trobos\n");
  const auto table = load_lemma_table(lemmas);
  CHECK(table.at("robó") == "robo");
  const auto stop = write_file("stop", "s.txt", "# comment\nde\n\nla\n");
  CHECK(load_stoplist(stop) == std::unordered_set<std::string>{"de", "la"});
  CHECK_THROWS_AS(load_lemma_table(write_file("lemma-bad", "l.tsv", "solo\n")), Error);
}

TEST_CASE("build_vocabulary orders by frequency then lexicographically") {
  const std::vector<SurfaceDocument> docs = {{"1", {"a", "b"}}, {"2", {"a"}}};
  const auto one = build_vocabulary(docs, 1);
  CHECK(one.vocabulary.words() == std::vector<std::string>{"a", "b"});
  CHECK(one.vocabulary.frequency(0) == 2);
  CHECK(one.documents[0].tokens == std::vector<WordId>{0, 1});

  const auto two = build_vocabulary(docs, 2);
  CHECK(two.vocabulary.words() == std::vector<std::string>{"a"});
  CHECK(two.documents[0].tokens == std::vector<WordId>{0});
  CHECK(two.documents[1].tokens == std::vector<WordId>{0});

  const std::vector<SurfaceDocument> ties = {{"1", {"zeta", "beta", "alfa"}}};
  CHECK(build_vocabulary(ties, 1).vocabulary.words() == std::vector<std::string>{"alfa", "beta", "zeta"});
}

TEST_CASE("build_vocabulary rejects empty corpora") {
  CHECK_THROWS_WITH(build_vocabulary(std::vector<SurfaceDocument>{}, 1), "empty corpus");
  CHECK_THROWS_WITH(build_vocabulary(std::vector<SurfaceDocument>{{"1", {}}, {"2", {}}}, 1), "empty corpus");
  CHECK_THROWS_AS(build_vocabulary(std::vector<SurfaceDocument>{{"1", {"a"}}}, 0), Error);
}

TEST_CASE("vocabulary round trip and order invariance") {
  const auto corpus = fixtures::planted_corpus(12, 80);
  std::vector<SurfaceDocument> docs;
  for (const auto& d : corpus.documents) docs.push_back({d.id, preprocess(d.text, PreprocessRules{})});
  const auto built = build_vocabulary(docs, 3);
  for (const auto& doc : built.documents) {
    for (auto id : doc.tokens) {
      REQUIRE(static_cast<std::size_t>(id) < built.vocabulary.size());
      CHECK(built.vocabulary.frequency(id) >= 3);
      CHECK(built.vocabulary.find(built.vocabulary.word(id)) == id);
    }
  }
  std::reverse(docs.begin(), docs.end());
  CHECK(build_vocabulary(docs, 3).vocabulary.words() == built.vocabulary.words());
}

TEST_CASE("utf8 helpers") {
  CHECK(utf8::to_lower("ÁÉÍÓÚÑ ΑΒΓ ДЖ") == "áéíóúñ αβγ дж");
  CHECK(utf8::length("año") == 3);
  CHECK(utf8::decode("\xff") == std::u32string{0xFFFD});
  CHECK(utf8::encode(utf8::decode("¡señal! 你好")) == "¡señal! 你好");
  CHECK(utf8::characters("ñu") == std::vector<std::string>{"ñ", "u"});
}
