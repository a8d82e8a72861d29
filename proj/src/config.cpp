#include "temario/config.hpp"

#include <cstdlib>
#include <set>
#include <sstream>

#include "temario/bundle_io.hpp"
#include "temario/error.hpp"

namespace temario {

namespace {

using nlohmann::json;

void check_keys(const json& section, const std::string& name, const std::set<std::string>& allowed) {
  if (!section.is_object()) throw ConfigError("config: '" + name + "' must be an object");
  for (const auto& [key, _] : section.items()) {
    if (!allowed.count(key)) throw ConfigError("config: unknown key '" + name + "." + key + "'");
  }
}

template <typename T>
void read(const json& section, const char* key, T& out, const std::string& where) {
  auto it = section.find(key);
  if (it == section.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for '" + where + "." + key + "'");
  }
}

template <typename T>
void read_optional(const json& section, const char* key, std::optional<T>& out, const std::string& where) {
  auto it = section.find(key);
  if (it == section.end() || it->is_null()) return;
  T value{};
  read(section, key, value, where);
  out = value;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return (p.is_absolute() || base.empty()) ? p : base / p;
}

json path_or_null(const std::optional<std::filesystem::path>& p) {
  return p ? json(p->string()) : json(nullptr);
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  check_keys(j, "config", {"corpus", "preprocess", "sweep", "embed", "cluster", "project", "seed",
                           "output_dir", "service", "excerpt_chars"});

  if (!j.contains("corpus")) throw ConfigError("config: missing 'corpus' section");
  const json& corpus = j.at("corpus");
  check_keys(corpus, "corpus", {"path", "format"});
  std::string path, format = "jsonl";
  read(corpus, "path", path, "corpus");
  if (path.empty()) throw ConfigError("config: 'corpus.path' is required");
  read(corpus, "format", format, "corpus");
  c.corpus_path = resolve(base_dir, path);
  c.corpus_format = parse_corpus_format(format);

  if (auto it = j.find("preprocess"); it != j.end()) {
    const json& p = *it;
    check_keys(p, "preprocess", {"lowercase", "strip_urls", "strip_mentions", "strip_hashtags",
                                 "strip_punctuation", "lemma_table", "stoplist", "min_token_length",
                                 "min_count"});
    read(p, "lowercase", c.preprocess.lowercase, "preprocess");
    read(p, "strip_urls", c.preprocess.strip_urls, "preprocess");
    read(p, "strip_mentions", c.preprocess.strip_mentions, "preprocess");
    read(p, "strip_hashtags", c.preprocess.strip_hashtags, "preprocess");
    read(p, "strip_punctuation", c.preprocess.strip_punctuation, "preprocess");
    std::optional<std::string> lemma, stop;
    read_optional(p, "lemma_table", lemma, "preprocess");
    read_optional(p, "stoplist", stop, "preprocess");
    if (lemma) c.preprocess.lemma_table = resolve(base_dir, *lemma);
    if (stop) c.preprocess.stoplist = resolve(base_dir, *stop);
    read(p, "min_token_length", c.preprocess.min_token_length, "preprocess");
    read(p, "min_count", c.preprocess.min_count, "preprocess");
  }

  if (auto it = j.find("sweep"); it != j.end()) {
    const json& s = *it;
    check_keys(s, "sweep", {"k_min", "k_max", "runs", "window", "top_n", "alpha", "beta",
                            "iterations", "threads", "eps", "gamma"});
    read(s, "k_min", c.sweep.k_min, "sweep");
    read(s, "k_max", c.sweep.k_max, "sweep");
    read(s, "runs", c.sweep.runs, "sweep");
    read(s, "window", c.sweep.window, "sweep");
    read(s, "top_n", c.sweep.top_n, "sweep");
    read_optional(s, "alpha", c.sweep.alpha, "sweep");
    read(s, "beta", c.sweep.beta, "sweep");
    read(s, "iterations", c.sweep.iterations, "sweep");
    read(s, "threads", c.sweep.threads, "sweep");
    read(s, "eps", c.sweep.eps, "sweep");
    read(s, "gamma", c.sweep.gamma, "sweep");
  }

  if (auto it = j.find("embed"); it != j.end()) {
    check_keys(*it, "embed", {"dim", "ngram_min", "ngram_max", "bucket_count", "window", "negatives",
                              "epochs", "learning_rate", "normalize_doc_vectors"});
    try {
      c.embed = embed_config_from_json(*it, c.embed);
    } catch (const json::exception&) {
      throw ConfigError("config: bad value in 'embed'");
    }
  }

  if (auto it = j.find("cluster"); it != j.end()) {
    const json& s = *it;
    check_keys(s, "cluster", {"k", "n_representatives", "plot_radius", "max_iter", "tol", "n_init"});
    read_optional(s, "k", c.cluster.k, "cluster");
    read(s, "n_representatives", c.cluster.n_representatives, "cluster");
    read(s, "plot_radius", c.cluster.plot_radius, "cluster");
    read(s, "max_iter", c.cluster.max_iter, "cluster");
    read(s, "tol", c.cluster.tol, "cluster");
    read(s, "n_init", c.cluster.n_init, "cluster");
  }

  if (auto it = j.find("project"); it != j.end()) {
    const json& s = *it;
    check_keys(s, "project", {"n_neighbors", "epochs", "neg_rate", "a", "b", "init", "spectral_max_points"});
    read(s, "n_neighbors", c.project.n_neighbors, "project");
    read(s, "epochs", c.project.epochs, "project");
    read(s, "neg_rate", c.project.neg_rate, "project");
    read(s, "a", c.project.a, "project");
    read(s, "b", c.project.b, "project");
    std::string init = "spectral";
    read(s, "init", init, "project");
    if (init == "spectral") {
      c.project.init = LayoutInit::spectral;
    } else if (init == "random") {
      c.project.init = LayoutInit::random;
    } else {
      throw ConfigError("config: project.init must be 'spectral' or 'random'");
    }
    read(s, "spectral_max_points", c.project.spectral_max_points, "project");
  }

  read(j, "seed", c.seed, "config");
  std::string out = c.output_dir.string();
  read(j, "output_dir", out, "config");
  c.output_dir = resolve(base_dir, out);
  read(j, "excerpt_chars", c.excerpt_chars, "config");
  if (auto it = j.find("service"); it != j.end()) {
    check_keys(*it, "service", {"port", "static_dir"});
    read(*it, "port", c.port, "service");
    std::optional<std::string> dir;
    read_optional(*it, "static_dir", dir, "service");
    if (dir) c.static_dir = resolve(base_dir, *dir);
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& file) {
  json j;
  try {
    j = read_json(file);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  PipelineConfig c = from_json(j, file.parent_path());
  c.apply_env_overrides();
  return c;
}

void PipelineConfig::apply_env_overrides() {
  if (const char* seed_env = std::getenv("TEMARIO_SEED"); seed_env && *seed_env) {
    try {
      std::size_t used = 0;
      seed = std::stoull(seed_env, &used);
      if (used != std::string(seed_env).size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError(std::string("TEMARIO_SEED is not an unsigned integer: ") + seed_env);
    }
  }
  if (const char* out = std::getenv("TEMARIO_OUT"); out && *out) output_dir = out;
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
  if (!std::filesystem::is_regular_file(corpus_path)) fail("corpus file not found: " + corpus_path.string());
  if (preprocess.lemma_table && !std::filesystem::is_regular_file(*preprocess.lemma_table)) {
    fail("lemma table not found: " + preprocess.lemma_table->string());
  }
  if (preprocess.stoplist && !std::filesystem::is_regular_file(*preprocess.stoplist)) {
    fail("stoplist not found: " + preprocess.stoplist->string());
  }
  if (preprocess.min_count < 1) fail("preprocess.min_count must be >= 1");
  if (sweep.k_min < 1 || sweep.k_max < sweep.k_min) fail("sweep k range must satisfy 1 <= k_min <= k_max");
  if (sweep.runs < 1) fail("sweep.runs must be >= 1");
  if (sweep.window < 1) fail("sweep.window must be >= 1");
  if (sweep.top_n < 2) fail("sweep.top_n must be >= 2");
  if (sweep.alpha && !(*sweep.alpha > 0.0)) fail("sweep.alpha must be > 0");
  if (!(sweep.beta > 0.0)) fail("sweep.beta must be > 0");
  if (sweep.iterations < 1) fail("sweep.iterations must be >= 1");
  if (!(sweep.eps > 0.0)) fail("sweep.eps must be > 0");
  try {
    embed_config().validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  if (cluster.k && *cluster.k < 1) fail("cluster.k must be >= 1");
  if (cluster.n_representatives < 1) fail("cluster.n_representatives must be >= 1");
  if (!(cluster.plot_radius >= 0.0)) fail("cluster.plot_radius must be >= 0");
  if (cluster.max_iter < 1) fail("cluster.max_iter must be >= 1");
  if (!(cluster.tol >= 0.0)) fail("cluster.tol must be >= 0");
  if (cluster.n_init < 1) fail("cluster.n_init must be >= 1");
  if (project.n_neighbors < 1) fail("project.n_neighbors must be >= 1");
  if (project.epochs < 0) fail("project.epochs must be >= 0");
  if (project.neg_rate < 0) fail("project.neg_rate must be >= 0");
  if (!(project.a > 0.0) || !(project.b > 0.0)) fail("project.a and project.b must be > 0");
  if (port < 0 || port > 65535) fail("service.port out of range");
  if (output_dir.empty()) fail("output_dir must be set");
}

json PipelineConfig::to_json() const {
  json j;
  j["corpus"] = {{"path", corpus_path.string()},
                 {"format", corpus_format == CorpusFormat::jsonl ? "jsonl" : "csv"}};
  j["preprocess"] = {{"lowercase", preprocess.lowercase},
                     {"strip_urls", preprocess.strip_urls},
                     {"strip_mentions", preprocess.strip_mentions},
                     {"strip_hashtags", preprocess.strip_hashtags},
                     {"strip_punctuation", preprocess.strip_punctuation},
                     {"lemma_table", path_or_null(preprocess.lemma_table)},
                     {"stoplist", path_or_null(preprocess.stoplist)},
                     {"min_token_length", preprocess.min_token_length},
                     {"min_count", preprocess.min_count}};
  j["sweep"] = {{"k_min", sweep.k_min},       {"k_max", sweep.k_max},
                {"runs", sweep.runs},         {"window", sweep.window},
                {"top_n", sweep.top_n},       {"alpha", sweep.alpha ? json(*sweep.alpha) : json(nullptr)},
                {"beta", sweep.beta},         {"iterations", sweep.iterations},
                {"threads", sweep.threads},   {"eps", sweep.eps},
                {"gamma", sweep.gamma}};
  json e = temario::to_json(embed);
  e.erase("seed");
  e.erase("min_count");
  j["embed"] = e;
  j["cluster"] = {{"k", cluster.k ? json(*cluster.k) : json(nullptr)},
                  {"n_representatives", cluster.n_representatives},
                  {"plot_radius", cluster.plot_radius},
                  {"max_iter", cluster.max_iter},
                  {"tol", cluster.tol},
                  {"n_init", cluster.n_init}};
  j["project"] = {{"n_neighbors", project.n_neighbors},
                  {"epochs", project.epochs},
                  {"neg_rate", project.neg_rate},
                  {"a", project.a},
                  {"b", project.b},
                  {"init", project.init == LayoutInit::spectral ? "spectral" : "random"},
                  {"spectral_max_points", project.spectral_max_points}};
  j["seed"] = seed;
  j["output_dir"] = output_dir.string();
  j["service"] = {{"port", port}, {"static_dir", path_or_null(static_dir)}};
  j["excerpt_chars"] = excerpt_chars;
  return j;
}

SweepParams PipelineConfig::sweep_params() const {
  SweepParams p;
  for (int k = sweep.k_min; k <= sweep.k_max; ++k) p.k_values.push_back(k);
  p.runs = sweep.runs;
  p.top_n = sweep.top_n;
  p.alpha = sweep.alpha;
  p.beta = sweep.beta;
  p.iterations = sweep.iterations;
  p.seed = seed;
  p.threads = sweep.threads;
  p.coherence.window = sweep.window;
  p.coherence.eps = sweep.eps;
  p.coherence.gamma = sweep.gamma;
  return p;
}

PreprocessRules PipelineConfig::load_rules() const {
  PreprocessRules rules;
  rules.lowercase = preprocess.lowercase;
  rules.strip_urls = preprocess.strip_urls;
  rules.strip_mentions = preprocess.strip_mentions;
  rules.strip_hashtags = preprocess.strip_hashtags;
  rules.strip_punctuation = preprocess.strip_punctuation;
  rules.min_token_length = preprocess.min_token_length;
  if (preprocess.lemma_table) rules.lemma_table = load_lemma_table(*preprocess.lemma_table);
  if (preprocess.stoplist) rules.stopwords = load_stoplist(*preprocess.stoplist);
  return rules;
}

EmbedConfig PipelineConfig::embed_config() const {
  EmbedConfig e = embed;
  e.min_count = preprocess.min_count;
  e.seed = seed;
  return e;
}

LayoutParams PipelineConfig::layout_params() const {
  LayoutParams p;
  p.epochs = project.epochs;
  p.a = project.a;
  p.b = project.b;
  p.neg_rate = project.neg_rate;
  p.seed = seed;
  p.init = project.init;
  p.spectral_max_points = project.spectral_max_points;
  return p;
}

std::string PipelineConfig::plan() const {
  std::ostringstream out;
  const int nk = sweep.k_max - sweep.k_min + 1;
  out << "plan (seed " << seed << ")\n";
  out << "  1. corpus      " << corpus_path.string() << " ["
      << (corpus_format == CorpusFormat::jsonl ? "jsonl" : "csv") << "]\n";
  out << "  2. preprocess  lowercase=" << preprocess.lowercase << " urls=" << preprocess.strip_urls
      << " mentions=" << preprocess.strip_mentions << " hashtags=" << preprocess.strip_hashtags
      << " punctuation=" << preprocess.strip_punctuation
      << " lemma_table=" << (preprocess.lemma_table ? preprocess.lemma_table->string() : "none")
      << " min_token_length=" << preprocess.min_token_length << " min_count=" << preprocess.min_count << "\n";
  out << "  3. sweep       k=" << sweep.k_min << ".." << sweep.k_max << " runs=" << sweep.runs << " ("
      << static_cast<long long>(nk) * sweep.runs << " LDA fits, " << sweep.iterations
      << " Gibbs sweeps each) alpha=" << (sweep.alpha ? std::to_string(*sweep.alpha) : std::string("50/k"))
      << " beta=" << sweep.beta << " C_V window=" << sweep.window << " top_n=" << sweep.top_n << "\n";
  out << "  4. select k    "
      << (cluster.k ? "override k=" + std::to_string(*cluster.k) : std::string("elbow of mean C_V curve")) << "\n";
  out << "  5. embed       dim=" << embed.dim << " ngrams=" << embed.ngram_min << ".." << embed.ngram_max
      << " buckets=" << embed.bucket_count << " window=" << embed.window << " negatives=" << embed.negatives
      << " epochs=" << embed.epochs << " lr=" << embed.learning_rate << "\n";
  out << "  6. cluster     k-means++ max_iter=" << cluster.max_iter << " tol=" << cluster.tol << " n_init=" << cluster.n_init
      << " representatives=" << cluster.n_representatives << " plot_radius=" << cluster.plot_radius << "\n";
  out << "  7. project     n_neighbors=" << project.n_neighbors << " epochs=" << project.epochs
      << " neg_rate=" << project.neg_rate << " a=" << project.a << " b=" << project.b << "\n";
  out << "  8. report      " << output_dir.string() << "\n";
  return out.str();
}

}  // namespace temario
