#include "temario/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "temario/bundle_io.hpp"
#include "temario/coherence.hpp"
#include "temario/lda.hpp"
#include "temario/project.hpp"
#include "temario/utf8.hpp"

namespace temario {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

struct PreparedCorpus {
  std::vector<RawDocument> raw;
  std::vector<SurfaceDocument> surface;
  VocabularyBuild build;
  std::string sha256;
};

PreparedCorpus prepare_corpus(const PipelineConfig& config, const PreprocessRules& rules) {
  PreparedCorpus corpus;
  corpus.sha256 = sha256_file(config.corpus_path);
  corpus.raw = load_corpus(config.corpus_path, config.corpus_format);
  corpus.surface.reserve(corpus.raw.size());
  for (const auto& doc : corpus.raw) corpus.surface.push_back({doc.id, preprocess(doc.text, rules)});
  corpus.build = build_vocabulary(corpus.surface, config.preprocess.min_count);
  return corpus;
}

// Collects artifacts in output_dir/.staging and publishes them on commit.
class Staging {
 public:
  explicit Staging(std::filesystem::path out) : out_(std::move(out)), dir_(out_ / ".staging") {
    std::filesystem::create_directories(out_);
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }

  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

  void write(const std::string& name, std::string_view contents) {
    write_atomic(path(name), contents);
    names_.push_back(name);
  }
  void write_json(const std::string& name, const json& value) { write(name, value.dump(2) + "\n"); }
  void track(const std::string& name) { names_.push_back(name); }

  const std::vector<std::string>& names() const { return names_; }

  void commit() {
    for (const auto& name : names_) std::filesystem::rename(dir_ / name, out_ / name);
    std::filesystem::remove_all(dir_);
    std::filesystem::remove_all(out_ / "failed");
  }

  void fail() noexcept {
    std::error_code ec;
    std::filesystem::remove_all(out_ / "failed", ec);
    std::filesystem::rename(dir_, out_ / "failed", ec);
  }

 private:
  std::filesystem::path out_;
  std::filesystem::path dir_;
  std::vector<std::string> names_;
};

template <typename F>
auto run_stage(const char* name, Staging& staging, std::ostream* log, F&& body) {
  if (log) *log << "[temario] " << name << "\n" << std::flush;
  try {
    return body();
  } catch (const std::exception& e) {
    staging.fail();
    throw StageError(name, e.what());
  }
}

PreprocessRules load_rules_checked(const PipelineConfig& config) {
  try {
    return config.load_rules();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string excerpt(const std::string& text, std::size_t chars) {
  const std::u32string cps = utf8::decode(text);
  if (cps.size() <= chars) return text;
  return utf8::encode(std::u32string_view(cps).substr(0, chars)) + "…";
}

int select_k(const PipelineConfig& config, const SweepResult& sweep, ElbowChoice* elbow_out) {
  if (sweep.k_values.size() >= 3) {
    *elbow_out = select_k_elbow(sweep);
  } else {
    // Too few points for a chord: take the maximum of the curve.
    const auto best = std::max_element(sweep.mean_cv.begin(), sweep.mean_cv.end()) - sweep.mean_cv.begin();
    elbow_out->k = sweep.k_values[static_cast<std::size_t>(best)];
    elbow_out->warning = true;
    elbow_out->distances.assign(sweep.k_values.size(), 0.0);
  }
  return config.cluster.k.value_or(elbow_out->k);
}

json sweep_report(const SweepResult& sweep, const ElbowChoice& elbow, int selected, bool overridden) {
  json j = to_json(sweep);
  j["elbow"] = {{"k", elbow.k}, {"warning", elbow.warning}, {"distances", elbow.distances}};
  j["selected_k"] = selected;
  j["k_source"] = overridden ? "override" : "elbow";
  return j;
}

}  // namespace

Eigen::VectorXd document_vector(const EmbeddingModel& model, std::span<const std::string> tokens,
                                bool normalize) {
  Eigen::VectorXd v = model.doc_vector(tokens);
  if (normalize) {
    const double n = v.norm();
    if (n > 0.0) v /= n;
  }
  return v;
}

json rules_to_json(const PreprocessRules& rules) {
  std::map<std::string, std::string> lemmas(rules.lemma_table.begin(), rules.lemma_table.end());
  std::set<std::string> stop(rules.stopwords.begin(), rules.stopwords.end());
  return {{"lowercase", rules.lowercase},
          {"strip_urls", rules.strip_urls},
          {"strip_mentions", rules.strip_mentions},
          {"strip_hashtags", rules.strip_hashtags},
          {"strip_punctuation", rules.strip_punctuation},
          {"min_token_length", rules.min_token_length},
          {"lemma_table", lemmas},
          {"stopwords", stop}};
}

PreprocessRules rules_from_json(const json& j) {
  PreprocessRules rules;
  rules.lowercase = j.at("lowercase").get<bool>();
  rules.strip_urls = j.at("strip_urls").get<bool>();
  rules.strip_mentions = j.at("strip_mentions").get<bool>();
  rules.strip_hashtags = j.at("strip_hashtags").get<bool>();
  rules.strip_punctuation = j.at("strip_punctuation").get<bool>();
  rules.min_token_length = j.at("min_token_length").get<std::size_t>();
  for (const auto& [surface, lemma] : j.at("lemma_table").items()) {
    rules.lemma_table.emplace(surface, lemma.get<std::string>());
  }
  for (const auto& word : j.at("stopwords")) rules.stopwords.insert(word.get<std::string>());
  return rules;
}

SweepResult run_sweep(const PipelineConfig& config, std::ostream* log) {
  config.validate();
  const PreprocessRules rules = load_rules_checked(config);
  Staging staging(config.output_dir);
  const PreparedCorpus corpus = run_stage("corpus", staging, log, [&] { return prepare_corpus(config, rules); });
  return run_stage("sweep", staging, log, [&] {
    const SweepResult sweep = coherence_sweep(corpus.build.documents, corpus.build.vocabulary.size(),
                                              config.sweep_params());
    ElbowChoice elbow;
    const int k = select_k(config, sweep, &elbow);
    staging.write(bundle::kSweepCsv, to_csv(sweep));
    staging.write_json(bundle::kSweepJson, sweep_report(sweep, elbow, k, config.cluster.k.has_value()));
    staging.commit();
    return sweep;
  });
}

PipelineSummary run_pipeline(const PipelineConfig& config, std::ostream* log) {
  config.validate();
  const PreprocessRules rules = load_rules_checked(config);
  Staging staging(config.output_dir);
  PipelineSummary summary;
  summary.bundle_dir = config.output_dir;

  const PreparedCorpus corpus = run_stage("corpus", staging, log, [&] { return prepare_corpus(config, rules); });
  const auto& docs = corpus.build.documents;
  const auto& vocabulary = corpus.build.vocabulary;
  summary.documents = corpus.raw.size();

  const SweepParams sweep_params = config.sweep_params();
  const SweepResult sweep = run_stage("sweep", staging, log, [&] {
    return coherence_sweep(docs, vocabulary.size(), sweep_params);
  });

  ElbowChoice elbow;
  const int k = select_k(config, sweep, &elbow);
  summary.selected_k = k;
  summary.k_overridden = config.cluster.k.has_value();
  summary.elbow_warning = elbow.warning;
  if (log) *log << "[temario] selected k=" << k << (summary.k_overridden ? " (override)" : " (elbow)") << "\n";

  run_stage("topics", staging, log, [&] {
    staging.write(bundle::kSweepCsv, to_csv(sweep));
    staging.write_json(bundle::kSweepJson, sweep_report(sweep, elbow, k, summary.k_overridden));
    const TopicModel topics = fit_lda(docs, vocabulary.size(), sweep_lda_config(sweep_params, k, 0));
    staging.write_json(bundle::kTopics, to_json(topics, vocabulary, config.sweep.top_n));
    return 0;
  });

  const EmbedConfig embed_config = config.embed_config();
  const EmbeddingModel embedding = run_stage("embed", staging, log, [&] {
    EmbeddingModel model = train_embeddings(docs, vocabulary, embed_config);
    model.save(staging.path(bundle::kEmbedding));
    staging.track(bundle::kEmbedding);
    staging.write_json(bundle::kEmbeddingSidecar, {{"config", to_json(embed_config)},
                                                   {"corpus_sha256", corpus.sha256},
                                                   {"vocabulary_size", vocabulary.size()},
                                                   {"epoch_loss", model.epoch_loss}});
    return model;
  });

  // Documents with no in-vocabulary tokens stay unassigned.
  std::vector<std::size_t> modeled;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (!docs[d].tokens.empty()) modeled.push_back(d);
  }
  summary.modeled = modeled.size();
  std::vector<std::string> modeled_ids;
  for (auto d : modeled) modeled_ids.push_back(corpus.raw[d].id);

  PointMatrix<double> vectors(static_cast<Eigen::Index>(modeled.size()), embed_config.dim);
  const ClusterModel<double> clusters = run_stage("cluster", staging, log, [&] {
    for (std::size_t i = 0; i < modeled.size(); ++i) {
      vectors.row(static_cast<Eigen::Index>(i)) =
          document_vector(embedding, corpus.surface[modeled[i]].tokens, embed_config.normalize_doc_vectors)
              .transpose();
    }
    KMeansParams params;
    params.k = k;
    params.seed = config.seed;
    params.max_iter = config.cluster.max_iter;
    params.tol = config.cluster.tol;
    params.n_init = config.cluster.n_init;
    return kmeans(vectors, params, modeled_ids);
  });

  const Projection projection = run_stage("project", staging, log, [&] {
    return project_2d(vectors, config.project.n_neighbors, config.layout_params());
  });

  run_stage("report", staging, log, [&] {
    json points = json::array();
    for (std::size_t i = 0; i < modeled.size(); ++i) {
      const auto& doc = corpus.raw[modeled[i]];
      points.push_back({{"doc_id", doc.id},
                        {"x", projection.coordinates(static_cast<Eigen::Index>(i), 0)},
                        {"y", projection.coordinates(static_cast<Eigen::Index>(i), 1)},
                        {"cluster_id", clusters.assignments[i]},
                        {"distance_to_centroid", clusters.distances[i]},
                        {"text_excerpt", excerpt(doc.text, config.excerpt_chars)}});
    }
    staging.write_json(bundle::kPoints, points);

    json cluster_json = to_json(clusters);
    for (auto& entry : cluster_json["clusters"]) {
      const int c = entry["id"].get<int>();
      json reps = json::array();
      if (clusters.sizes[static_cast<std::size_t>(c)] > 0) {
        for (auto i : representatives(clusters, c, config.cluster.n_representatives)) {
          const auto& doc = corpus.raw[modeled[i]];
          reps.push_back({{"doc_id", doc.id}, {"distance", clusters.distances[i]}, {"text", doc.text}});
        }
      }
      entry["representatives"] = std::move(reps);
      entry["plot_count"] = 0;
    }
    for (auto i : plot_filter(clusters, config.cluster.plot_radius)) {
      auto& count = cluster_json["clusters"][static_cast<std::size_t>(clusters.assignments[i])]["plot_count"];
      count = count.get<int>() + 1;
    }
    json unassigned = json::array();
    for (std::size_t d = 0; d < docs.size(); ++d) {
      if (docs[d].tokens.empty()) unassigned.push_back(corpus.raw[d].id);
    }
    cluster_json["unassigned"] = unassigned;
    cluster_json["n_representatives"] = config.cluster.n_representatives;
    cluster_json["plot_radius"] = config.cluster.plot_radius;
    staging.write_json(bundle::kClusters, cluster_json);

    std::ostringstream csv;
    csv.precision(17);
    csv << "doc_id,cluster_id,distance\n";
    std::size_t next = 0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
      std::string id = corpus.raw[d].id;
      if (id.find_first_of(",\"\n") != std::string::npos) {
        std::string quoted = "\"";
        for (char ch : id) quoted += (ch == '"') ? std::string("\"\"") : std::string(1, ch);
        id = quoted + "\"";
      }
      if (next < modeled.size() && modeled[next] == d) {
        csv << id << ',' << clusters.assignments[next] << ',' << clusters.distances[next] << '\n';
        ++next;
      } else {
        csv << id << ",,\n";
      }
    }
    staging.write(bundle::kAssignments, csv.str());
    staging.write_json(bundle::kRules, rules_to_json(rules));
    staging.write_json(bundle::kLabels, {{"version", 0}, {"labels", json::object()}});

    json artifacts = json::object();
    for (const auto& name : staging.names()) {
      if (name != bundle::kLabels) artifacts[name] = sha256_file(staging.path(name));
    }
    json manifest = {
        {"format", "temario-report-bundle"},
        {"bundle_version", 1},
        {"created_at", utc_timestamp()},
        {"seed", config.seed},
        {"corpus_sha256", corpus.sha256},
        {"config", config.to_json()},
        {"versions",
         {{"temario", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)}}},
        {"selected_k", k},
        {"k_source", summary.k_overridden ? "override" : "elbow"},
        {"elbow_warning", elbow.warning},
        {"counts",
         {{"documents", corpus.raw.size()},
          {"modeled", modeled.size()},
          {"unassigned", corpus.raw.size() - modeled.size()},
          {"vocabulary", vocabulary.size()}}},
        {"spectral_init", projection.spectral_init},
        {"artifacts", artifacts}};
    staging.write_json(bundle::kManifest, manifest);
    staging.commit();
    return 0;
  });
  return summary;
}

json to_json(const Classification& c) {
  json j;
  j["cluster_id"] = c.cluster ? json(*c.cluster) : json(nullptr);
  j["label"] = c.label ? json(*c.label) : json(nullptr);
  j["distance"] = c.distance ? json(*c.distance) : json(nullptr);
  if (c.empty_after_preprocessing) j["flag"] = "empty after preprocessing";
  return j;
}

Classifier Classifier::open(const std::filesystem::path& dir) {
  Classifier classifier;
  try {
    classifier.rules_ = rules_from_json(read_json(dir / bundle::kRules));
    classifier.embedding_ = EmbeddingModel::load(dir / bundle::kEmbedding);
    const json sidecar = read_json(dir / bundle::kEmbeddingSidecar);
    classifier.normalize_ = sidecar.at("config").value("normalize_doc_vectors", false);

    const json clusters = read_json(dir / bundle::kClusters);
    const auto& entries = clusters.at("clusters");
    const auto k = static_cast<Eigen::Index>(entries.size());
    if (k == 0) throw Error("bundle has no clusters");
    const auto dim = static_cast<Eigen::Index>(entries.at(0).at("centroid").size());
    if (dim != classifier.embedding_.dim()) throw Error("centroid dimension does not match the embedding");
    classifier.clusters_.centroids.resize(k, dim);
    for (Eigen::Index c = 0; c < k; ++c) {
      const auto centroid = entries.at(static_cast<std::size_t>(c)).at("centroid").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(centroid.size()) != dim) throw Error("ragged centroids");
      classifier.clusters_.centroids.row(c) = Eigen::Map<const Eigen::RowVectorXd>(centroid.data(), dim);
    }
    classifier.clusters_.labels.assign(static_cast<std::size_t>(k), std::nullopt);
    if (std::filesystem::exists(dir / bundle::kLabels)) classifier.labels_ = read_json(dir / bundle::kLabels);
  } catch (const json::exception& e) {
    throw Error("cannot load bundle " + dir.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error("cannot load bundle " + dir.string() + ": " + e.what());
  }
  return classifier;
}

std::vector<Classification> Classifier::classify(std::span<const std::string> texts, const json* labels) const {
  if (!labels) labels = &labels_;
  std::vector<Classification> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    Classification result;
    const auto tokens = preprocess(text, rules_);
    if (tokens.empty()) {
      result.empty_after_preprocessing = true;
      out.push_back(result);
      continue;
    }
    const Eigen::VectorXd v = document_vector(embedding_, tokens, normalize_);
    const auto [cluster, distance] = assign(clusters_, v);
    result.cluster = cluster;
    result.distance = distance;
    if (labels->is_object() && labels->contains("labels")) {
      const auto& map = labels->at("labels");
      if (auto it = map.find(std::to_string(cluster)); it != map.end() && it->is_string()) {
        result.label = it->get<std::string>();
      }
    }
    out.push_back(std::move(result));
  }
  return out;
}

std::vector<Classification> classify_new(const std::filesystem::path& bundle_dir,
                                         std::span<const std::string> texts) {
  return Classifier::open(bundle_dir).classify(texts);
}

}  // namespace temario
