#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "temario/cluster.hpp"
#include "temario/config.hpp"
#include "temario/embed.hpp"

namespace temario {

/// A pipeline stage failed after validation. The CLI maps this to exit code 3.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

namespace bundle {
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kRules = "rules.json";
inline constexpr const char* kSweepCsv = "sweep.csv";
inline constexpr const char* kSweepJson = "sweep.json";
inline constexpr const char* kTopics = "topics.json";
inline constexpr const char* kEmbedding = "embedding.bin";
inline constexpr const char* kEmbeddingSidecar = "embedding.json";
inline constexpr const char* kClusters = "clusters.json";
inline constexpr const char* kAssignments = "assignments.csv";
inline constexpr const char* kPoints = "points.json";
inline constexpr const char* kLabels = "labels.json";
}  // namespace bundle

struct PipelineSummary {
  std::filesystem::path bundle_dir;
  int selected_k = 0;
  bool k_overridden = false;
  bool elbow_warning = false;
  std::size_t documents = 0;
  std::size_t modeled = 0;
};

/// corpus -> sweep -> select k -> embed -> cluster -> project -> report.
/// Artifacts are staged and renamed into config.output_dir on success; on a
/// stage failure the staged artifacts are kept under output_dir/failed and a
/// StageError is thrown. Validation errors surface as ConfigError before any
/// stage runs.
PipelineSummary run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr);

/// Corpus and sweep stages only; writes sweep.csv and sweep.json.
SweepResult run_sweep(const PipelineConfig& config, std::ostream* log = nullptr);

nlohmann::json rules_to_json(const PreprocessRules& rules);
PreprocessRules rules_from_json(const nlohmann::json& j);

struct Classification {
  std::optional<int> cluster;
  std::optional<std::string> label;
  std::optional<double> distance;
  bool empty_after_preprocessing = false;
};

nlohmann::json to_json(const Classification& c);

/// Nearest-centroid classifier over a report bundle's embedding, cluster
/// model and preprocessing rules. Immutable after construction.
class Classifier {
 public:
  static Classifier open(const std::filesystem::path& bundle_dir);

  /// Labels are read at call time from `labels` when given.
  std::vector<Classification> classify(std::span<const std::string> texts,
                                       const nlohmann::json* labels = nullptr) const;

  const EmbeddingModel& embedding() const { return embedding_; }
  const ClusterModel<double>& clusters() const { return clusters_; }

 private:
  PreprocessRules rules_;
  EmbeddingModel embedding_;
  ClusterModel<double> clusters_;
  bool normalize_ = false;
  nlohmann::json labels_;
};

/// preprocess -> doc_vector -> assign, for each text in order.
std::vector<Classification> classify_new(const std::filesystem::path& bundle_dir,
                                         std::span<const std::string> texts);

/// Document vector used for clustering and classification.
Eigen::VectorXd document_vector(const EmbeddingModel& model, std::span<const std::string> tokens,
                                bool normalize);

}  // namespace temario
