#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "temario/coherence.hpp"
#include "temario/corpus.hpp"
#include "temario/embed.hpp"
#include "temario/project.hpp"

namespace temario {

struct PreprocessConfig {
  bool lowercase = true;
  bool strip_urls = true;
  bool strip_mentions = true;
  bool strip_hashtags = true;
  bool strip_punctuation = true;
  std::optional<std::filesystem::path> lemma_table;
  std::optional<std::filesystem::path> stoplist;
  std::size_t min_token_length = 2;
  std::size_t min_count = 1;
};

struct SweepConfig {
  int k_min = 2;
  int k_max = 59;
  int runs = 64;
  std::size_t window = 110;
  std::size_t top_n = 10;
  std::optional<double> alpha;
  double beta = 0.01;
  int iterations = 500;
  unsigned threads = 0;
  double eps = 1e-12;
  double gamma = 1.0;
};

struct ClusterConfig {
  std::optional<int> k;  // overrides the elbow choice
  std::size_t n_representatives = 15;
  double plot_radius = 0.2;
  int max_iter = 300;
  double tol = 1e-6;
  int n_init = 10;
};

struct ProjectConfig {
  int n_neighbors = 15;
  int epochs = 200;
  int neg_rate = 5;
  double a = 1.577;
  double b = 0.895;
  LayoutInit init = LayoutInit::spectral;
  long spectral_max_points = 5000;
};

/// Full run configuration. Relative paths resolve against the directory of
/// the config file. TEMARIO_SEED and TEMARIO_OUT override `seed` and
/// `output_dir`.
struct PipelineConfig {
  std::filesystem::path corpus_path;
  CorpusFormat corpus_format = CorpusFormat::jsonl;
  PreprocessConfig preprocess;
  SweepConfig sweep;
  EmbedConfig embed;
  ClusterConfig cluster;
  ProjectConfig project;
  std::uint64_t seed = 42;
  std::filesystem::path output_dir = "bundle";
  int port = 8080;
  std::optional<std::filesystem::path> static_dir;
  std::size_t excerpt_chars = 140;

  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  /// Reads the file and applies environment overrides.
  static PipelineConfig load(const std::filesystem::path& file);

  void apply_env_overrides();

  /// Throws ConfigError on any invalid field or missing input file.
  void validate() const;

  nlohmann::json to_json() const;

  SweepParams sweep_params() const;
  PreprocessRules load_rules() const;
  EmbedConfig embed_config() const;
  LayoutParams layout_params() const;

  /// Human-readable description of the stages a run would execute.
  std::string plan() const;
};

}  // namespace temario
