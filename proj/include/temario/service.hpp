#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include <json.hpp>

#include "temario/pipeline.hpp"

namespace httplib {
class Server;
}

namespace temario {

/// HTTP view of a report bundle.
///
///   GET  /api/manifest
///   GET  /api/sweep
///   GET  /api/points[?radius=r]
///   GET  /api/clusters
///   GET  /api/clusters/{id}/representatives[?n=]
///   PUT  /api/clusters/{id}/label        {"label": string | null}
///   POST /api/classify                   {"texts": [string]}
///
/// Label writes are serialized and persisted to labels.json; each write bumps
/// the version counter returned in the response.
class ReportService {
 public:
  explicit ReportService(std::filesystem::path bundle_dir,
                         std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~ReportService();

  ReportService(const ReportService&) = delete;
  ReportService& operator=(const ReportService&) = delete;

  /// Binds to an ephemeral port and returns it.
  int bind_any_port(const std::string& host = "127.0.0.1");
  bool bind(const std::string& host, int port);
  /// Blocks until stop().
  bool listen_after_bind();
  void stop();
  bool running() const;
  void wait_until_ready() const;

  nlohmann::json labels() const;
  /// Returns {"cluster_id", "label", "version"}; throws std::out_of_range for
  /// an unknown cluster.
  nlohmann::json set_label(int cluster, std::optional<std::string> label);

 private:
  void routes();
  nlohmann::json clusters_with_labels() const;
  bool has_cluster(int cluster) const;

  std::filesystem::path dir_;
  std::unique_ptr<httplib::Server> server_;
  Classifier classifier_;
  std::string manifest_;
  std::string sweep_;
  nlohmann::json points_;
  nlohmann::json clusters_;
  nlohmann::json labels_;
  mutable std::shared_mutex labels_mutex_;
  std::mutex write_mutex_;
};

}  // namespace temario
