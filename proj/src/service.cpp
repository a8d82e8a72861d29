#include "temario/service.hpp"

#include <charconv>

#include <httplib.h>

#include "temario/bundle_io.hpp"

namespace temario {

namespace {

using nlohmann::json;

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, {{"error", message}}, status);
}

std::optional<int> parse_int(const std::string& text) {
  int value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::optional<double> parse_double(const std::string& text) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) return std::nullopt;
    return value;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

ReportService::ReportService(std::filesystem::path bundle_dir, std::optional<std::filesystem::path> static_dir)
    : dir_(std::move(bundle_dir)), server_(std::make_unique<httplib::Server>()) {
  classifier_ = Classifier::open(dir_);
  manifest_ = read_file(dir_ / bundle::kManifest);
  sweep_ = read_file(dir_ / bundle::kSweepJson);
  points_ = read_json(dir_ / bundle::kPoints);
  clusters_ = read_json(dir_ / bundle::kClusters);
  labels_ = std::filesystem::exists(dir_ / bundle::kLabels) ? read_json(dir_ / bundle::kLabels)
                                                              : json{{"version", 0}, {"labels", json::object()}};
  if (static_dir && std::filesystem::is_directory(*static_dir)) {
    server_->set_mount_point("/", static_dir->string());
  }
  routes();
}

ReportService::~ReportService() { stop(); }

int ReportService::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool ReportService::bind(const std::string& host, int port) { return server_->bind_to_port(host, port); }

bool ReportService::listen_after_bind() { return server_->listen_after_bind(); }

void ReportService::stop() {
  if (server_) server_->stop();
}

bool ReportService::running() const { return server_->is_running(); }

void ReportService::wait_until_ready() const { server_->wait_until_ready(); }

json ReportService::labels() const {
  std::shared_lock lock(labels_mutex_);
  return labels_;
}

bool ReportService::has_cluster(int cluster) const {
  return cluster >= 0 && cluster < static_cast<int>(clusters_.at("clusters").size());
}

json ReportService::set_label(int cluster, std::optional<std::string> label) {
  if (!has_cluster(cluster)) throw std::out_of_range("unknown cluster " + std::to_string(cluster));
  std::lock_guard writer(write_mutex_);
  json next = labels();
  const std::string key = std::to_string(cluster);
  if (label) {
    next["labels"][key] = *label;
  } else {
    next["labels"].erase(key);
  }
  next["version"] = next.value("version", 0) + 1;
  write_json_atomic(dir_ / bundle::kLabels, next);
  {
    std::unique_lock lock(labels_mutex_);
    labels_ = next;
  }
  return {{"cluster_id", cluster},
          {"label", label ? json(*label) : json(nullptr)},
          {"version", next["version"]}};
}

json ReportService::clusters_with_labels() const {
  json out = clusters_;
  const json current = labels();
  const auto& map = current.at("labels");
  for (auto& entry : out["clusters"]) {
    const std::string key = std::to_string(entry["id"].get<int>());
    entry["label"] = map.contains(key) ? map.at(key) : json(nullptr);
  }
  out["labels_version"] = current.value("version", 0);
  return out;
}

void ReportService::routes() {
  auto& s = *server_;

  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    send_error(res, 500, message);
  });

  s.Get("/api/manifest", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(manifest_, kJson);
  });

  s.Get("/api/sweep", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(sweep_, kJson);
  });

  s.Get("/api/points", [this](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("radius")) return send_json(res, points_);
    const auto radius = parse_double(req.get_param_value("radius"));
    if (!radius || !(*radius >= 0.0)) return send_error(res, 400, "radius must be a non-negative number");
    json out = json::array();
    for (const auto& p : points_) {
      if (p.at("distance_to_centroid").get<double>() <= *radius) out.push_back(p);
    }
    send_json(res, out);
  });

  s.Get("/api/clusters", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, clusters_with_labels());
  });

  s.Get(R"(/api/clusters/([^/]+)/representatives)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto cluster = parse_int(req.matches[1]);
    if (!cluster || !has_cluster(*cluster)) return send_error(res, 404, "unknown cluster");
    const json& reps = clusters_["clusters"][static_cast<std::size_t>(*cluster)]["representatives"];
    std::size_t n = reps.size();
    if (req.has_param("n")) {
      const auto requested = parse_int(req.get_param_value("n"));
      if (!requested || *requested < 0) return send_error(res, 400, "n must be a non-negative integer");
      n = std::min(n, static_cast<std::size_t>(*requested));
    }
    json out = json::array();
    for (std::size_t i = 0; i < n; ++i) out.push_back(reps[i]);
    send_json(res, {{"cluster_id", *cluster}, {"representatives", out}});
  });

  s.Put(R"(/api/clusters/([^/]+)/label)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto cluster = parse_int(req.matches[1]);
    if (!cluster || !has_cluster(*cluster)) return send_error(res, 404, "unknown cluster");
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("label")) {
      return send_error(res, 400, "expected {\"label\": string}");
    }
    const json& label = body["label"];
    if (label.is_null()) return send_json(res, set_label(*cluster, std::nullopt));
    if (!label.is_string()) return send_error(res, 400, "label must be a string or null");
    send_json(res, set_label(*cluster, label.get<std::string>()));
  });

  s.Post("/api/classify", [this](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("texts") || !body["texts"].is_array()) {
      return send_error(res, 400, "expected {\"texts\": [string]}");
    }
    std::vector<std::string> texts;
    for (const auto& t : body["texts"]) {
      if (!t.is_string()) return send_error(res, 400, "texts must be strings");
      texts.push_back(t.get<std::string>());
    }
    const json current = labels();
    json results = json::array();
    for (const auto& c : classifier_.classify(texts, &current)) results.push_back(to_json(c));
    send_json(res, {{"results", results}});
  });
}

}  // namespace temario
