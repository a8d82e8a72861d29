#include <doctest.h>

#include <fstream>
#include <thread>

#include "fixtures.hpp"
#include "temario/bundle_io.hpp"
#include "temario/service.hpp"

#include <httplib.h>

using namespace temario;
using nlohmann::json;

namespace {

const std::filesystem::path& bundle_dir() {
  static const std::filesystem::path dir = [] {
    const auto root = fixtures::temp_dir("service");
    fixtures::write_jsonl(root / "corpus.jsonl", fixtures::planted_corpus(51, 120).documents);
    PipelineConfig config;
    config.corpus_path = root / "corpus.jsonl";
    config.output_dir = root / "bundle";
    config.seed = 51;
    config.sweep.k_min = 3;
    config.sweep.k_max = 5;
    config.sweep.runs = 2;
    config.sweep.iterations = 30;
    config.cluster.k = 4;
    config.cluster.plot_radius = 1e9;
    config.embed.bucket_count = 4096;
    config.embed.epochs = 3;
    config.project.epochs = 20;
    std::filesystem::create_directories(root / "static");
    std::ofstream(root / "static" / "index.html") << "<html>ok</html>";
    run_pipeline(config);
    return root / "bundle";
  }();
  return dir;
}

// Runs a service on an ephemeral port for the lifetime of the object.
struct Running {
  explicit Running(std::optional<std::filesystem::path> static_dir = std::nullopt)
      : service(bundle_dir(), std::move(static_dir)) {
    port = service.bind_any_port();
    thread = std::thread([this] { service.listen_after_bind(); });
    service.wait_until_ready();
  }
  ~Running() {
    service.stop();
    thread.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port); }

  ReportService service;
  int port = 0;
  std::thread thread;
};

json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return json::parse(r->body);
}

void reset_labels() { write_json_atomic(bundle_dir() / "labels.json", {{"version", 0}, {"labels", json::object()}}); }

}  // namespace

TEST_CASE("read endpoints serve the bundle") {
  reset_labels();
  Running running;
  auto client = running.client();

  auto manifest = client.Get("/api/manifest");
  REQUIRE(manifest);
  CHECK(manifest->status == 200);
  CHECK(json::parse(manifest->body) == read_json(bundle_dir() / "manifest.json"));

  CHECK(body_of(client.Get("/api/sweep"))["k"] == json::array({3, 4, 5}));

  const auto all = body_of(client.Get("/api/points"));
  CHECK(all == read_json(bundle_dir() / "points.json"));

  const auto clusters = body_of(client.Get("/api/clusters"));
  CHECK(clusters["k"] == 4);
  CHECK(clusters["clusters"].size() == 4);
}

TEST_CASE("points radius filter matches plot_filter") {
  Running running;
  auto client = running.client();
  const auto all = read_json(bundle_dir() / "points.json");
  std::vector<double> distances;
  for (const auto& p : all) distances.push_back(p["distance_to_centroid"]);
  std::sort(distances.begin(), distances.end());
  const double median = distances[distances.size() / 2];
  for (double radius : {0.2, median, 0.0}) {
    const auto filtered = body_of(client.Get(("/api/points?radius=" + std::to_string(radius)).c_str()));
    std::size_t expected = 0;
    for (const auto& p : all) expected += p["distance_to_centroid"].get<double>() <= std::stod(std::to_string(radius));
    CHECK(filtered.size() == expected);
    for (const auto& p : filtered) CHECK(p["distance_to_centroid"].get<double>() <= std::stod(std::to_string(radius)));
  }
  CHECK(client.Get("/api/points?radius=abc")->status == 400);
  CHECK(client.Get("/api/points?radius=-1")->status == 400);
}

TEST_CASE("representatives endpoint") {
  Running running;
  auto client = running.client();
  const auto stored = read_json(bundle_dir() / "clusters.json")["clusters"][0]["representatives"];
  const auto all = body_of(client.Get("/api/clusters/0/representatives"));
  CHECK(all["representatives"] == stored);
  const auto two = body_of(client.Get("/api/clusters/0/representatives?n=2"));
  REQUIRE(two["representatives"].size() == std::min<std::size_t>(2, stored.size()));
  CHECK(two["representatives"][0] == stored[0]);
  CHECK(client.Get("/api/clusters/9/representatives")->status == 404);
  CHECK(client.Get("/api/clusters/x/representatives")->status == 404);
  CHECK(client.Get("/api/clusters/0/representatives?n=-3")->status == 400);
}

TEST_CASE("labels are written, read back and persisted") {
  reset_labels();
  {
    Running running;
    auto client = running.client();
    auto put = client.Put("/api/clusters/3/label", R"({"label":"thefts"})", "application/json");
    REQUIRE(put);
    CHECK(put->status == 200);
    const auto reply = json::parse(put->body);
    CHECK(reply["cluster_id"] == 3);
    CHECK(reply["label"] == "thefts");
    CHECK(reply["version"] == 1);

    const auto clusters = body_of(client.Get("/api/clusters"));
    CHECK(clusters["clusters"][3]["label"] == "thefts");
    CHECK(clusters["clusters"][0]["label"].is_null());

    auto second = client.Put("/api/clusters/3/label", R"({"label":"robos"})", "application/json");
    CHECK(json::parse(second->body)["version"] == 2);

    const auto classified = body_of(client.Post("/api/classify", json{{"texts", {"x"}}}.dump(), "application/json"));
    CHECK(classified["results"].size() == 1);

    CHECK(client.Put("/api/clusters/42/label", R"({"label":"x"})", "application/json")->status == 404);
    CHECK(client.Put("/api/clusters/1/label", "not json", "application/json")->status == 400);
    CHECK(client.Put("/api/clusters/1/label", R"({"name":"x"})", "application/json")->status == 400);
    CHECK(client.Put("/api/clusters/1/label", R"({"label":7})", "application/json")->status == 400);
  }
  const auto stored = read_json(bundle_dir() / "labels.json");
  CHECK(stored["version"] == 2);
  CHECK(stored["labels"]["3"] == "robos");

  Running restarted;
  auto client = restarted.client();
  CHECK(body_of(client.Get("/api/clusters"))["clusters"][3]["label"] == "robos");
  auto cleared = client.Put("/api/clusters/3/label", R"({"label":null})", "application/json");
  CHECK(json::parse(cleared->body)["version"] == 3);
  CHECK(body_of(client.Get("/api/clusters"))["clusters"][3]["label"].is_null());
}

TEST_CASE("concurrent label writes serialize") {
  reset_labels();
  Running running;
  std::vector<std::thread> writers;
  for (int t = 0; t < 4; ++t) {
    writers.emplace_back([&, t] {
      auto client = running.client();
      for (int i = 0; i < 5; ++i) {
        client.Put(("/api/clusters/" + std::to_string(t) + "/label").c_str(),
                   json{{"label", "w" + std::to_string(i)}}.dump(), "application/json");
      }
    });
  }
  for (auto& w : writers) w.join();
  const auto labels = running.service.labels();
  CHECK(labels["version"] == 20);
  for (int t = 0; t < 4; ++t) CHECK(labels["labels"][std::to_string(t)] == "w4");
  CHECK(read_json(bundle_dir() / "labels.json") == labels);
}

TEST_CASE("classify endpoint") {
  reset_labels();
  Running running;
  auto client = running.client();
  const auto reps = read_json(bundle_dir() / "clusters.json")["clusters"][2]["representatives"];
  REQUIRE_FALSE(reps.empty());
  running.service.set_label(2, "hurtos");
  auto r = client.Post("/api/classify", json{{"texts", {"", reps[0]["text"]}}}.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  const auto results = json::parse(r->body)["results"];
  REQUIRE(results.size() == 2);
  CHECK(results[0]["cluster_id"].is_null());
  CHECK(results[0]["flag"] == "empty after preprocessing");
  CHECK(results[1]["cluster_id"] == 2);
  CHECK(results[1]["label"] == "hurtos");

  CHECK(client.Post("/api/classify", "{", "application/json")->status == 400);
  CHECK(client.Post("/api/classify", R"({"texts":"one"})", "application/json")->status == 400);
  CHECK(client.Post("/api/classify", R"({"texts":[1]})", "application/json")->status == 400);
  CHECK_THROWS_AS(running.service.set_label(99, "x"), std::out_of_range);
}

TEST_CASE("static assets are mounted at the root") {
  Running running(bundle_dir().parent_path() / "static");
  auto client = running.client();
  auto r = client.Get("/index.html");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(r->body == "<html>ok</html>");
}
