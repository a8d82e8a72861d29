#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "temario/config.hpp"
#include "temario/pipeline.hpp"
#include "temario/service.hpp"

namespace {

temario::ReportService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

// One text per line; .jsonl inputs take the "text" field of each object.
std::vector<std::string> read_texts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw temario::ConfigError("cannot open input " + path.string());
  const bool jsonl = path.extension() == ".jsonl";
  std::vector<std::string> texts;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!jsonl) {
      texts.push_back(line);
      continue;
    }
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string()) {
      throw temario::ConfigError(path.string() + ": line " + std::to_string(number) + ": expected {\"text\": string}");
    }
    texts.push_back(j["text"].get<std::string>());
  }
  return texts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temario: topic discovery over short news texts"};
  app.require_subcommand(1);

  std::filesystem::path config_path;
  bool dry_run = false;
  auto* run = app.add_subcommand("run", "Run the full pipeline and write a report bundle");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_flag("--dry-run", dry_run, "Validate the config and print the stage plan");

  auto* sweep = app.add_subcommand("sweep", "Run the coherence sweep only");
  sweep->add_option("--config", config_path, "JSON config file")->required();

  std::filesystem::path bundle_dir;
  std::filesystem::path input_path;
  auto* classify = app.add_subcommand("classify", "Assign new texts to the clusters of a bundle");
  classify->add_option("--bundle", bundle_dir, "Report bundle directory")->required();
  classify->add_option("--input", input_path, "Text file (one per line) or .jsonl with a text field")->required();

  int port = 8080;
  std::optional<std::filesystem::path> static_dir;
  auto* serve = app.add_subcommand("serve", "Serve a report bundle over HTTP");
  serve->add_option("--bundle", bundle_dir, "Report bundle directory")->required();
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--static", static_dir, "Directory of UI assets served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run || *sweep) {
      const auto config = temario::PipelineConfig::load(config_path);
      if (*run && dry_run) {
        config.validate();
        std::cout << config.plan();
        return 0;
      }
      if (*run) {
        const auto summary = temario::run_pipeline(config, &std::cerr);
        std::cout << "bundle " << summary.bundle_dir.string() << ": k=" << summary.selected_k << ", "
                  << summary.modeled << "/" << summary.documents << " documents clustered\n";
      } else {
        const auto result = temario::run_sweep(config, &std::cerr);
        std::cout << temario::to_csv(result);
      }
    } else if (*classify) {
      const auto texts = read_texts(input_path);
      const auto classifier = temario::Classifier::open(bundle_dir);
      std::size_t i = 0;
      for (const auto& c : classifier.classify(texts)) {
        auto j = temario::to_json(c);
        j["index"] = i++;
        std::cout << j.dump() << "\n";
      }
    } else if (*serve) {
      temario::ReportService service(bundle_dir, static_dir);
      if (!service.bind("0.0.0.0", port)) throw temario::ConfigError("cannot bind port " + std::to_string(port));
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "[temario] serving " << bundle_dir.string() << " on port " << port << "\n";
      service.listen_after_bind();
      g_service = nullptr;
    }
  } catch (const temario::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const temario::StageError& e) {
    std::cerr << "stage failed: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
