// Standalone mock chat-completions server for a generated dataset.
//   vi-probe-mock --manifest out/dataset/manifest.jsonl --port 8099 --behavior noisy --threshold 0.5

#include <iostream>

#include "CLI11.hpp"
#include "viprobe/mock_provider.hpp"

int main(int argc, char** argv) {
  using namespace viprobe;
  CLI::App app{"Mock vision-language model endpoint"};
  std::string manifest_path, behavior = "oracle", key;
  int port = 8099, fail_first = 0, delay_ms = 0;
  double threshold = 0.5;
  app.add_option("--manifest", manifest_path, "manifest.jsonl of the dataset being probed")->required();
  app.add_option("--port", port, "listen port on 127.0.0.1");
  app.add_option("--behavior", behavior, "template | oracle | noisy");
  app.add_option("--threshold", threshold, "noisy perceiver threshold on |alpha|");
  app.add_option("--fail-first", fail_first, "503 for the first n attempts of each request");
  app.add_option("--delay-ms", delay_ms, "artificial latency per call");
  app.add_option("--expected-key-env", key, "env var holding the bearer key clients must send");
  CLI11_PARSE(app, argc, argv);

  try {
    MockConfig cfg;
    cfg.behavior = mock_behavior_from_string(behavior);
    cfg.threshold = threshold;
    cfg.fail_first = fail_first;
    cfg.delay_ms = delay_ms;
    if (!key.empty()) {
      const char* v = std::getenv(key.c_str());
      if (!v) throw ValidationError("env var " + key + " is not set");
      cfg.expected_key = v;
    }
    MockServer server(load_manifest(manifest_path), cfg);
    std::cerr << "mock provider on http://127.0.0.1:" << port << "/v1 (" << to_string(cfg.behavior) << ")\n";
    server.serve(port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
