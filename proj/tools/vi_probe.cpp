// vi-probe gen|probe|score|report|study --config <path> [--out <dir>]
//
// Exit codes: 0 ok, 1 validation/config/input problems, 2 transport or auth.

#include <iostream>

#include "CLI11.hpp"
#include "viprobe/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace viprobe;
  CLI::App app{"Visual-illusion probing toolkit"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  int verbosity = 0;

  const char* names[][2] = {{"gen", "render the stimulus dataset and its manifest"},
                            {"probe", "query every configured model on the manifest"},
                            {"score", "compute per-model metric reports from response logs"},
                            {"report", "write CSV/JSON tables and static plots"},
                            {"study", "serve the human-baseline study API"}};
  for (auto& [name, help] : names) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_flag("-v,--verbose", verbosity, "more output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const auto cfg =
        ExperimentConfig::load(config_path, out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir));
    if (verbosity > 0) std::cerr << "output dir: " << cfg.output_dir.string() << "\n";
    if (cmd == "gen") {
      std::cout << cmd_gen(cfg).string() << "\n";
    } else if (cmd == "probe") {
      for (const auto& p : cmd_probe(cfg)) std::cout << p.string() << "\n";
    } else if (cmd == "score") {
      for (const auto& p : cmd_score(cfg)) std::cout << p.string() << "\n";
    } else if (cmd == "report") {
      std::cout << cmd_report(cfg).string() << "\n";
    } else if (cmd == "study") {
      cmd_study(cfg);
    }
    return 0;
  } catch (const AuthError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
