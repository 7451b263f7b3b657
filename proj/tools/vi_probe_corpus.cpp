// Writes the fixed vector/raster agreement corpus: for every case an Original,
// a perturbed and a hinted variant, each as <stem>.svg and <stem>.png.
//   vi-probe-corpus <out_dir> [--scale s]

#include <iostream>

#include "CLI11.hpp"
#include "viprobe/raster.hpp"
#include "viprobe/svg.hpp"
#include "viprobe/variants.hpp"

int main(int argc, char** argv) {
  using namespace viprobe;
  CLI::App app{"Vector/raster agreement corpus"};
  std::string out;
  double scale = 1.0;
  app.add_option("out_dir", out, "directory to write into")->required();
  app.add_option("--scale", scale, "pixels per scene unit");
  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(out);
    const struct {
      VariantKind kind;
      double alpha;
      std::uint64_t seed;
    } picks[] = {{VariantKind::O, 0, 0}, {VariantKind::P, 0.6, 7}, {VariantKind::PH, -0.4, 11}};
    int n = 0;
    for (const auto& d : Catalog::builtin().cases()) {
      for (const auto& p : picks) {
        const auto v = generate_variant(d.case_id, p.kind, p.alpha, p.seed);
        const std::string stem = out + "/case" + std::to_string(d.case_id) + "_" + to_string(p.kind);
        util::write_file_atomic(stem + ".svg", emit_vector(v.scene));
        const auto png = encode_png(rasterize(v.scene, RasterConfig{scale, 16}));
        util::write_file_atomic(stem + ".png", std::span<const std::uint8_t>(png));
        ++n;
      }
    }
    std::cout << n << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
