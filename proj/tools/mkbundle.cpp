// Synthesizes a random-weight feature-extractor / backbone bundle. The
// licensed pretrained weights cannot be redistributed; these stand-ins keep
// the full pipeline (metric extractors, classifier trunks) runnable offline.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "affgan/core/error.hpp"
#include "affgan/core/rng.hpp"
#include "affgan/nn/bundle.hpp"
#include "affgan/nn/layers.hpp"
#include "affgan/nn/net.hpp"

using namespace affgan;

int main(int argc, char** argv) {
  CLI::App app{"synthesize a random-weight .afnb feature bundle"};
  std::string out, name;
  int input_size = 32, feature_dim = 64, width = 16;
  uint64_t seed = 416;
  app.add_option("--out", out, "bundle path to write")->required();
  app.add_option("--name", name, "bundle name (default: file stem)");
  app.add_option("--input-size", input_size, "square input size, power of two >= 8")
      ->capture_default_str();
  app.add_option("--feature-dim", feature_dim, "output feature dimension")
      ->capture_default_str();
  app.add_option("--width", width, "first conv width")->capture_default_str();
  app.add_option("--seed", seed, "init seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    if (input_size < 8 || (input_size & (input_size - 1)) != 0) {
      throw ValidationError("--input-size must be a power of two >= 8");
    }
    if (feature_dim < 1 || width < 1) {
      throw ValidationError("--feature-dim and --width must be positive");
    }
    if (name.empty()) name = std::filesystem::path(out).stem().string();
    const auto parent = std::filesystem::path(out).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);

    Rng init = Rng::stream(seed, "mkbundle");
    nn::Net net;
    int cur = input_size, ch = 3, w = width;
    while (cur > 4) {
      net.add<nn::Conv2d>(ch, w, 4, 2, 1, true, false, init);
      net.add<nn::LeakyReLU>(0.2f);
      ch = w;
      w = std::min(w * 2, width * 8);
      cur /= 2;
    }
    net.add<nn::Conv2d>(ch, feature_dim, 3, 1, 1, true, false, init);
    net.add<nn::GlobalAvgPool>();

    nn::Bundle b;
    b.set_meta("name", name);
    b.set_meta("input_size", std::to_string(input_size));
    b.set_meta("feature_dim", std::to_string(feature_dim));
    b.set_meta("arch", net.architecture());
    nn::bundle_put_params(b, "", net.params(), false);
    nn::write_bundle(out, b);
    std::cout << "wrote " << out << " (" << net.parameter_count()
              << " params, " << feature_dim << "-dim features)\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
