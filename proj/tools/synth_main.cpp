#include <iostream>

#include <CLI11.hpp>

#include "fixture.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Writes a synthetic posts/embeddings fixture and a matching config.json"};
  std::string out;
  engage::cli::FixtureOptions options;
  app.add_option("out", out, "Target directory")->required();
  app.add_option("--posts", options.posts, "Number of posts");
  app.add_option("--seed", options.seed, "Generator seed");
  app.add_option("--image-dim", options.image_dim, "Image embedding width");
  app.add_option("--text-dim", options.text_dim, "Text embedding width");
  bool clean = false;
  app.add_flag("--clean", clean, "Omit the deliberately broken rows");
  CLI11_PARSE(app, argc, argv);
  options.with_defects = !clean;
  try {
    engage::cli::write_fixture(out, options);
  } catch (const std::exception& e) {
    std::cerr << "engage_synth: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
