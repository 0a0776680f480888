#pragma once

#include <cstdint>
#include <filesystem>

namespace engage::cli {

struct FixtureOptions {
  std::size_t posts = 1200;
  std::uint64_t seed = 7;
  int image_dim = 64;
  int text_dim = 32;
  /// Adds a handful of malformed, sub-influencer and out-of-window rows.
  bool with_defects = true;
};

/// Writes a synthetic dataset: posts.csv, embeddings/image.{bin,json},
/// embeddings/text.{bin,json} and a config.json pointing at them.
void write_fixture(const std::filesystem::path& dir, const FixtureOptions& options);

}  // namespace engage::cli
