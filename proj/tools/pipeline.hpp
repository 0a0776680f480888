#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "engage/dataset.hpp"
#include "engage/model_selection.hpp"

namespace engage::cli {

namespace fs = std::filesystem;

struct TopicsSettings {
  std::size_t k = 50;
  int components = 100;
  bool global_pca = false;
  std::vector<std::size_t> k_list{1, 3, 5, 10, 20, 30, 50};
};

/// Effective run configuration: the config file with command-line overrides
/// applied. Relative paths are resolved against the config file's directory.
struct RunConfig {
  fs::path posts;
  std::optional<fs::path> image_embeddings;
  std::optional<fs::path> text_embeddings;
  std::optional<Timestamp> collection_end;
  std::vector<std::string> slices{"all"};
  dtree::GridProfile profile = dtree::GridProfile::kFast;
  std::uint64_t seed = 42;
  fs::path out;
  int folds = 5;
  bool group_by_influencer = false;
  TopicsSettings topics;
  int max_depth_render = 3;
  unsigned threads = 0;
  /// Hash of every setting that can change an analytical result (the output
  /// directory and thread count are excluded).
  std::string config_hash;

  nlohmann::json meta() const;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> slices;
  std::optional<std::string> profile;
  std::optional<unsigned> threads;
};

RunConfig load_config(const fs::path& config_file, const Overrides& overrides = {});
RunConfig parse_config(const nlohmann::json& config, const fs::path& base_dir,
                       const Overrides& overrides = {});

/// Pattern "Category/Tier/metric" where any component may be "*" or omitted
/// (omitted trailing components match everything); "all" matches every slice.
bool slice_matches(std::string_view pattern, const SliceKey& key);
/// Throws ValidationError for a pattern naming an unknown category, tier or metric.
void validate_slice_pattern(std::string_view pattern);
std::vector<std::string> split_list(std::string_view text);

/// Holds `<out>/.lock` for the lifetime of the object. Throws Error when the
/// directory is already owned by another run.
class RunLock {
 public:
  explicit RunLock(const fs::path& out_dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
};

void cmd_ingest(const RunConfig& config, std::ostream& log);
void cmd_correlate(const RunConfig& config, std::ostream& log);
void cmd_train(const RunConfig& config, std::ostream& log);
void cmd_topics(const RunConfig& config, std::ostream& log);
void cmd_report(const RunConfig& config, std::ostream& log);

}  // namespace engage::cli
