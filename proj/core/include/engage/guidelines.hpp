#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "engage/tree.hpp"

namespace engage::dtree {

enum class Comparator : std::uint8_t { kLessEqual, kGreater };

struct Condition {
  std::string feature;
  int feature_index = 0;
  Comparator comparator = Comparator::kLessEqual;
  double threshold = 0.0;
  /// Depth of the node whose test produced this (tightest) bound.
  int depth = 0;

  bool holds(double value) const noexcept {
    return comparator == Comparator::kLessEqual ? value <= threshold : value > threshold;
  }
  /// "n_mentions <= 2.5"
  std::string to_string() const;
};

/// Root-to-leaf conditions of one leaf. Repeated tests on a feature are
/// collapsed to the tightest interval: at most one '>' and one '<=' per
/// feature, features in order of first appearance on the path.
struct GuidelinePath {
  std::vector<Condition> conditions;
  Label predicted_class = Label::kHigh;
  std::size_t support = 0;  ///< training rows in the leaf
  double purity = 0.0;      ///< share of leaf rows in predicted_class
  int leaf_node = 0;
  int leaf_depth = 0;

  bool matches(std::span<const double> row) const noexcept;
};

struct GuidelineResult {
  std::vector<GuidelinePath> paths;
  Warnings warnings;
};

/// One path per leaf predicting `target` (depth-first, left before right).
GuidelineResult extract_guidelines(const TreeModel& model, Label target = Label::kHigh);

nlohmann::json to_json(const GuidelinePath& path);
nlohmann::json to_json(const GuidelineResult& result);

/// Markdown with an indented tree view cut at `max_depth_render` plus the
/// guideline list; conditions deeper than the cut are summarised.
std::string render_guidelines_markdown(const TreeModel& model, const GuidelineResult& guidelines,
                                       int max_depth_render = 3);

}  // namespace engage::dtree
