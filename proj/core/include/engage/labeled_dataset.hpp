#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "engage/common.hpp"
#include "engage/dataset.hpp"

namespace engage {

enum class Label : std::uint8_t { kLow = 0, kHigh = 1 };

inline constexpr std::size_t kNumClasses = 2;
std::string_view to_string(Label label);

/// Feature matrix plus binary High/Low labels from quantile thresholding.
struct LabeledDataset {
  static constexpr std::size_t kSynthetic = std::numeric_limits<std::size_t>::max();

  std::vector<std::string> feature_names;
  Matrix features;
  std::vector<Label> labels;
  /// Row index in the dataset the labels were derived from; kSynthetic for
  /// rows created by oversampling.
  std::vector<std::size_t> source_rows;
  /// Grouping key per row (influencer id), empty for synthetic rows.
  std::vector<std::string> groups;
  double threshold_used = 0.0;
  Metric metric = Metric::kLikes;

  std::size_t rows() const noexcept { return labels.size(); }
  std::size_t cols() const noexcept { return feature_names.size(); }
  bool is_synthetic(std::size_t row) const noexcept { return source_rows[row] == kSynthetic; }
  std::size_t count(Label label) const noexcept;

  /// Rows at `indices`, in order (source_rows/groups carried along).
  LabeledDataset subset(std::span<const std::size_t> indices) const;
};

/// High iff engagement >= the 0.75 quantile (ties at the threshold are High).
/// Needs >= 8 rows; throws DegenerateError("degenerate labeling") if a class is empty.
LabeledDataset label_engagement(const FeatureTable& table, Metric metric);

/// Same rule on raw arrays (used by tests and synthetic benchmarks).
LabeledDataset label_engagement(const Matrix& features, std::vector<std::string> feature_names,
                                std::span<const double> engagement, Metric metric,
                                std::vector<std::string> groups = {});

}  // namespace engage
