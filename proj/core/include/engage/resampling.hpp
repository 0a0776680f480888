#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "engage/labeled_dataset.hpp"

namespace engage::resampling {

enum class Strategy : std::uint8_t { kNone, kSmote, kTomek, kSmoteThenTomek };

std::string_view to_string(Strategy strategy);
Strategy parse_strategy(std::string_view text);

struct ResamplingPlan {
  Strategy strategy = Strategy::kNone;
  int smote_k = 5;
  /// minority / majority after oversampling, in (0, 1].
  double target_ratio = 1.0;
  std::uint64_t seed = 0;

  bool uses_smote() const noexcept {
    return strategy == Strategy::kSmote || strategy == Strategy::kSmoteThenTomek;
  }
  bool uses_tomek() const noexcept {
    return strategy == Strategy::kTomek || strategy == Strategy::kSmoteThenTomek;
  }
  /// Canonical text, e.g. "smote_then_tomek(k=5,ratio=1)". Seed excluded.
  std::string describe() const;
};

/// Per-feature z-score parameters fitted on a table. Zero-variance columns get scale 1.
struct Standardization {
  Vector mean;
  Vector scale;

  static Standardization fit(const Matrix& features);
  Matrix apply(const Matrix& features) const;
};

struct ResampleResult {
  LabeledDataset data;
  /// Parameters of the distance space used by the last pass.
  Standardization standardization;
  int effective_k = 0;
  std::size_t synthetic_added = 0;
  std::size_t removed = 0;
  Warnings warnings;
};

/// Minority class: the smaller one (High on an exact tie).
Label minority_label(const LabeledDataset& data);

/// Adds synthetic minority rows until minority/majority >= target_ratio.
/// Each row is x + lambda (x_nn - x) with x a uniformly drawn minority row,
/// x_nn uniformly drawn among its k nearest minority neighbours (Euclidean,
/// z-scored space) and lambda ~ U[0, 1). Originals are untouched and come
/// first; synthetic rows are appended with source_rows = kSynthetic.
ResampleResult smote(const LabeledDataset& data, const ResamplingPlan& plan);

/// Opposite-class mutual nearest-neighbour pairs (a < b), in z-scored space.
std::vector<std::pair<std::size_t, std::size_t>> find_tomek_links(const LabeledDataset& data);

/// Removes the majority-class endpoint of every Tomek link, re-fitting the
/// distance space and re-scanning until no link remains. The majority class
/// is fixed from the input.
ResampleResult tomek_remove(const LabeledDataset& data);
/// As above with the class whose endpoints are removed given explicitly.
ResampleResult tomek_remove(const LabeledDataset& data, Label majority);

/// Applies plan.strategy; smote_then_tomek is tomek_remove(smote(data)).
ResampleResult apply(const LabeledDataset& data, const ResamplingPlan& plan);

}  // namespace engage::resampling
