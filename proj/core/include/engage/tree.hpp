#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "engage/labeled_dataset.hpp"
#include "engage/resampling.hpp"

namespace engage::dtree {

enum class Criterion : std::uint8_t { kGini, kEntropy };
enum class ClassWeight : std::uint8_t { kUniform, kBalanced };

std::string_view to_string(Criterion c);
std::string_view to_string(ClassWeight w);

struct Hyperparameters {
  Criterion criterion = Criterion::kGini;
  std::optional<int> max_depth;  ///< nullopt: unlimited. Must be >= 1 when set.
  int min_samples_leaf = 1;
  int min_samples_split = 2;
  ClassWeight class_weight = ClassWeight::kUniform;
  resampling::ResamplingPlan resampling;

  void validate() const;
  std::string describe() const;
};

nlohmann::json to_json(const Hyperparameters& hp);
Hyperparameters hyperparameters_from_json(const nlohmann::json& j);

struct TreeNode {
  static constexpr int kNone = -1;

  int feature = kNone;  ///< kNone for leaves
  double threshold = 0.0;
  int left = kNone;   ///< samples with x[feature] <= threshold
  int right = kNone;  ///< samples with x[feature] > threshold
  /// Weighted class mass (class weights applied), indexed by Label.
  std::array<double, kNumClasses> class_counts{};
  /// Raw sample counts, indexed by Label.
  std::array<std::size_t, kNumClasses> samples{};
  double impurity = 0.0;
  int depth = 0;

  bool is_leaf() const noexcept { return feature == kNone; }
  std::size_t n_samples() const noexcept { return samples[0] + samples[1]; }
  /// argmax of class_counts; Low on an exact tie.
  Label predicted() const noexcept {
    return class_counts[1] > class_counts[0] ? Label::kHigh : Label::kLow;
  }
};

/// Fitted CART classifier. Node 0 is the root.
class TreeModel {
 public:
  TreeModel() = default;
  TreeModel(std::vector<std::string> feature_names, Hyperparameters hp,
            std::vector<TreeNode> nodes, std::vector<double> raw_importances);

  /// Index of the leaf reached by `row`.
  int apply(std::span<const double> row) const;
  Label predict(std::span<const double> row) const;
  std::vector<Label> predict(const Matrix& rows) const;

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const Hyperparameters& hyperparameters() const noexcept { return hp_; }
  /// Total weighted impurity decrease per feature, normalised so max == 1
  /// (all zeros when the tree has no split).
  const std::vector<double>& importances() const noexcept { return importances_; }
  std::size_t split_count() const noexcept;
  int depth() const noexcept;

  /// FNV-1a over the ordered feature names.
  std::string schema_hash() const;

  nlohmann::json to_json() const;
  static TreeModel from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> feature_names_;
  Hyperparameters hp_;
  std::vector<TreeNode> nodes_;
  std::vector<double> importances_;
};

/// Greedy CART. At each node the (feature, threshold) pair minimising the
/// weighted child impurity is chosen among midpoints of consecutive distinct
/// values; ties go to the lowest feature index, then the lowest threshold.
/// A node becomes a leaf when pure, at max_depth, below min_samples_split,
/// or when no candidate leaves min_samples_leaf rows on both sides.
/// Resampling in hp is not applied here (see model_selection).
TreeModel fit_tree(const LabeledDataset& data, const Hyperparameters& hp);

struct FeatureImportance {
  std::string feature;
  double importance = 0.0;
};

struct ImportanceReport {
  /// Descending importance, ties by feature name.
  std::vector<FeatureImportance> ranked;
  Warnings warnings;
};

ImportanceReport feature_importance(const TreeModel& model);

}  // namespace engage::dtree
