#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "engage/tree.hpp"

namespace engage::dtree {

/// counts[truth][predicted], indexed by Label.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

  static ConfusionMatrix of(std::span<const Label> truth, std::span<const Label> predicted);
};

/// Unweighted mean of the per-class F1 scores; a class with no true and no
/// predicted rows contributes 0.
double macro_f1(std::span<const Label> truth, std::span<const Label> predicted);

/// i.i.d. draws with P(High) equal to its frequency in `train`.
std::vector<Label> dummy_stratified(std::span<const Label> train, std::size_t count,
                                    std::uint64_t seed);

enum class GridProfile { kFast, kFull };
GridProfile parse_profile(std::string_view text);

/// Cartesian grid without duplicate points: the SMOTE axes only multiply
/// the strategies that oversample.
/// Full: criterion {gini, entropy} x max_depth {3,4,5,6,8,10,12,15,20,none}
/// x min_samples_leaf {1,2,5,10,20,50} x min_samples_split {2,5,10,20,40}
/// x class_weight {uniform, balanced} x resampling, where resampling is
/// none, tomek, or {smote, smote_then_tomek} x smote_k {3,5,7} x ratio {0.5, 0.75, 1.0}:
/// 1,200 x 20 = 24,000 points.
/// Fast: criterion x max_depth {3,5,8,12,none} x min_samples_leaf {1,5,20}
/// x min_samples_split {2} x class_weight x resampling (k 5, ratio 1.0) = 240 points.
std::vector<Hyperparameters> default_grid(GridProfile profile);

/// Fold id per row. Rows of each class are shuffled and dealt round-robin,
/// the dealing position carried across classes. With group_by, whole groups
/// are dealt to the currently smallest fold instead. Throws ValidationError
/// when a class has fewer rows than folds.
std::vector<int> stratified_folds(const LabeledDataset& data, int folds, std::uint64_t seed,
                                  bool group_by = false);

/// Test-set mask for a stratified split: round(test_fraction * n_c) rows of
/// each class, clamped to [1, n_c - 1]. With group_by, whole groups are
/// taken until the test share is reached.
std::vector<bool> stratified_split(const LabeledDataset& data, double test_fraction,
                                   std::uint64_t seed, bool group_by = false);

/// What a CV fold saw, reported to GridSearchOptions::observer.
struct FoldTrace {
  int fold = 0;
  std::string plan;
  std::vector<std::size_t> grid_points;
  std::vector<std::size_t> validation_rows;  ///< indices into the searched dataset
  const LabeledDataset* train = nullptr;      ///< after resampling
  const LabeledDataset* validation = nullptr;
};

struct GridSearchOptions {
  int folds = 5;
  std::uint64_t seed = 0;
  bool group_by_influencer = false;
  /// 0: hardware concurrency.
  unsigned threads = 0;
  std::function<void(const FoldTrace&)> observer;
};

struct GridSearchResult {
  std::size_t best_index = 0;
  Hyperparameters best;
  double cv_score = 0.0;
  /// Mean macro-F1 per grid point; -inf where resampling was infeasible.
  std::vector<double> scores;
  Warnings warnings;
};

/// Stratified k-fold CV per grid point with resampling applied inside each
/// training fold only. Best by mean macro-F1; ties go to the smaller
/// max_depth, then the larger min_samples_leaf, then the earlier grid point.
GridSearchResult grid_search(const LabeledDataset& data, std::span<const Hyperparameters> grid,
                             const GridSearchOptions& options);

struct EvalOptions {
  int partitions = 3;
  double test_fraction = 0.25;
  std::uint64_t seed = 0;
  bool group_by_influencer = false;
};

struct EvalReport {
  std::vector<double> partition_scores;
  double f1_macro_mean = 0.0;
  double f1_macro_std = 0.0;  ///< population standard deviation
  std::vector<double> dummy_scores;
  double dummy_f1_mean = 0.0;
  double dummy_f1_std = 0.0;
  std::vector<ConfusionMatrix> confusion;
  std::vector<ConfusionMatrix> dummy_confusion;
};

/// Mean and population standard deviation.
std::pair<double, double> mean_std(std::span<const double> values);

/// Repeated stratified holdout: per partition, fit `hp` (with its resampling
/// plan) on the training share and score macro-F1 on the untouched test
/// share; a stratified dummy is scored on the same splits.
EvalReport evaluate(const LabeledDataset& data, const Hyperparameters& hp,
                    const EvalOptions& options);

nlohmann::json to_json(const EvalReport& report);

}  // namespace engage::dtree
