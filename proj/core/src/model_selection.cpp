#include "engage/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "engage/random.hpp"
#include "parallel.hpp"

namespace engage::dtree {

ConfusionMatrix ConfusionMatrix::of(std::span<const Label> truth,
                                    std::span<const Label> predicted) {
  if (truth.size() != predicted.size()) throw ValidationError("confusion: length mismatch");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++m.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  return m;
}

double macro_f1(std::span<const Label> truth, std::span<const Label> predicted) {
  const auto m = ConfusionMatrix::of(truth, predicted);
  double sum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto tp = static_cast<double>(m.counts[c][c]);
    const auto fn = static_cast<double>(m.counts[c][1 - c]);
    const auto fp = static_cast<double>(m.counts[1 - c][c]);
    const double denom = 2.0 * tp + fp + fn;
    sum += denom > 0.0 ? 2.0 * tp / denom : 0.0;
  }
  return sum / static_cast<double>(kNumClasses);
}

std::vector<Label> dummy_stratified(std::span<const Label> train, std::size_t count,
                                    std::uint64_t seed) {
  if (train.empty()) throw ValidationError("dummy_stratified: empty training labels");
  const auto high = static_cast<double>(std::count(train.begin(), train.end(), Label::kHigh));
  const double p_high = high / static_cast<double>(train.size());
  SplitMix64 rng(seed);
  std::vector<Label> out(count);
  for (auto& label : out) label = rng.uniform() < p_high ? Label::kHigh : Label::kLow;
  return out;
}

GridProfile parse_profile(std::string_view text) {
  if (text == "fast") return GridProfile::kFast;
  if (text == "full") return GridProfile::kFull;
  throw ValidationError("unknown grid profile '" + std::string(text) + "' (expected fast|full)");
}

std::vector<Hyperparameters> default_grid(GridProfile profile) {
  using resampling::Strategy;
  const bool full = profile == GridProfile::kFull;
  const std::vector<std::optional<int>> depths =
      full ? std::vector<std::optional<int>>{3, 4, 5, 6, 8, 10, 12, 15, 20, std::nullopt}
           : std::vector<std::optional<int>>{3, 5, 8, 12, std::nullopt};
  const std::vector<int> leaves = full ? std::vector<int>{1, 2, 5, 10, 20, 50}
                                       : std::vector<int>{1, 5, 20};
  const std::vector<int> splits = full ? std::vector<int>{2, 5, 10, 20, 40} : std::vector<int>{2};
  const std::vector<double> ratios = full ? std::vector<double>{0.5, 0.75, 1.0}
                                          : std::vector<double>{1.0};
  const std::vector<int> smote_ks = full ? std::vector<int>{3, 5, 7} : std::vector<int>{5};
  std::vector<Hyperparameters> grid;
  for (auto criterion : {Criterion::kGini, Criterion::kEntropy}) {
    for (const auto& depth : depths) {
      for (int leaf : leaves) {
        for (int split : splits) {
          for (auto weight : {ClassWeight::kUniform, ClassWeight::kBalanced}) {
            for (auto strategy : {Strategy::kNone, Strategy::kSmote, Strategy::kTomek,
                                  Strategy::kSmoteThenTomek}) {
              Hyperparameters hp;
              hp.criterion = criterion;
              hp.max_depth = depth;
              hp.min_samples_leaf = leaf;
              hp.min_samples_split = split;
              hp.class_weight = weight;
              hp.resampling.strategy = strategy;
              if (!hp.resampling.uses_smote()) {
                grid.push_back(hp);
                continue;
              }
              for (int k : smote_ks) {
                for (double ratio : ratios) {
                  hp.resampling.smote_k = k;
                  hp.resampling.target_ratio = ratio;
                  grid.push_back(hp);
                }
              }
            }
          }
        }
      }
    }
  }
  return grid;
}

namespace {

std::vector<std::string> distinct_groups(const LabeledDataset& data) {
  std::vector<std::string> groups(data.groups.begin(), data.groups.end());
  std::sort(groups.begin(), groups.end());
  groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
  return groups;
}

}  // namespace

std::vector<int> stratified_folds(const LabeledDataset& data, int folds, std::uint64_t seed,
                                  bool group_by) {
  if (folds < 2) throw ValidationError("folds must be >= 2");
  for (auto label : {Label::kLow, Label::kHigh}) {
    if (data.count(label) < static_cast<std::size_t>(folds)) {
      throw ValidationError("too few rows for stratified folds: class " +
                            std::string(to_string(label)) + " has " +
                            std::to_string(data.count(label)) + " rows for " +
                            std::to_string(folds) + " folds");
    }
  }
  std::vector<int> fold_of(data.rows(), 0);
  SplitMix64 rng(seed);
  if (!group_by) {
    std::size_t deal = 0;
    for (auto label : {Label::kLow, Label::kHigh}) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < data.rows(); ++i) {
        if (data.labels[i] == label) rows.push_back(i);
      }
      shuffle(std::span(rows), rng);
      for (auto r : rows) fold_of[r] = static_cast<int>(deal++ % static_cast<std::size_t>(folds));
    }
    return fold_of;
  }
  auto groups = distinct_groups(data);
  if (groups.size() < static_cast<std::size_t>(folds)) {
    throw ValidationError("group-by-influencer CV needs at least one group per fold");
  }
  shuffle(std::span(groups), rng);
  std::map<std::string, int> assigned;
  std::vector<std::size_t> size(static_cast<std::size_t>(folds), 0);
  std::map<std::string, std::size_t> group_size;
  for (const auto& g : data.groups) ++group_size[g];
  for (const auto& g : groups) {
    const auto smallest = static_cast<int>(std::min_element(size.begin(), size.end()) - size.begin());
    assigned[g] = smallest;
    size[static_cast<std::size_t>(smallest)] += group_size[g];
  }
  for (std::size_t i = 0; i < data.rows(); ++i) fold_of[i] = assigned[data.groups[i]];
  return fold_of;
}

std::vector<bool> stratified_split(const LabeledDataset& data, double test_fraction,
                                   std::uint64_t seed, bool group_by) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test_fraction must be in (0, 1)");
  }
  std::vector<bool> is_test(data.rows(), false);
  SplitMix64 rng(seed);
  if (!group_by) {
    for (auto label : {Label::kLow, Label::kHigh}) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < data.rows(); ++i) {
        if (data.labels[i] == label) rows.push_back(i);
      }
      if (rows.size() < 2) {
        throw ValidationError("stratified split needs >= 2 rows of class " +
                              std::string(to_string(label)));
      }
      shuffle(std::span(rows), rng);
      auto take = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
      take = std::clamp<std::size_t>(take, 1, rows.size() - 1);
      for (std::size_t t = 0; t < take; ++t) is_test[rows[t]] = true;
    }
    return is_test;
  }
  auto groups = distinct_groups(data);
  if (groups.size() < 2) throw ValidationError("group-by-influencer split needs >= 2 groups");
  shuffle(std::span(groups), rng);
  const auto target = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(data.rows())));
  std::map<std::string, bool> chosen;
  std::size_t taken = 0;
  for (std::size_t g = 0; g + 1 < groups.size() && taken < std::max<std::size_t>(target, 1); ++g) {
    chosen[groups[g]] = true;
    taken += static_cast<std::size_t>(std::count(data.groups.begin(), data.groups.end(), groups[g]));
  }
  for (std::size_t i = 0; i < data.rows(); ++i) is_test[i] = chosen.count(data.groups[i]) > 0;
  return is_test;
}

namespace {

bool simpler(const Hyperparameters& a, const Hyperparameters& b) {
  const int da = a.max_depth.value_or(std::numeric_limits<int>::max());
  const int db = b.max_depth.value_or(std::numeric_limits<int>::max());
  if (da != db) return da < db;
  return a.min_samples_leaf > b.min_samples_leaf;
}

}  // namespace

GridSearchResult grid_search(const LabeledDataset& data, std::span<const Hyperparameters> grid,
                             const GridSearchOptions& options) {
  if (grid.empty()) throw ValidationError("grid_search: empty grid");
  for (const auto& hp : grid) hp.validate();
  const auto fold_of = stratified_folds(data, options.folds,
                                        derive_seed(options.seed, "cv/folds"),
                                        options.group_by_influencer);

  // Grid points sharing a resampling plan share one resampled training fold.
  std::map<std::string, std::vector<std::size_t>> by_plan;
  std::vector<std::string> plan_order;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto key = grid[g].resampling.describe();
    auto [it, inserted] = by_plan.try_emplace(key);
    if (inserted) plan_order.push_back(key);
    it->second.push_back(g);
  }

  const auto folds = static_cast<std::size_t>(options.folds);
  std::vector<std::vector<double>> fold_scores(grid.size(), std::vector<double>(folds, 0.0));
  std::vector<bool> infeasible(grid.size(), false);
  GridSearchResult result;

  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> validation_rows;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      (static_cast<std::size_t>(fold_of[i]) == f ? validation_rows : train_rows).push_back(i);
    }
    const auto train = data.subset(train_rows);
    const auto validation = data.subset(validation_rows);

    for (const auto& key : plan_order) {
      const auto& points = by_plan[key];
      auto plan = grid[points.front()].resampling;
      plan.seed = derive_seed(options.seed, "cv/resample/" + key, f);
      resampling::ResampleResult resampled;
      try {
        resampled = resampling::apply(train, plan);
      } catch (const ValidationError& e) {
        for (auto g : points) infeasible[g] = true;
        result.warnings.push_back("fold " + std::to_string(f) + ", " + key + ": " + e.what());
        continue;
      }
      if (resampled.data.count(Label::kLow) == 0 || resampled.data.count(Label::kHigh) == 0) {
        for (auto g : points) infeasible[g] = true;
        continue;
      }
      if (options.observer) {
        options.observer(FoldTrace{static_cast<int>(f), key, points, validation_rows,
                                   &resampled.data, &validation});
      }
      detail::parallel_for(points.size(), options.threads, [&](std::size_t k) {
        const auto g = points[k];
        if (infeasible[g]) return;
        const auto model = fit_tree(resampled.data, grid[g]);
        fold_scores[g][f] = macro_f1(validation.labels, model.predict(validation.features));
      });
    }
  }

  result.scores.assign(grid.size(), -std::numeric_limits<double>::infinity());
  bool any = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (infeasible[g]) continue;
    double sum = 0.0;
    for (double s : fold_scores[g]) sum += s;
    result.scores[g] = sum / static_cast<double>(folds);
    if (!any || result.scores[g] > result.cv_score ||
        (result.scores[g] == result.cv_score && simpler(grid[g], grid[result.best_index]))) {
      result.best_index = g;
      result.cv_score = result.scores[g];
      any = true;
    }
  }
  if (!any) throw ValidationError("grid_search: no feasible grid point");
  result.best = grid[result.best_index];
  return result;
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

EvalReport evaluate(const LabeledDataset& data, const Hyperparameters& hp,
                    const EvalOptions& options) {
  if (options.partitions < 1) throw ValidationError("evaluate: partitions must be >= 1");
  EvalReport report;
  for (int p = 0; p < options.partitions; ++p) {
    const auto pi = static_cast<std::uint64_t>(p);
    const auto is_test = stratified_split(data, options.test_fraction,
                                          derive_seed(options.seed, "eval/split", pi),
                                          options.group_by_influencer);
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (std::size_t i = 0; i < data.rows(); ++i) (is_test[i] ? test_rows : train_rows).push_back(i);
    const auto train = data.subset(train_rows);
    const auto test = data.subset(test_rows);

    auto plan = hp.resampling;
    plan.seed = derive_seed(options.seed, "eval/resample", pi);
    const auto fitted = resampling::apply(train, plan);
    const auto model = fit_tree(fitted.data, hp);
    const auto predicted = model.predict(test.features);
    report.partition_scores.push_back(macro_f1(test.labels, predicted));
    report.confusion.push_back(ConfusionMatrix::of(test.labels, predicted));

    const auto dummy = dummy_stratified(train.labels, test.rows(),
                                        derive_seed(options.seed, "eval/dummy", pi));
    report.dummy_scores.push_back(macro_f1(test.labels, dummy));
    report.dummy_confusion.push_back(ConfusionMatrix::of(test.labels, dummy));
  }
  std::tie(report.f1_macro_mean, report.f1_macro_std) = mean_std(report.partition_scores);
  std::tie(report.dummy_f1_mean, report.dummy_f1_std) = mean_std(report.dummy_scores);
  return report;
}

nlohmann::json to_json(const EvalReport& r) {
  auto cm = [](const std::vector<ConfusionMatrix>& ms) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& m : ms) out.push_back(m.counts);
    return out;
  };
  return {{"f1_macro_mean", r.f1_macro_mean},
          {"f1_macro_std", r.f1_macro_std},
          {"partition_scores", r.partition_scores},
          {"dummy_f1_mean", r.dummy_f1_mean},
          {"dummy_f1_std", r.dummy_f1_std},
          {"dummy_scores", r.dummy_scores},
          {"confusion", cm(r.confusion)},
          {"dummy_confusion", cm(r.dummy_confusion)}};
}

}  // namespace engage::dtree
