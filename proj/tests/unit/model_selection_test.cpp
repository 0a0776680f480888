#include <gtest/gtest.h>

#include <map>
#include <set>

#include "engage/model_selection.hpp"
#include "synthetic.hpp"

namespace engage::dtree {
namespace {

constexpr Label H = Label::kHigh;
constexpr Label L = Label::kLow;

LabeledDataset separable(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  LabeledDataset d;
  d.feature_names = {"signal", "noise"};
  d.features.resize(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const bool high = i % 4 == 0;
    const auto r = static_cast<Eigen::Index>(i);
    d.features(r, 0) = high ? 10.0 + rng.uniform() : rng.uniform();
    d.features(r, 1) = rng.uniform();
    d.labels.push_back(high ? H : L);
    d.source_rows.push_back(i);
    d.groups.push_back("inf" + std::to_string(i % 29));
  }
  return d;
}

TEST(MacroF1, HandComputed) {
  const std::vector<Label> truth{H, H, L, L};
  EXPECT_NEAR(macro_f1(truth, std::vector<Label>{H, L, L, L}), (2.0 / 3.0 + 4.0 / 5.0) / 2.0, 1e-15);
  EXPECT_EQ(macro_f1(truth, truth), 1.0);
  EXPECT_EQ(macro_f1(truth, std::vector<Label>{L, L, H, H}), 0.0);
  const auto cm = ConfusionMatrix::of(truth, std::vector<Label>{H, L, L, L});
  EXPECT_EQ(cm.counts[1][1], 1U);
  EXPECT_EQ(cm.counts[1][0], 1U);
  EXPECT_EQ(cm.counts[0][0], 2U);
}

TEST(Dummy, FollowsTrainingFrequencies) {
  const std::vector<Label> all_high(10, H);
  const auto p = dummy_stratified(all_high, 50, 1);
  EXPECT_EQ(std::count(p.begin(), p.end(), H), 50);
  std::vector<Label> train(100, L);
  std::fill(train.begin(), train.begin() + 25, H);
  const auto q = dummy_stratified(train, 10000, 7);
  const double share = static_cast<double>(std::count(q.begin(), q.end(), H)) / 10000.0;
  EXPECT_GE(share, 0.23);
  EXPECT_LE(share, 0.27);
  EXPECT_EQ(q, dummy_stratified(train, 10000, 7));
  EXPECT_NE(q, dummy_stratified(train, 10000, 8));
}

TEST(Grid, DefaultSizes) {
  const auto full = default_grid(GridProfile::kFull);
  EXPECT_EQ(full.size(), 24000U);
  EXPECT_GE(full.size(), 20000U);
  const auto fast = default_grid(GridProfile::kFast);
  EXPECT_EQ(fast.size(), 240U);
  std::set<std::string> distinct;
  for (const auto& hp : full) distinct.insert(hp.describe());
  EXPECT_EQ(distinct.size(), full.size());
  for (const auto& hp : fast) EXPECT_NO_THROW(hp.validate());
  EXPECT_EQ(parse_profile("full"), GridProfile::kFull);
  EXPECT_THROW(parse_profile("huge"), ValidationError);
}

TEST(Folds, StratifiedAndGrouped) {
  const auto d = separable(203, 3);
  const auto folds = stratified_folds(d, 5, 11);
  std::map<int, std::array<int, 2>> per;
  for (std::size_t i = 0; i < folds.size(); ++i) ++per[folds[i]][static_cast<int>(d.labels[i])];
  ASSERT_EQ(per.size(), 5U);
  for (const auto& [f, c] : per) {
    EXPECT_NEAR(c[1], 51.0 / 5.0, 1.0);
    EXPECT_NEAR(c[0], 152.0 / 5.0, 1.0);
  }
  EXPECT_EQ(folds, stratified_folds(d, 5, 11));

  const auto grouped = stratified_folds(d, 5, 11, true);
  std::map<std::string, std::set<int>> seen;
  for (std::size_t i = 0; i < grouped.size(); ++i) seen[d.groups[i]].insert(grouped[i]);
  for (const auto& [g, fs] : seen) EXPECT_EQ(fs.size(), 1U) << g;

  const auto tiny = separable(12, 1);  // 3 High rows
  EXPECT_THROW(stratified_folds(tiny, 5, 1), ValidationError);
}

TEST(Split, StratifiedHoldout) {
  const auto d = separable(200, 5);
  const auto mask = stratified_split(d, 0.25, 3);
  std::array<int, 2> test{};
  for (std::size_t i = 0; i < mask.size(); ++i) test[static_cast<int>(d.labels[i])] += mask[i];
  EXPECT_EQ(test[1], 13);  // round(0.25 * 50)
  EXPECT_EQ(test[0], 38);  // round(0.25 * 150)
  const auto grouped = stratified_split(d, 0.25, 3, true);
  std::map<std::string, std::set<bool>> sides;
  for (std::size_t i = 0; i < grouped.size(); ++i) sides[d.groups[i]].insert(grouped[i]);
  for (const auto& [g, s] : sides) EXPECT_EQ(s.size(), 1U);
}

TEST(GridSearch, SingletonAndOrderIndependentScores) {
  const auto d = testing::noisy_rules(240, 4, 6);
  auto grid = default_grid(GridProfile::kFast);
  grid.resize(24);
  GridSearchOptions opt;
  opt.seed = 5;
  const auto all = grid_search(d, grid, opt);
  for (std::size_t i = 0; i < grid.size(); i += 7) {
    const std::vector<Hyperparameters> one{grid[i]};
    const auto single = grid_search(d, one, opt);
    EXPECT_EQ(single.best_index, 0U);
    EXPECT_EQ(single.cv_score, all.scores[i]);
  }
  EXPECT_EQ(all.cv_score, *std::max_element(all.scores.begin(), all.scores.end()));

  // A strictly worse extra point leaves the winner's score alone.
  Hyperparameters stump;
  stump.max_depth = 1;
  auto extended = grid;
  extended.push_back(stump);
  const auto more = grid_search(d, extended, opt);
  if (more.scores.back() < all.cv_score) EXPECT_EQ(more.cv_score, all.cv_score);
}

TEST(GridSearch, TiesPreferSimplerModels) {
  const auto d = separable(200, 8);
  Hyperparameters deep, shallow, small_leaf, big_leaf;
  deep.max_depth = 6;
  shallow.max_depth = 2;
  small_leaf.max_depth = 2;
  big_leaf.max_depth = 2;
  big_leaf.min_samples_leaf = 5;
  GridSearchOptions opt;
  const std::vector<Hyperparameters> g1{deep, shallow};
  const auto r1 = grid_search(d, g1, opt);
  EXPECT_EQ(r1.scores[0], r1.scores[1]);
  EXPECT_EQ(r1.best_index, 1U);
  const std::vector<Hyperparameters> g2{small_leaf, big_leaf};
  EXPECT_EQ(grid_search(d, g2, opt).best_index, 1U);
}

TEST(GridSearch, ValidationFoldsAreUntouchedOriginals) {
  const auto d = testing::blobs(120, 40, 3, 1.0, 2);
  auto grid = default_grid(GridProfile::kFast);
  GridSearchOptions opt;
  opt.seed = 3;
  std::map<std::pair<int, std::string>, std::size_t> seen;
  std::vector<std::size_t> coverage(grid.size(), 0);
  opt.observer = [&](const FoldTrace& t) {
    ASSERT_EQ(t.validation->rows(), t.validation_rows.size());
    for (std::size_t i = 0; i < t.validation_rows.size(); ++i) {
      const auto src = static_cast<Eigen::Index>(t.validation_rows[i]);
      EXPECT_TRUE((t.validation->features.row(static_cast<Eigen::Index>(i)).array() ==
                   d.features.row(src).array())
                      .all());
      EXPECT_EQ(t.validation->labels[i], d.labels[t.validation_rows[i]]);
      EXPECT_FALSE(t.validation->is_synthetic(i));
    }
    std::set<std::size_t> held(t.validation_rows.begin(), t.validation_rows.end());
    for (std::size_t i = 0; i < t.train->rows(); ++i) {
      if (!t.train->is_synthetic(i)) EXPECT_FALSE(held.contains(t.train->source_rows[i]));
    }
    ++seen[{t.fold, t.plan}];
    for (auto g : t.grid_points) ++coverage[g];
  };
  grid_search(d, grid, opt);
  for (const auto& [key, count] : seen) EXPECT_EQ(count, 1U);
  for (auto c : coverage) EXPECT_EQ(c, 5U);
}

TEST(Evaluate, MeanAndStdRecompute) {
  const auto d = testing::noisy_rules(300, 4, 8);
  Hyperparameters hp;
  hp.max_depth = 4;
  hp.resampling = {resampling::Strategy::kSmote, 5, 1.0, 0};
  EvalOptions opt;
  opt.seed = 4;
  const auto r = evaluate(d, hp, opt);
  ASSERT_EQ(r.partition_scores.size(), 3U);
  ASSERT_EQ(r.dummy_scores.size(), 3U);
  const auto [m, s] = mean_std(r.partition_scores);
  EXPECT_EQ(m, r.f1_macro_mean);
  EXPECT_EQ(s, r.f1_macro_std);
  double mean = 0;
  for (double v : r.partition_scores) mean += v / 3.0;
  double var = 0;
  for (double v : r.partition_scores) var += (v - mean) * (v - mean) / 3.0;
  EXPECT_NEAR(r.f1_macro_mean, mean, 1e-12);
  EXPECT_NEAR(r.f1_macro_std, std::sqrt(var), 1e-12);
  std::size_t tested = 0;
  for (const auto& row : r.confusion[0].counts) tested += row[0] + row[1];
  EXPECT_EQ(tested, 75U);
  EXPECT_GT(r.f1_macro_mean, r.dummy_f1_mean);
  const auto again = evaluate(d, hp, opt);
  EXPECT_EQ(again.partition_scores, r.partition_scores);
  EXPECT_EQ(again.dummy_scores, r.dummy_scores);
}

}  // namespace
}  // namespace engage::dtree
