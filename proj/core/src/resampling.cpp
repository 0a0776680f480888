#include "engage/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "engage/csv.hpp"
#include "engage/random.hpp"

namespace engage::resampling {

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kNone: return "none";
    case Strategy::kSmote: return "smote";
    case Strategy::kTomek: return "tomek";
    case Strategy::kSmoteThenTomek: return "smote_then_tomek";
  }
  return "none";
}

Strategy parse_strategy(std::string_view text) {
  for (auto s : {Strategy::kNone, Strategy::kSmote, Strategy::kTomek, Strategy::kSmoteThenTomek}) {
    if (to_string(s) == text) return s;
  }
  throw ValidationError("unknown resampling strategy '" + std::string(text) + "'");
}

std::string ResamplingPlan::describe() const {
  std::string out(to_string(strategy));
  if (uses_smote()) {
    out += "(k=" + std::to_string(smote_k) + ",ratio=" + csv::format_double(target_ratio) + ")";
  }
  return out;
}

Standardization Standardization::fit(const Matrix& features) {
  Standardization s;
  const auto n = static_cast<double>(features.rows());
  s.mean = features.colwise().mean().transpose();
  s.scale = Vector::Ones(features.cols());
  if (features.rows() < 2) return s;
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    const double var = (features.col(c).array() - s.mean(c)).square().sum() / n;
    const double sd = std::sqrt(var);
    if (sd > 0.0 && std::isfinite(sd)) s.scale(c) = sd;
  }
  return s;
}

Matrix Standardization::apply(const Matrix& features) const {
  Matrix out = features;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    out.col(c) = (out.col(c).array() - mean(c)) / scale(c);
  }
  return out;
}

Label minority_label(const LabeledDataset& data) {
  return data.count(Label::kHigh) <= data.count(Label::kLow) ? Label::kHigh : Label::kLow;
}

namespace {

Label other(Label l) { return l == Label::kHigh ? Label::kLow : Label::kHigh; }

double squared_distance(const Matrix& m, Eigen::Index a, Eigen::Index b) {
  double d = 0.0;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double t = m(a, c) - m(b, c);
    d += t * t;
  }
  return d;
}

/// k nearest among `pool` (row indices into m) for pool[self], self excluded.
/// Returns positions within pool; distance ties broken by lower position.
std::vector<std::size_t> nearest_in_pool(const Matrix& m, const std::vector<std::size_t>& pool,
                                         std::size_t self, std::size_t k) {
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry> heap;  // max-heap on (distance, position)
  const auto anchor = static_cast<Eigen::Index>(pool[self]);
  for (std::size_t j = 0; j < pool.size(); ++j) {
    if (j == self) continue;
    const Entry e{squared_distance(m, anchor, static_cast<Eigen::Index>(pool[j])), j};
    if (heap.size() < k) {
      heap.push(e);
    } else if (e < heap.top()) {
      heap.pop();
      heap.push(e);
    }
  }
  std::vector<std::size_t> out(heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = heap.top().second;
    heap.pop();
  }
  return out;
}

}  // namespace

ResampleResult smote(const LabeledDataset& data, const ResamplingPlan& plan) {
  if (plan.smote_k < 1) throw ValidationError("smote: k must be >= 1");
  if (!(plan.target_ratio > 0.0 && plan.target_ratio <= 1.0)) {
    throw ValidationError("smote: target_ratio must be in (0, 1]");
  }
  const Label minority = minority_label(data);
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    if (data.labels[i] == minority) pool.push_back(i);
  }
  if (pool.size() < 2) throw ValidationError("smote: minority class needs >= 2 rows");

  ResampleResult result;
  result.standardization = Standardization::fit(data.features);
  result.effective_k = plan.smote_k;
  if (static_cast<std::size_t>(plan.smote_k) >= pool.size()) {
    result.effective_k = static_cast<int>(pool.size()) - 1;
    result.warnings.push_back("smote: k=" + std::to_string(plan.smote_k) +
                              " >= minority size " + std::to_string(pool.size()) +
                              ", clamped to " + std::to_string(result.effective_k));
  }

  const auto majority_n = static_cast<double>(data.rows() - pool.size());
  const auto wanted =
      static_cast<std::size_t>(std::ceil(plan.target_ratio * majority_n - 1e-9));
  const std::size_t n_synthetic = wanted > pool.size() ? wanted - pool.size() : 0;

  result.data = data;
  if (n_synthetic == 0) return result;

  const Matrix z = result.standardization.apply(data.features);
  std::vector<std::vector<std::size_t>> neighbours(pool.size());
  SplitMix64 rng(plan.seed);

  const auto old_rows = static_cast<Eigen::Index>(data.rows());
  result.data.features.conservativeResize(old_rows + static_cast<Eigen::Index>(n_synthetic),
                                          Eigen::NoChange);
  for (std::size_t s = 0; s < n_synthetic; ++s) {
    const auto base = static_cast<std::size_t>(rng.below(pool.size()));
    if (neighbours[base].empty()) {
      neighbours[base] =
          nearest_in_pool(z, pool, base, static_cast<std::size_t>(result.effective_k));
    }
    const auto& nn = neighbours[base];
    const auto partner = pool[nn[static_cast<std::size_t>(rng.below(nn.size()))]];
    const double lambda = rng.uniform();
    const auto x = data.features.row(static_cast<Eigen::Index>(pool[base]));
    const auto y = data.features.row(static_cast<Eigen::Index>(partner));
    result.data.features.row(old_rows + static_cast<Eigen::Index>(s)) = x + lambda * (y - x);
    result.data.labels.push_back(minority);
    result.data.source_rows.push_back(LabeledDataset::kSynthetic);
    result.data.groups.emplace_back();
  }
  result.synthetic_added = n_synthetic;
  return result;
}

std::vector<std::pair<std::size_t, std::size_t>> find_tomek_links(const LabeledDataset& data) {
  const std::size_t n = data.rows();
  std::vector<std::pair<std::size_t, std::size_t>> links;
  if (n < 2) return links;
  const Matrix z = Standardization::fit(data.features).apply(data.features);
  std::vector<std::size_t> nearest(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = squared_distance(z, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (d < best) {
        best = d;
        nearest[i] = j;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = nearest[i];
    if (i < j && nearest[j] == i && data.labels[i] != data.labels[j]) links.emplace_back(i, j);
  }
  return links;
}

ResampleResult tomek_remove(const LabeledDataset& data) {
  return tomek_remove(data, other(minority_label(data)));
}

ResampleResult tomek_remove(const LabeledDataset& data, Label majority) {
  if (data.count(Label::kHigh) == 0 || data.count(Label::kLow) == 0) {
    throw ValidationError("tomek_remove: both classes must be present");
  }
  ResampleResult result;
  result.data = data;
  for (;;) {
    const auto links = find_tomek_links(result.data);
    if (links.empty()) break;
    std::vector<bool> drop(result.data.rows(), false);
    for (const auto& [a, b] : links) {
      drop[result.data.labels[a] == majority ? a : b] = true;
    }
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < drop.size(); ++i) {
      if (!drop[i]) keep.push_back(i);
    }
    const auto removed = result.data.rows() - keep.size();
    if (result.data.count(majority) <= removed) {
      result.warnings.push_back("tomek_remove: stopping before the majority class is emptied");
      break;
    }
    result.removed += removed;
    result.data = result.data.subset(keep);
  }
  result.standardization = Standardization::fit(result.data.features);
  return result;
}

ResampleResult apply(const LabeledDataset& data, const ResamplingPlan& plan) {
  switch (plan.strategy) {
    case Strategy::kNone: {
      ResampleResult r;
      r.data = data;
      return r;
    }
    case Strategy::kSmote: return smote(data, plan);
    case Strategy::kTomek: return tomek_remove(data);
    case Strategy::kSmoteThenTomek: {
      const Label majority = other(minority_label(data));
      auto first = smote(data, plan);
      auto second = tomek_remove(first.data, majority);
      second.synthetic_added = first.synthetic_added;
      second.effective_k = first.effective_k;
      first.warnings.insert(first.warnings.end(), second.warnings.begin(), second.warnings.end());
      second.warnings = std::move(first.warnings);
      return second;
    }
  }
  throw ValidationError("unknown resampling strategy");
}

}  // namespace engage::resampling
