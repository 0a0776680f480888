#include "engage/labeled_dataset.hpp"

#include <algorithm>
#include <numeric>

#include "engage/stats.hpp"

namespace engage {

std::string_view to_string(Label label) { return label == Label::kHigh ? "High" : "Low"; }

std::size_t LabeledDataset::count(Label label) const noexcept {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.feature_names = feature_names;
  out.threshold_used = threshold_used;
  out.metric = metric;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.labels.reserve(indices.size());
  out.source_rows.reserve(indices.size());
  out.groups.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto r = indices[i];
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(r));
    out.labels.push_back(labels[r]);
    out.source_rows.push_back(source_rows[r]);
    out.groups.push_back(groups[r]);
  }
  return out;
}

LabeledDataset label_engagement(const Matrix& features, std::vector<std::string> feature_names,
                                std::span<const double> engagement, Metric metric,
                                std::vector<std::string> groups) {
  const auto n = engagement.size();
  if (static_cast<std::size_t>(features.rows()) != n) {
    throw ValidationError("label_engagement: row count mismatch");
  }
  if (n < 8) throw ValidationError("label_engagement: need >= 8 rows");
  LabeledDataset out;
  out.feature_names = std::move(feature_names);
  out.features = features;
  out.metric = metric;
  out.threshold_used = stats::quantile(engagement, 0.75);
  out.labels.reserve(n);
  for (double v : engagement) out.labels.push_back(v >= out.threshold_used ? Label::kHigh : Label::kLow);
  out.source_rows.resize(n);
  std::iota(out.source_rows.begin(), out.source_rows.end(), std::size_t{0});
  out.groups = groups.empty() ? std::vector<std::string>(n) : std::move(groups);
  if (out.count(Label::kHigh) == 0 || out.count(Label::kLow) == 0) {
    throw DegenerateError("degenerate labeling: one class is empty");
  }
  return out;
}

LabeledDataset label_engagement(const FeatureTable& table, Metric metric) {
  const auto values = table.target_values(metric);
  return label_engagement(table.matrix, table.feature_names, values, metric, table.influencer_ids);
}

}  // namespace engage
