#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace engage::testing {

bool on_some_segment(const Matrix& candidates, const Eigen::RowVectorXd& point, double tol) {
  const auto n = candidates.rows();
  const double scale = 1.0 + point.norm();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd a = candidates.row(i);
    if ((point - a).norm() <= tol * scale) return true;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const Eigen::RowVectorXd d = candidates.row(j) - a;
      const double len2 = d.squaredNorm();
      if (len2 == 0.0) continue;
      const double lambda = (point - a).dot(d) / len2;
      if (lambda < -tol || lambda > 1.0 + tol) continue;
      if ((a + lambda * d - point).norm() <= tol * scale) return true;
    }
  }
  return false;
}

std::vector<std::string> brute_force_knn(const topics::EmbeddingTable& table, std::size_t anchor,
                                         std::size_t k) {
  const auto& v = table.vectors();
  std::vector<std::pair<double, std::string>> all;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (i == anchor) continue;
    const double d = (v.row(static_cast<Eigen::Index>(i)) - v.row(static_cast<Eigen::Index>(anchor)))
                         .squaredNorm();
    all.emplace_back(d, table.post_ids()[i]);
  }
  std::sort(all.begin(), all.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(all[i].second);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> brute_force_tomek(const LabeledDataset& data) {
  const auto n = data.rows();
  Matrix z = data.features;
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const double mean = z.col(c).mean();
    const double var = (z.col(c).array() - mean).square().mean();
    const double sd = var > 0 ? std::sqrt(var) : 1.0;
    z.col(c) = (z.col(c).array() - mean) / sd;
  }
  std::vector<std::size_t> nn(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d =
          (z.row(static_cast<Eigen::Index>(i)) - z.row(static_cast<Eigen::Index>(j))).squaredNorm();
      if (d < best) {
        best = d;
        nn[i] = j;
      }
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = nn[i];
    if (i < j && nn[j] == i && data.labels[i] != data.labels[j]) links.emplace_back(i, j);
  }
  return links;
}

std::vector<std::size_t> rows_matching(const dtree::GuidelinePath& path, const Matrix& features) {
  std::vector<std::size_t> out;
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    bool all = true;
    for (const auto& c : path.conditions) {
      const double v = features(r, c.feature_index);
      all = all && (c.comparator == dtree::Comparator::kLessEqual ? v <= c.threshold
                                                                   : v > c.threshold);
    }
    if (all) out.push_back(static_cast<std::size_t>(r));
  }
  return out;
}

std::vector<std::size_t> rows_in_leaf(const dtree::TreeModel& model, int leaf,
                                      const Matrix& features) {
  std::vector<std::size_t> out;
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    const Eigen::RowVectorXd row = features.row(r);
    if (model.apply(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))) ==
        leaf) {
      out.push_back(static_cast<std::size_t>(r));
    }
  }
  return out;
}

}  // namespace engage::testing
