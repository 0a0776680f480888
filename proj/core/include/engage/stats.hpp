#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "engage/common.hpp"
#include "engage/dataset.hpp"

namespace engage::stats {

/// Ranks 1..n; tied values share the average of the ranks they span.
std::vector<double> rank(std::span<const double> values);

enum class PValueMethod {
  kTApproximation,    ///< two-tailed Student t with n-2 dof
  kExactPermutation,  ///< enumerates all n! orderings; n <= 10 only
};

struct CorrelationResult {
  std::string feature_name;
  double rs = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Spearman's rank correlation: the Pearson correlation of the rank vectors.
/// Throws ValidationError for mismatched lengths or n < 3 and DegenerateError
/// ("undefined correlation") when either input is constant.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y,
                           PValueMethod method = PValueMethod::kTApproximation);

/// t = r * sqrt((n-2)/(1-r^2)) against Student t(n-2), two-tailed. |r| = 1 gives 0.
double spearman_t_pvalue(double rs, std::size_t n);

/// Fraction of the n! orderings of y whose |r_s| reaches the observed |r_s|.
double spearman_exact_pvalue(std::span<const double> x, std::span<const double> y);

struct FeatureCorrelations {
  /// Sorted by |r_s| descending, ties by feature name.
  std::vector<CorrelationResult> ranked;
  /// Features whose correlation is undefined (constant column).
  std::vector<std::string> undefined;
};

FeatureCorrelations correlate_features(const FeatureTable& table, Metric metric);

/// The first `count` entries of `ranked`.
std::vector<CorrelationResult> top_features(const FeatureCorrelations& correlations,
                                            std::size_t count = 3);

/// Linear interpolation between closest ranks (Hyndman-Fan type 7):
/// h = (n-1)q, result = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
double quantile(std::span<const double> values, double q);

/// Quintile cutpoints. Class k covers [c_{k-1}, c_k) with class 5 closed at the
/// top; the observed minimum always maps to class 1, so coincident cutpoints
/// from heavy ties at the bottom collapse into class 1.
struct EngagementClassBoundaries {
  Metric metric = Metric::kLikes;
  std::array<double, 4> cutpoints{};
  double minimum = 0.0;
  /// Some cutpoints coincide, so at least one class is empty.
  bool degenerate = false;

  int classify(double value) const noexcept;
};

/// Cutpoints at the 0.2/0.4/0.6/0.8 quantiles. Requires n >= 5.
EngagementClassBoundaries engagement_classes(std::span<const double> values,
                                             Metric metric = Metric::kLikes);

struct ManovaResult {
  std::string factor;
  double pillai_trace = 0.0;
  double approx_f = 0.0;
  int df_num = 0;
  int df_den = 0;
  double p_value = 1.0;
};

/// Two-way additive MANOVA (no interaction) with Pillai's trace per factor.
///
/// `responses` is n x p. Each factor's hypothesis matrix is the Type II
/// (other-factor-adjusted) extra sum of squares and cross products
///   H = E_without_factor - E_full,
/// with E_full the residual SSCP of the model [1, dummies(a), dummies(b)].
/// Pillai's V = tr(H (H + E)^-1) and, with q the factor's degrees of freedom
/// and v the residual degrees of freedom,
///   s = min(p, q),  m = (|p - q| - 1) / 2,  nn = (v - p - 1) / 2,
///   F = (2nn + s + 1) / (2m + s + 1) * V / (s - V)
/// on s(2m + s + 1) and s(2nn + s + 1) degrees of freedom.
///
/// Throws ValidationError when a factor has < 2 levels or n <= levels_a + levels_b,
/// DegenerateError("degenerate residual covariance") when E is singular.
std::pair<ManovaResult, ManovaResult> manova_pillai(const Matrix& responses,
                                                    std::span<const std::string> factor_a,
                                                    std::span<const std::string> factor_b,
                                                    std::string name_a = "category",
                                                    std::string name_b = "tier");

}  // namespace engage::stats
