#include "engage/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

namespace engage::stats {

std::vector<double> rank(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = avg;
    i = j;
  }
  return ranks;
}

namespace {

struct Centered {
  std::vector<double> values;
  double sum_sq = 0.0;
};

Centered center(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  Centered out{std::vector<double>(v.size()), 0.0};
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.values[i] = v[i] - mean;
    out.sum_sq += out.values[i] * out.values[i];
  }
  return out;
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

void check_inputs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("spearman: length mismatch");
  if (x.size() < 3) throw ValidationError("spearman: need n >= 3");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw ValidationError("spearman: non-finite input");
    }
  }
  if (is_constant(x) || is_constant(y)) {
    throw DegenerateError("undefined correlation: constant input");
  }
}

double clamp_unit(double r) { return std::clamp(r, -1.0, 1.0); }

}  // namespace

double spearman_t_pvalue(double rs, std::size_t n) {
  if (n < 3) throw ValidationError("spearman p-value: need n >= 3");
  if (std::abs(rs) >= 1.0) return 0.0;
  const double dof = static_cast<double>(n - 2);
  const double t = rs * std::sqrt(dof / ((1.0 - rs) * (1.0 + rs)));
  const boost::math::students_t_distribution<double> dist(dof);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return std::clamp(p, 0.0, 1.0);
}

double spearman_exact_pvalue(std::span<const double> x, std::span<const double> y) {
  check_inputs(x, y);
  const std::size_t n = x.size();
  if (n > 10) throw ValidationError("exact permutation p-value limited to n <= 10");
  const auto cx = center(rank(x));
  const auto cy = center(rank(y));
  const double denom = std::sqrt(cx.sum_sq * cy.sum_sq);
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i) observed += cx.values[i] * cy.values[i];
  observed = std::abs(observed / denom);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::uint64_t hits = 0;
  std::uint64_t total = 0;
  do {
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += cx.values[i] * cy.values[perm[i]];
    if (std::abs(dot / denom) >= observed - 1e-12) ++hits;
    ++total;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y,
                           PValueMethod method) {
  check_inputs(x, y);
  const auto cx = center(rank(x));
  const auto cy = center(rank(y));
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += cx.values[i] * cy.values[i];
  CorrelationResult result;
  result.n = x.size();
  result.rs = clamp_unit(dot / std::sqrt(cx.sum_sq * cy.sum_sq));
  result.p_value = method == PValueMethod::kExactPermutation ? spearman_exact_pvalue(x, y)
                                                             : spearman_t_pvalue(result.rs,
                                                                                 result.n);
  return result;
}

FeatureCorrelations correlate_features(const FeatureTable& table, Metric metric) {
  if (table.empty()) throw ValidationError("correlate_features: empty table");
  const auto target = table.target_values(metric);
  FeatureCorrelations out;
  for (std::size_t f = 0; f < table.feature_names.size(); ++f) {
    const auto column = table.column(f);
    try {
      auto result = spearman(column, target);
      result.feature_name = table.feature_names[f];
      out.ranked.push_back(std::move(result));
    } catch (const DegenerateError&) {
      out.undefined.push_back(table.feature_names[f]);
    }
  }
  std::sort(out.ranked.begin(), out.ranked.end(),
            [](const CorrelationResult& a, const CorrelationResult& b) {
              const double ra = std::abs(a.rs);
              const double rb = std::abs(b.rs);
              if (ra != rb) return ra > rb;
              return a.feature_name < b.feature_name;
            });
  return out;
}

std::vector<CorrelationResult> top_features(const FeatureCorrelations& correlations,
                                            std::size_t count) {
  const auto n = std::min(count, correlations.ranked.size());
  return {correlations.ranked.begin(), correlations.ranked.begin() + static_cast<long>(n)};
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw ValidationError("quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("quantile: q outside [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

int EngagementClassBoundaries::classify(double value) const noexcept {
  if (value <= minimum) return 1;
  int cls = 1;
  for (double c : cutpoints) {
    if (value >= c) ++cls;
  }
  return cls;
}

EngagementClassBoundaries engagement_classes(std::span<const double> values, Metric metric) {
  if (values.size() < 5) throw ValidationError("engagement_classes: need n >= 5");
  EngagementClassBoundaries b;
  b.metric = metric;
  b.minimum = *std::min_element(values.begin(), values.end());
  constexpr std::array<double, 4> kLevels{0.2, 0.4, 0.6, 0.8};
  for (std::size_t i = 0; i < 4; ++i) b.cutpoints[i] = quantile(values, kLevels[i]);
  b.degenerate = b.cutpoints[0] <= b.minimum;
  for (std::size_t i = 1; i < 4; ++i) b.degenerate |= b.cutpoints[i] == b.cutpoints[i - 1];
  return b;
}

}  // namespace engage::stats
