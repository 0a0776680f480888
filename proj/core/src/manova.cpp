#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <boost/math/distributions/fisher_f.hpp>

#include "engage/stats.hpp"

namespace engage::stats {

namespace {

using Design = Eigen::MatrixXd;

/// Treatment-coded dummies (first level in sorted order is the reference).
std::vector<std::vector<int>> dummy_columns(std::span<const std::string> labels,
                                            std::size_t& levels) {
  std::map<std::string, int> index;
  for (const auto& l : labels) index.emplace(l, 0);
  int next = 0;
  for (auto& [name, id] : index) id = next++;
  levels = index.size();
  std::vector<std::vector<int>> cols(levels > 0 ? levels - 1 : 0,
                                     std::vector<int>(labels.size(), 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int id = index[labels[i]];
    if (id > 0) cols[static_cast<std::size_t>(id - 1)][i] = 1;
  }
  return cols;
}

Design build_design(std::size_t n, const std::vector<std::vector<int>>& a,
                    const std::vector<std::vector<int>>& b) {
  Design x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(1 + a.size() + b.size()));
  x.col(0).setOnes();
  Eigen::Index c = 1;
  for (const auto* block : {&a, &b}) {
    for (const auto& col : *block) {
      for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i), c) = col[i];
      ++c;
    }
  }
  return x;
}

struct Fit {
  Eigen::MatrixXd residual_sscp;
  Eigen::Index rank = 0;
};

Fit residual_sscp(const Design& x, const Eigen::MatrixXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::MatrixXd beta = qr.solve(y);
  const Eigen::MatrixXd resid = y - x * beta;
  return {resid.transpose() * resid, qr.rank()};
}

ManovaResult pillai(std::string factor, const Eigen::MatrixXd& h, const Eigen::MatrixXd& e,
                    int q, int v) {
  const int p = static_cast<int>(e.rows());
  if (q < 1) throw ValidationError("manova: factor '" + factor + "' is confounded with the other");
  const Eigen::MatrixXd total = h + e;
  const Eigen::LLT<Eigen::MatrixXd> llt(total);
  if (llt.info() != Eigen::Success) {
    throw DegenerateError("degenerate residual covariance");
  }
  ManovaResult r;
  r.factor = std::move(factor);
  r.pillai_trace = std::max(0.0, llt.solve(h).trace());

  const int s = std::min(p, q);
  // 2m = |p - q| - 1 and 2nn = v - p - 1 keep everything in integers.
  const int two_m = std::abs(p - q) - 1;
  const int two_n = v - p - 1;
  r.df_num = s * (two_m + s + 1);
  r.df_den = s * (two_n + s + 1);
  if (r.df_den <= 0) throw ValidationError("manova: too few residual degrees of freedom");
  const double gap = static_cast<double>(s) - r.pillai_trace;
  if (gap <= 0.0) {
    r.approx_f = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    return r;
  }
  r.approx_f = (static_cast<double>(two_n + s + 1) / static_cast<double>(two_m + s + 1)) *
               (r.pillai_trace / gap);
  const boost::math::fisher_f_distribution<double> dist(r.df_num, r.df_den);
  r.p_value = std::clamp(boost::math::cdf(boost::math::complement(dist, r.approx_f)), 0.0, 1.0);
  return r;
}

}  // namespace

std::pair<ManovaResult, ManovaResult> manova_pillai(const Matrix& responses,
                                                    std::span<const std::string> factor_a,
                                                    std::span<const std::string> factor_b,
                                                    std::string name_a, std::string name_b) {
  const auto n = static_cast<std::size_t>(responses.rows());
  if (factor_a.size() != n || factor_b.size() != n) {
    throw ValidationError("manova: factor length does not match responses");
  }
  if (responses.cols() < 1) throw ValidationError("manova: no responses");
  if (!responses.allFinite()) throw ValidationError("manova: non-finite responses");

  std::size_t levels_a = 0;
  std::size_t levels_b = 0;
  const auto dummies_a = dummy_columns(factor_a, levels_a);
  const auto dummies_b = dummy_columns(factor_b, levels_b);
  if (levels_a < 2 || levels_b < 2) throw ValidationError("manova: each factor needs >= 2 levels");
  if (n <= levels_a + levels_b) throw ValidationError("manova: need n > levels_a + levels_b");

  const Eigen::MatrixXd y = responses;
  const std::vector<std::vector<int>> none;
  const Fit full = residual_sscp(build_design(n, dummies_a, dummies_b), y);
  const Fit without_a = residual_sscp(build_design(n, none, dummies_b), y);
  const Fit without_b = residual_sscp(build_design(n, dummies_a, none), y);

  const int v = static_cast<int>(n) - static_cast<int>(full.rank);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(full.residual_sscp,
                                                           Eigen::EigenvaluesOnly);
  const double scale = std::max(full.residual_sscp.diagonal().maxCoeff(), 1e-300);
  if (eig.eigenvalues().minCoeff() <= 1e-12 * scale) {
    throw DegenerateError("degenerate residual covariance");
  }

  const int q_a = static_cast<int>(full.rank - without_a.rank);
  const int q_b = static_cast<int>(full.rank - without_b.rank);
  auto hypothesis = [&](const Fit& reduced) -> Eigen::MatrixXd {
    const Eigen::MatrixXd h = reduced.residual_sscp - full.residual_sscp;
    return 0.5 * (h + h.transpose());
  };
  return {pillai(std::move(name_a), hypothesis(without_a), full.residual_sscp, q_a, v),
          pillai(std::move(name_b), hypothesis(without_b), full.residual_sscp, q_b, v)};
}

}  // namespace engage::stats
