#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "engage/topics.hpp"

namespace engage::topics {

Matrix PcaResult::reconstruct() const {
  Matrix out = reduced.vectors() * axes.transpose();
  out.rowwise() += mean.transpose();
  return out;
}

PcaResult pca_reduce(const EmbeddingTable& embeddings, int components) {
  const auto n = static_cast<Eigen::Index>(embeddings.size());
  const auto d = static_cast<Eigen::Index>(embeddings.dim());
  if (n <= 1) throw ValidationError("pca_reduce: need n > 1 rows");
  if (components < 1) throw ValidationError("pca_reduce: components must be >= 1");

  PcaResult result;
  const Eigen::Index limit = std::min(n - 1, d);
  Eigen::Index c = components;
  if (c > limit) {
    result.warnings.push_back("pca_reduce: components clamped from " + std::to_string(components) +
                              " to " + std::to_string(limit));
    c = limit;
  }
  result.components = static_cast<int>(c);

  result.mean = embeddings.vectors().colwise().mean().transpose();
  const Eigen::MatrixXd x = embeddings.vectors().rowwise() - result.mean.transpose();
  const double dof = static_cast<double>(n - 1);
  const double total_variance = x.squaredNorm() / dof;

  Eigen::VectorXd eigenvalues(c);
  result.axes.resize(d, c);
  Eigen::MatrixXd projected(n, c);

  if (d <= n) {
    const Eigen::MatrixXd cov = (x.transpose() * x) / dof;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    for (Eigen::Index i = 0; i < c; ++i) {
      eigenvalues(i) = std::max(0.0, eig.eigenvalues()(d - 1 - i));
      result.axes.col(i) = eig.eigenvectors().col(d - 1 - i);
    }
  } else {
    // Gram route: the top eigenvectors u of X X^T give axes X^T u / sqrt(lambda).
    const Eigen::MatrixXd gram = x * x.transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const double tol = 1e-12 * std::max(1.0, eig.eigenvalues()(n - 1));
    bool zero_axis = false;
    for (Eigen::Index i = 0; i < c; ++i) {
      const double lambda = eig.eigenvalues()(n - 1 - i);
      eigenvalues(i) = std::max(0.0, lambda) / dof;
      if (lambda > tol) {
        result.axes.col(i) = x.transpose() * eig.eigenvectors().col(n - 1 - i) / std::sqrt(lambda);
      } else {
        result.axes.col(i).setZero();
        zero_axis = true;
      }
    }
    if (zero_axis) {
      result.warnings.push_back("pca_reduce: rank-deficient input, trailing components are zero");
    }
  }

  for (Eigen::Index i = 0; i < c; ++i) {
    Eigen::Index top = 0;
    result.axes.col(i).cwiseAbs().maxCoeff(&top);
    if (result.axes(top, i) < 0.0) result.axes.col(i) *= -1.0;
  }
  projected = x * result.axes;

  result.explained_variance_ratio.resize(static_cast<std::size_t>(c));
  for (Eigen::Index i = 0; i < c; ++i) {
    result.explained_variance_ratio[static_cast<std::size_t>(i)] =
        total_variance > 0.0 ? eigenvalues(i) / total_variance : 0.0;
  }
  result.reduced = EmbeddingTable(embeddings.post_ids(), Matrix(projected), embeddings.modality());
  return result;
}

}  // namespace engage::topics
