#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "engage/embeddings.hpp"
#include "engage/stats.hpp"

namespace engage::topics {

// ---------------------------------------------------------------- PCA

struct PcaResult {
  EmbeddingTable reduced;
  /// Per retained component, non-increasing.
  std::vector<double> explained_variance_ratio;
  Vector mean;
  /// d x components, orthonormal columns.
  Eigen::MatrixXd axes;
  int components = 0;
  Warnings warnings;

  /// Maps reduced coordinates back into the original space.
  Matrix reconstruct() const;
};

/// Mean-centred projection onto the top principal axes (covariance
/// eigenvalues, descending). `components` is clamped to min(n - 1, d) with a
/// warning. Axis signs are fixed so each axis' largest-magnitude entry is
/// positive. Throws ValidationError when n <= 1.
PcaResult pca_reduce(const EmbeddingTable& embeddings, int components = 100);

// ---------------------------------------------------------------- kNN

/// Exact Euclidean k-nearest-neighbour search by bounded-heap scan. The
/// anchor is excluded; equal distances are ordered by post id.
class KnnIndex {
 public:
  explicit KnnIndex(const EmbeddingTable& embeddings);

  /// Row indices of the k nearest rows to `anchor_row`, nearest first.
  std::vector<std::size_t> query(std::size_t anchor_row, std::size_t k) const;
  /// As above for every row; `threads` 0 means hardware concurrency.
  std::vector<std::vector<std::size_t>> query_all(std::size_t k, unsigned threads = 0) const;

 private:
  const EmbeddingTable& table_;
  std::vector<std::size_t> id_rank_;  // position of each row in post-id order
  std::vector<std::size_t> row_of_rank_;
};

/// Post ids of the k nearest neighbours of `anchor`. Throws ValidationError
/// for an unknown anchor or k >= n.
std::vector<std::string> knn(const EmbeddingTable& embeddings, std::string_view anchor,
                             std::size_t k);

// ---------------------------------------------------------- diversity

struct DiversityIndex {
  double value = 0.0;
  std::uint64_t total = 0;
  std::vector<std::uint64_t> counts;
};

/// Simpson's index D = 1 - sum n_i (n_i - 1) / (N (N - 1)). Zero counts are
/// ignored. Throws ValidationError when N < 2.
DiversityIndex simpson_diversity(std::span<const std::uint64_t> counts);

/// Simpson's index over the multiplicities of `labels`.
template <typename T>
DiversityIndex simpson_of(std::span<const T> labels) {
  std::unordered_map<T, std::uint64_t> tally;
  for (const auto& l : labels) ++tally[l];
  std::vector<std::uint64_t> counts;
  counts.reserve(tally.size());
  for (const auto& [unused, c] : tally) counts.push_back(c);
  return simpson_diversity(counts);
}

// ------------------------------------------------------- neighbourhoods

enum class Quadrant : std::uint8_t {
  kGeneralTopic,            ///< high UD, low ED
  kUserSpecificTopic,       ///< low UD, low ED
  kUnreliableHighEdLowUd,
  kUnreliableHighEdHighUd,
};

std::string_view to_string(Quadrant quadrant);
inline constexpr double kDiversityThreshold = 0.5;
/// Diversities >= 0.5 count as high.
Quadrant quadrant_of(double user_diversity, double engagement_diversity) noexcept;

struct TopicNeighborhood {
  std::string anchor;
  /// Anchor first, then its k neighbours nearest first (k + 1 ids).
  std::vector<std::string> members;
  int engagement_class = 0;
  /// Mean engagement of the k neighbours (anchor excluded).
  double mean_engagement = 0.0;
  double user_diversity = 0.0;
  double engagement_diversity = 0.0;
  Quadrant quadrant = Quadrant::kUserSpecificTopic;
  Modality modality = Modality::kImage;
  std::string slice_key;
};

nlohmann::json to_json(const TopicNeighborhood& topic);

/// For every row: if the mean engagement of its k nearest neighbours falls
/// in the row's own engagement class, the neighbourhood is pure and emitted.
/// `engagement` is aligned with the embedding rows.
std::vector<TopicNeighborhood> purity_scan(const EmbeddingTable& embeddings,
                                           std::span<const double> engagement,
                                           const stats::EngagementClassBoundaries& boundaries,
                                           std::size_t k, unsigned threads = 0);

struct PurityPoint {
  std::size_t k = 0;
  double pure_fraction = 0.0;
};

inline constexpr std::array<std::size_t, 7> kDefaultPurityKs{1, 3, 5, 10, 20, 30, 50};

/// Pure fraction per k (one neighbour search at max k, prefixes reused).
/// Throws ValidationError when max(k_list) >= n.
std::vector<PurityPoint> purity_curve(const EmbeddingTable& embeddings,
                                      std::span<const double> engagement,
                                      const stats::EngagementClassBoundaries& boundaries,
                                      std::span<const std::size_t> k_list, unsigned threads = 0);

struct MemberInfo {
  std::string influencer;
  int engagement_class = 0;
};
using MemberLookup = std::unordered_map<std::string, MemberInfo>;

/// Fills user/engagement diversity over all k + 1 members and the quadrant.
/// Throws ValidationError for members missing from `lookup`.
TopicNeighborhood classify_topic(TopicNeighborhood neighborhood, const MemberLookup& lookup);

/// Greedy scan in priority order (user diversity desc, mean engagement desc,
/// anchor id asc); a candidate is dropped when it shares more than
/// overlap_threshold * (k + 1) members with any kept neighbourhood.
std::vector<TopicNeighborhood> dedup_neighborhoods(std::vector<TopicNeighborhood> neighborhoods,
                                                   double overlap_threshold = 0.8);

struct HotTopicInput {
  std::string slice_key;
  EmbeddingTable embeddings;  ///< rows of the slice (raw or already reduced)
  std::vector<double> engagement;
  std::vector<std::string> influencers;
  std::size_t k = 50;
  int pca_components = 100;
  bool apply_pca = true;
  unsigned threads = 0;
};

struct HotTopicReport {
  std::string slice_key;
  Modality modality = Modality::kImage;
  std::size_t k = 0;
  std::size_t points = 0;
  std::size_t pure_neighborhoods = 0;
  std::size_t top_class_pure = 0;
  /// Sorted by user diversity, descending.
  std::vector<TopicNeighborhood> topics;
  Warnings notes;
};

/// Full pipeline for one slice: optional PCA, quintile boundaries on the
/// slice's engagement, purity scan, class-5 filter, diversity/quadrant
/// classification and overlap dedup.
HotTopicReport hot_topic_report(const HotTopicInput& input);

nlohmann::json to_json(const HotTopicReport& report);

}  // namespace engage::topics
