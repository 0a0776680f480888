#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "engage/common.hpp"
#include "engage/timestamp.hpp"

namespace engage {

enum class Category : std::uint8_t {
  kBeauty,
  kFamily,
  kFashion,
  kFitness,
  kFood,
  kInterior,
  kPet,
  kTravel,
  kOther,
};

inline constexpr std::array kAllCategories{
    Category::kBeauty, Category::kFamily,   Category::kFashion,
    Category::kFitness, Category::kFood,    Category::kInterior,
    Category::kPet,    Category::kTravel,   Category::kOther,
};

std::string_view to_string(Category category);
std::optional<Category> parse_category(std::string_view text);

enum class TierName : std::uint8_t { kNano, kMicro, kMid, kMacro, kMega };

inline constexpr std::array kAllTiers{TierName::kNano, TierName::kMicro, TierName::kMid,
                                      TierName::kMacro, TierName::kMega};

std::string_view to_string(TierName tier);
std::optional<TierName> parse_tier(std::string_view text);

/// Follower band [min_followers, max_followers); max is unset for the open top tier.
struct Tier {
  TierName name;
  std::int64_t min_followers;
  std::optional<std::int64_t> max_followers;

  bool contains(std::int64_t followers) const noexcept {
    return followers >= min_followers && (!max_followers || followers < *max_followers);
  }
};

inline constexpr std::int64_t kInfluencerThreshold = 1000;

/// Tier table: Nano [1K,10K), Micro [10K,50K), Mid [50K,500K), Macro [500K,1M), Mega [1M,inf).
const std::array<Tier, 5>& tier_table();

/// Throws ValidationError("sub-influencer account ...") below 1000 followers.
Tier assign_tier(std::int64_t followers);

struct EngagementMetrics {
  double likes_rate = 0.0;
  double comments_rate = 0.0;

  double get(Metric metric) const noexcept {
    return metric == Metric::kLikes ? likes_rate : comments_rate;
  }
};

struct PostRecord {
  std::string post_id;
  std::string influencer_id;
  Category category = Category::kOther;
  std::int64_t followers = 1;
  std::int64_t likes = 0;
  std::int64_t comments = 0;
  Timestamp posted_at{};
  /// Absent keys are missing cells; present values are always finite.
  std::map<std::string, double> features;

  EngagementMetrics engagement() const noexcept;
};

nlohmann::json to_json(const PostRecord& post);

/// Per-row ingestion problem. `row` is the 1-based data row (header excluded).
struct Diagnostic {
  std::size_t row = 0;
  std::string column;
  std::string reason;
};

nlohmann::json to_json(const Diagnostic& diagnostic);

struct IngestOptions {
  char delimiter = ',';
  /// When set, only these feature columns are kept (others ignored).
  std::optional<std::vector<std::string>> feature_columns;
};

struct IngestResult {
  std::vector<PostRecord> posts;
  std::vector<Diagnostic> diagnostics;
  std::vector<std::string> feature_names;
};

inline constexpr std::array<std::string_view, 7> kRequiredColumns{
    "post_id", "influencer_id", "category", "followers", "likes", "comments", "posted_at"};

/// Reads posts from CSV (header row) or JSONL (".jsonl"/".ndjson" extension).
/// Malformed rows become diagnostics; zero valid rows throws ValidationError.
IngestResult ingest(const std::filesystem::path& posts_file, const IngestOptions& options = {});
IngestResult ingest_csv(std::istream& in, const IngestOptions& options = {});
IngestResult ingest_jsonl(std::istream& in, const IngestOptions& options = {});

/// Keeps posts aged between 5 and 30 days (inclusive) at collection_end.
std::vector<PostRecord> filter_window(std::vector<PostRecord> posts, Timestamp collection_end);

struct SliceKey {
  Category category = Category::kOther;
  TierName tier = TierName::kNano;
  Metric metric = Metric::kLikes;

  /// "Pet/Nano/likes"
  std::string to_string() const;
  /// "Pet/Nano/likes" -> relative directory path
  std::filesystem::path relative_dir() const;
  static SliceKey parse(std::string_view text);

  friend auto operator<=>(const SliceKey&, const SliceKey&) = default;
};

/// Column-oriented view of one category x tier x metric slice.
struct FeatureTable {
  SliceKey key;
  std::vector<std::string> post_ids;
  std::vector<std::string> influencer_ids;
  std::vector<std::string> feature_names;
  Matrix matrix;  // rows() x feature_names.size()
  std::vector<EngagementMetrics> targets;
  /// Per feature column: cells filled with the slice median.
  std::vector<std::size_t> imputed_counts;

  std::size_t rows() const noexcept { return post_ids.size(); }
  bool empty() const noexcept { return post_ids.empty(); }
  std::vector<double> target_values() const { return target_values(key.metric); }
  std::vector<double> target_values(Metric metric) const;
  std::vector<double> column(std::size_t feature) const;
};

/// Rows of `posts` in the requested slice, sorted by post_id. Missing feature
/// cells are imputed with the per-slice column median (0 if the whole column
/// is missing). An empty slice yields a table with zero rows.
FeatureTable slice(const std::vector<PostRecord>& posts,
                   const std::vector<std::string>& feature_names, const SliceKey& key);

/// Posts and distinct influencers per (category, tier).
struct SliceCount {
  std::size_t posts = 0;
  std::size_t influencers = 0;
};
std::map<std::pair<Category, TierName>, SliceCount> slice_counts(
    const std::vector<PostRecord>& posts);

}  // namespace engage
