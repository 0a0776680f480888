#include "fixture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "engage/csv.hpp"
#include "engage/dataset.hpp"
#include "engage/embeddings.hpp"
#include "engage/random.hpp"

namespace engage::cli {

namespace {

double normal(SplitMix64& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

struct Cell {
  Category category;
  TierName tier;
  double base_rate;
};

struct Post {
  std::string id;
  std::string influencer;
  const Cell* cell;
  std::int64_t followers;
  std::int64_t likes;
  std::int64_t comments;
  std::int64_t age_hours;
  std::vector<double> features;
  double likes_rate;
  double comments_rate;
};

const std::vector<std::string> kFeatures{"n_hashtags", "n_mentions", "caption_len", "n_emojis",
                                         "has_location", "is_video", "brightness",
                                         "saturation", "n_people", "hour"};

}  // namespace

void write_fixture(const std::filesystem::path& dir, const FixtureOptions& options) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "embeddings");
  SplitMix64 rng(options.seed);

  const std::vector<Cell> cells{
      {Category::kPet, TierName::kNano, 0.09},     {Category::kPet, TierName::kMicro, 0.05},
      {Category::kFashion, TierName::kNano, 0.07}, {Category::kFashion, TierName::kMid, 0.03},
      {Category::kFood, TierName::kMicro, 0.04},   {Category::kTravel, TierName::kMacro, 0.02},
  };
  const int influencers_per_cell = 8;

  std::vector<Post> posts;
  for (std::size_t i = 0; i < options.posts; ++i) {
    const auto c = i % cells.size();
    const auto& cell = cells[c];
    const auto infl = static_cast<int>(rng.below(influencers_per_cell));
    const auto& tier = tier_table()[static_cast<std::size_t>(cell.tier)];
    const double lo = std::log(static_cast<double>(tier.min_followers));
    const double hi = std::log(static_cast<double>(tier.max_followers.value_or(5'000'000)));
    // Followers are fixed per influencer, so derive them from a per-influencer stream.
    SplitMix64 frng(derive_seed(options.seed, "followers", c * 100 + static_cast<std::size_t>(infl)));
    const auto followers =
        std::clamp(static_cast<std::int64_t>(std::exp(lo + (hi - lo) * frng.uniform())),
                   tier.min_followers, tier.max_followers.value_or(INT64_MAX) - 1);

    Post p;
    p.id = "p" + std::to_string(100000 + i);
    p.influencer = std::string(to_string(cell.category)) + "_" + std::string(to_string(cell.tier)) +
                   "_" + std::to_string(infl);
    p.cell = &cell;
    p.followers = followers;
    p.age_hours = static_cast<std::int64_t>(rng.below(34 * 24)) + 2 * 24;
    const double n_mentions = static_cast<double>(rng.below(7));
    const double has_location = rng.uniform() < 0.4 ? 1.0 : 0.0;
    const double is_video = rng.uniform() < 0.25 ? 1.0 : 0.0;
    const double brightness = rng.uniform();
    const double n_emojis = static_cast<double>(rng.below(11));
    p.features = {static_cast<double>(rng.below(21)),
                  n_mentions,
                  static_cast<double>(rng.below(500)),
                  n_emojis,
                  has_location,
                  is_video,
                  brightness,
                  rng.uniform(),
                  static_cast<double>(rng.below(6)),
                  static_cast<double>(rng.below(24))};
    const double signal = 0.45 * n_mentions + 0.9 * has_location - 0.6 * is_video + 0.8 * brightness;
    p.likes_rate = cell.base_rate * std::exp(signal - 1.6 + 0.25 * normal(rng));
    p.comments_rate = p.likes_rate * 0.02 * std::exp(0.12 * n_emojis + 0.35 * normal(rng));
    p.likes = static_cast<std::int64_t>(std::llround(p.likes_rate * static_cast<double>(followers)));
    p.comments =
        static_cast<std::int64_t>(std::llround(p.comments_rate * static_cast<double>(followers)));
    p.likes_rate = static_cast<double>(p.likes) / static_cast<double>(followers);
    p.comments_rate = static_cast<double>(p.comments) / static_cast<double>(followers);
    posts.push_back(std::move(p));
  }

  const auto end = parse_rfc3339("2023-06-30T00:00:00Z");
  std::ofstream csv(dir / "posts.csv", std::ios::binary);
  csv << "post_id,influencer_id,category,followers,likes,comments,posted_at";
  for (const auto& f : kFeatures) csv << ',' << f;
  csv << '\n';
  for (std::size_t i = 0; i < posts.size(); ++i) {
    const auto& p = posts[i];
    const auto when = end - std::chrono::hours(p.age_hours);
    csv << p.id << ',' << p.influencer << ',' << to_string(p.cell->category) << ',' << p.followers
        << ',' << p.likes << ',' << p.comments << ','
        << format_rfc3339(std::chrono::time_point_cast<std::chrono::seconds>(when));
    for (std::size_t f = 0; f < p.features.size(); ++f) {
      csv << ',';
      // A sprinkling of missing brightness cells exercises median imputation.
      if (options.with_defects && f == 6 && i % 53 == 0) continue;
      csv << csv::format_double(p.features[f]);
    }
    csv << '\n';
  }
  if (options.with_defects) {
    csv << "bad1,x_0,Pet,0,10,1,2023-06-20T00:00:00Z,1,1,1,1,1,1,0.5,0.5,1,1\n";
    csv << "bad2,x_1,Gardening,5000,10,1,2023-06-20T00:00:00Z,1,1,1,1,1,1,0.5,0.5,1,1\n";
    csv << "bad3,x_2,Pet,5000,10,1,not-a-date,1,1,1,1,1,1,0.5,0.5,1,1\n";
    csv << "small1,x_3,Pet,500,10,1,2023-06-20T00:00:00Z,1,1,1,1,1,1,0.5,0.5,1,1\n";
  }

  // Embeddings: background noise plus, per cell, a shared direction for the
  // most engaging posts (image for likes, text for comments).
  auto embed = [&](int dim, bool by_likes, std::string_view stream, topics::Modality modality) {
    Matrix m(static_cast<Eigen::Index>(posts.size()), dim);
    SplitMix64 erng(derive_seed(options.seed, stream));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = normal(erng);
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < posts.size(); ++i) {
        if (posts[i].cell == &cells[c]) rows.push_back(i);
      }
      std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
        const double ra = by_likes ? posts[a].likes_rate : posts[a].comments_rate;
        const double rb = by_likes ? posts[b].likes_rate : posts[b].comments_rate;
        return ra != rb ? ra > rb : a < b;
      });
      Vector center(dim);
      for (int d = 0; d < dim; ++d) center(d) = 4.0 * normal(erng);
      const auto hot = rows.size() / 8;
      for (std::size_t h = 0; h < hot; ++h) {
        const auto r = static_cast<Eigen::Index>(rows[h]);
        for (int d = 0; d < dim; ++d) m(r, d) = center(d) + 0.2 * normal(erng);
      }
    }
    std::vector<std::string> ids;
    for (const auto& p : posts) ids.push_back(p.id);
    return topics::EmbeddingTable(std::move(ids), std::move(m), modality);
  };
  topics::save_embeddings_binary(embed(options.image_dim, true, "image", topics::Modality::kImage),
                                 dir / "embeddings" / "image.bin");
  topics::save_embeddings_binary(embed(options.text_dim, false, "text", topics::Modality::kText),
                                 dir / "embeddings" / "text.bin");

  const nlohmann::json config{
      {"posts", "posts.csv"},
      {"embeddings", {{"image", "embeddings/image.bin"}, {"text", "embeddings/text.bin"}}},
      {"collection_end", "2023-06-30T00:00:00Z"},
      {"slices", "all"},
      {"profile", "fast"},
      {"seed", 42},
      {"out", "run"},
      {"folds", 5},
      {"splits", {{"group_by_influencer", false}}},
      {"topics", {{"k", 10}, {"components", 20}, {"pca_scope", "slice"},
                  {"k_list", {1, 3, 5, 10, 20, 30, 50}}}},
      {"report", {{"max_depth_render", 3}}}};
  std::ofstream(dir / "config.json") << config.dump(2) << '\n';
}

}  // namespace engage::cli
