#include <gtest/gtest.h>

#include <sstream>

#include "engage/dataset.hpp"
#include "engage/random.hpp"

namespace engage {
namespace {

const std::string kHeader = "post_id,influencer_id,category,followers,likes,comments,posted_at,n_mentions,brightness\n";

IngestResult ingest_text(const std::string& text) {
  std::istringstream in(text);
  return ingest_csv(in);
}

PostRecord make_post(std::string id, Category c, std::int64_t followers, std::int64_t likes,
                     Timestamp at = parse_rfc3339("2023-06-20T00:00:00Z")) {
  PostRecord p;
  p.post_id = std::move(id);
  p.influencer_id = "inf_" + p.post_id;
  p.category = c;
  p.followers = followers;
  p.likes = likes;
  p.comments = likes / 10;
  p.posted_at = at;
  return p;
}

TEST(Ingest, FollowersZeroIsRejected) {
  const auto r = ingest_text(kHeader + "a,u1,Pet,0,10,1,2023-06-01T00:00:00Z,1,0.5\n"
                                       "b,u1,Pet,2000,10,1,2023-06-01T00:00:00Z,1,0.5\n");
  ASSERT_EQ(r.posts.size(), 1U);
  ASSERT_EQ(r.diagnostics.size(), 1U);
  EXPECT_EQ(r.diagnostics[0].row, 1U);
  EXPECT_EQ(r.diagnostics[0].column, "followers");
  EXPECT_EQ(r.diagnostics[0].reason, "followers < 1");
}

TEST(Ingest, LikesRateIsDirectRatio) {
  const auto r = ingest_text(kHeader + "a,u1,Pet,10000,500,20,2023-06-01T00:00:00Z,1,0.5\n");
  ASSERT_EQ(r.posts.size(), 1U);
  EXPECT_DOUBLE_EQ(r.posts[0].engagement().likes_rate, 0.05);
  EXPECT_DOUBLE_EQ(r.posts[0].engagement().comments_rate, 0.002);
}

TEST(Ingest, ValidRowsAndDiagnosticsAreConserved) {
  const auto r = ingest_text(kHeader + "a,u1,Pet,2000,10,1,2023-06-01T00:00:00Z,1,0.5\n"
                                       "b,u1,Pet,2000,10,1,2023-06-01T00:00:00Z,2,0.5\n"
                                       "c,u1,Pet,2000,ten,1,2023-06-01T00:00:00Z,3,0.5\n"
                                       "d,u2,Food,3000,10,1,2023-06-01T00:00:00Z,4,0.5\n");
  EXPECT_EQ(r.posts.size(), 3U);
  ASSERT_EQ(r.diagnostics.size(), 1U);
  EXPECT_EQ(r.diagnostics[0].row, 3U);
  EXPECT_EQ(r.diagnostics[0].column, "likes");
}

TEST(Ingest, RowDefectsBecomeDiagnostics) {
  const auto r = ingest_text(kHeader + "a,u1,Gardening,2000,10,1,2023-06-01T00:00:00Z,1,0.5\n"
                                       "b,u1,Pet,2000,10,1,yesterday,1,0.5\n"
                                       "c,u1,Pet,2000,10,1,2023-06-01T00:00:00Z,inf,0.5\n"
                                       "d,u1,Pet,2000,10,1,2023-06-01T00:00:00Z,1\n"
                                       "e,u1,Pet,2000,-3,1,2023-06-01T00:00:00Z,1,0.5\n"
                                       "f,u1,Pet,2000,10,1,2023-06-01T00:00:00Z,1,0.5\n"
                                       "f,u1,Pet,2000,10,1,2023-06-01T00:00:00Z,1,0.5\n");
  ASSERT_EQ(r.posts.size(), 1U);
  ASSERT_EQ(r.diagnostics.size(), 6U);
  EXPECT_EQ(r.diagnostics[0].column, "category");
  EXPECT_EQ(r.diagnostics[1].column, "posted_at");
  EXPECT_EQ(r.diagnostics[2].reason, "non-finite value");
  EXPECT_EQ(r.diagnostics[3].column, "");
  EXPECT_EQ(r.diagnostics[4].column, "likes");
  EXPECT_EQ(r.diagnostics[5].reason, "duplicate post_id");
}

TEST(Ingest, EmptyCellIsMissingNotZero) {
  const auto r = ingest_text(kHeader + "a,u1,Pet,2000,10,1,2023-06-01T00:00:00Z,,0.5\n");
  ASSERT_EQ(r.posts.size(), 1U);
  EXPECT_FALSE(r.posts[0].features.contains("n_mentions"));
  EXPECT_DOUBLE_EQ(r.posts[0].features.at("brightness"), 0.5);
}

TEST(Ingest, QuotedFieldsAndCrlf) {
  const auto r = ingest_text(
      "post_id,influencer_id,category,followers,likes,comments,posted_at,x\r\n"
      "\"a,1\",\"u \"\"q\"\"\",pet,2000,10,1,2023-06-01T02:00:00+02:00,1.5\r\n");
  ASSERT_EQ(r.posts.size(), 1U);
  EXPECT_EQ(r.posts[0].post_id, "a,1");
  EXPECT_EQ(r.posts[0].influencer_id, "u \"q\"");
  EXPECT_EQ(r.posts[0].category, Category::kPet);
  EXPECT_EQ(format_rfc3339(r.posts[0].posted_at), "2023-06-01T00:00:00Z");
}

TEST(Ingest, ZeroValidRowsIsFatal) {
  EXPECT_THROW(ingest_text(kHeader + "a,u1,Pet,0,10,1,2023-06-01T00:00:00Z,1,0.5\n"),
               ValidationError);
  EXPECT_THROW(ingest_text("post_id,likes\n1,2\n"), ValidationError);
}

TEST(Ingest, JsonlMatchesCsv) {
  const auto csv = ingest_text(kHeader + "a,u1,Pet,10000,500,20,2023-06-01T00:00:00Z,3,\n");
  std::istringstream jl(
      R"({"post_id":"a","influencer_id":"u1","category":"Pet","followers":10000,"likes":500,"comments":20,"posted_at":"2023-06-01T00:00:00Z","n_mentions":3,"brightness":null})"
      "\n{\"post_id\": 5}\n");
  const auto json = ingest_jsonl(jl);
  ASSERT_EQ(json.posts.size(), 1U);
  ASSERT_EQ(json.diagnostics.size(), 1U);
  EXPECT_EQ(json.diagnostics[0].reason, "missing required field");
  EXPECT_EQ(to_json(json.posts[0]), to_json(csv.posts[0]));
}

TEST(FilterWindow, BoundariesAreInclusive) {
  const auto end = parse_rfc3339("2023-06-30T00:00:00Z");
  using std::chrono::days;
  std::vector<PostRecord> posts{
      make_post("d31", Category::kPet, 2000, 1, end - days{31}),
      make_post("d3", Category::kPet, 2000, 1, end - days{3}),
      make_post("d10", Category::kPet, 2000, 1, end - days{10}),
      make_post("d5", Category::kPet, 2000, 1, end - days{5}),
      make_post("d30", Category::kPet, 2000, 1, end - days{30}),
      make_post("d30+1s", Category::kPet, 2000, 1, end - days{30} - std::chrono::seconds{1}),
  };
  const auto kept = filter_window(posts, end);
  std::vector<std::string> ids;
  for (const auto& p : kept) ids.push_back(p.post_id);
  EXPECT_EQ(ids, (std::vector<std::string>{"d10", "d5", "d30"}));
  EXPECT_EQ(filter_window(kept, end).size(), kept.size());
}

TEST(Tier, HalfOpenBoundaries) {
  EXPECT_EQ(assign_tier(9999).name, TierName::kNano);
  EXPECT_EQ(assign_tier(10000).name, TierName::kMicro);
  EXPECT_EQ(assign_tier(1500000).name, TierName::kMega);
  EXPECT_EQ(assign_tier(1000).name, TierName::kNano);
  EXPECT_EQ(assign_tier(49999).name, TierName::kMicro);
  EXPECT_EQ(assign_tier(50000).name, TierName::kMid);
  EXPECT_EQ(assign_tier(499999).name, TierName::kMid);
  EXPECT_EQ(assign_tier(500000).name, TierName::kMacro);
  EXPECT_EQ(assign_tier(999999).name, TierName::kMacro);
  EXPECT_EQ(assign_tier(1000000).name, TierName::kMega);
  try {
    assign_tier(999);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("sub-influencer account"), std::string::npos);
  }
}

TEST(Tier, TablePartitionsFromOneThousand) {
  SplitMix64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto f = static_cast<std::int64_t>(1000 + rng.below(3'000'000));
    int hits = 0;
    for (const auto& t : tier_table()) hits += t.contains(f);
    EXPECT_EQ(hits, 1) << f;
  }
}

TEST(Normalization, ScaleEquivariance) {
  SplitMix64 rng(11);
  for (int i = 0; i < 500; ++i) {
    PostRecord p = make_post("x", Category::kPet, 1 + static_cast<std::int64_t>(rng.below(10000)),
                             static_cast<std::int64_t>(rng.below(10000)));
    const auto k = 1 + static_cast<std::int64_t>(rng.below(50));
    PostRecord q = p;
    q.followers *= k;
    q.likes *= k;
    EXPECT_DOUBLE_EQ(p.engagement().likes_rate, q.engagement().likes_rate);
  }
}

std::vector<PostRecord> ten_posts() {
  std::vector<PostRecord> posts;
  const std::array<std::pair<Category, std::int64_t>, 10> cases{{
      {Category::kPet, 2000}, {Category::kFood, 2000}, {Category::kPet, 5000},
      {Category::kPet, 20000}, {Category::kPet, 9999}, {Category::kTravel, 3000},
      {Category::kPet, 1000}, {Category::kFood, 60000}, {Category::kOther, 2e6},
      {Category::kFashion, 700000},
  }};
  for (std::size_t i = 0; i < cases.size(); ++i) {
    auto p = make_post("p" + std::to_string(9 - i), cases[i].first, cases[i].second,
                       static_cast<std::int64_t>(10 * i + 5));
    if (i != 2) p.features["n_mentions"] = static_cast<double>(i);
    posts.push_back(p);
  }
  return posts;
}

TEST(Slice, FiltersAndSortsByPostId) {
  const auto posts = ten_posts();
  const auto t = slice(posts, {"n_mentions"}, {Category::kPet, TierName::kNano, Metric::kLikes});
  ASSERT_EQ(t.rows(), 4U);
  EXPECT_TRUE(std::is_sorted(t.post_ids.begin(), t.post_ids.end()));
  EXPECT_EQ(t.matrix.cols(), 1);
  // Pet/Nano rows carry n_mentions {0, 4, 6} plus one missing cell -> median 4.
  EXPECT_EQ(t.imputed_counts[0], 1U);
  const auto column = t.column(0);
  EXPECT_EQ(std::count(column.begin(), column.end(), 4.0), 2);
  const auto again = slice(posts, {"n_mentions"}, {Category::kPet, TierName::kNano, Metric::kLikes});
  EXPECT_EQ(again.post_ids, t.post_ids);
  EXPECT_EQ(again.matrix, t.matrix);
}

TEST(Slice, EmptySliceAndAllMissingColumn) {
  const auto posts = ten_posts();
  const auto empty = slice(posts, {"n_mentions"}, {Category::kBeauty, TierName::kMega, Metric::kLikes});
  EXPECT_TRUE(empty.empty());
  const auto t = slice(posts, {"ghost"}, {Category::kPet, TierName::kNano, Metric::kComments});
  EXPECT_EQ(t.imputed_counts[0], t.rows());
  EXPECT_TRUE((t.matrix.array() == 0.0).all());
}

TEST(Slice, CountsPartitionTheDataset) {
  SplitMix64 rng(5);
  std::vector<PostRecord> posts;
  for (int i = 0; i < 400; ++i) {
    posts.push_back(make_post("p" + std::to_string(i),
                              kAllCategories[rng.below(kAllCategories.size())],
                              1000 + static_cast<std::int64_t>(rng.below(2'000'000)), 3));
  }
  std::size_t total = 0;
  for (auto c : kAllCategories) {
    for (auto t : kAllTiers) total += slice(posts, {}, {c, t, Metric::kLikes}).rows();
  }
  EXPECT_EQ(total, posts.size());
  std::size_t counted = 0;
  for (const auto& [key, count] : slice_counts(posts)) counted += count.posts;
  EXPECT_EQ(counted, posts.size());
}

TEST(SliceKey, TextRoundTrip) {
  const SliceKey key{Category::kPet, TierName::kMega, Metric::kComments};
  EXPECT_EQ(key.to_string(), "Pet/Mega/comments");
  EXPECT_EQ(SliceKey::parse("pet/mega/comments"), key);
  EXPECT_EQ(key.relative_dir(), std::filesystem::path("Pet/Mega/comments"));
  EXPECT_THROW(SliceKey::parse("Pet/Giga/likes"), ValidationError);
}

TEST(Timestamp, OffsetsAndFractions) {
  EXPECT_EQ(parse_rfc3339("2023-05-01T14:00:00.250+02:00"), parse_rfc3339("2023-05-01T12:00:00Z"));
  EXPECT_EQ(format_rfc3339(parse_rfc3339("2024-02-29T23:59:59-00:30")), "2024-03-01T00:29:59Z");
  EXPECT_THROW(parse_rfc3339("2023-13-01T00:00:00Z"), ValidationError);
  EXPECT_THROW(parse_rfc3339("2023-05-01 12:00:00"), ValidationError);
}

}  // namespace
}  // namespace engage
