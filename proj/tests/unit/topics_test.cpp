#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "engage/topics.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace engage::topics {
namespace {

EmbeddingTable table_of(const Matrix& m, Modality modality = Modality::kImage) {
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "p%05ld", static_cast<long>(i));
    ids.emplace_back(buf);
  }
  return EmbeddingTable(std::move(ids), m, modality);
}

double simpson_direct(const std::vector<std::uint64_t>& counts) {
  double num = 0, n = 0;
  for (auto c : counts) {
    num += static_cast<double>(c) * (static_cast<double>(c) - 1);
    n += static_cast<double>(c);
  }
  return 1.0 - num / (n * (n - 1));
}

TEST(Simpson, Examples) {
  EXPECT_EQ(simpson_diversity(std::vector<std::uint64_t>{51}).value, 0.0);
  EXPECT_EQ(simpson_diversity(std::vector<std::uint64_t>(51, 1)).value, 1.0);
  EXPECT_DOUBLE_EQ(simpson_diversity(std::vector<std::uint64_t>{3, 2}).value, 0.6);
  EXPECT_THROW(simpson_diversity(std::vector<std::uint64_t>{1}), ValidationError);
  EXPECT_THROW(simpson_diversity(std::vector<std::uint64_t>{}), ValidationError);
  EXPECT_THROW(simpson_diversity(std::vector<std::uint64_t>{0, 1, 0}), ValidationError);
}

TEST(Simpson, ZerosPermutationAndOracle) {
  EXPECT_EQ(simpson_diversity(std::vector<std::uint64_t>{2, 0, 0}).value,
            simpson_diversity(std::vector<std::uint64_t>{2}).value);
  SplitMix64 rng(4);
  for (int t = 0; t < 300; ++t) {
    std::vector<std::uint64_t> counts(1 + rng.below(12));
    for (auto& c : counts) c = rng.below(20);
    if (std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}) < 2) continue;
    const double d = simpson_diversity(counts).value;
    EXPECT_NEAR(d, simpson_direct(counts), 1e-14);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    auto shuffled = counts;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(simpson_diversity(shuffled).value, d);
  }
  const std::vector<std::string> labels{"a", "b", "a", "c", "a"};
  EXPECT_DOUBLE_EQ(simpson_of(std::span<const std::string>(labels)).value, 1.0 - 6.0 / 20.0);
}

TEST(Quadrant, ThresholdsAreInclusive) {
  EXPECT_EQ(quadrant_of(0.5, 0.49), Quadrant::kGeneralTopic);
  EXPECT_EQ(quadrant_of(0.49, 0.49), Quadrant::kUserSpecificTopic);
  EXPECT_EQ(quadrant_of(0.49, 0.5), Quadrant::kUnreliableHighEdLowUd);
  EXPECT_EQ(quadrant_of(0.5, 0.5), Quadrant::kUnreliableHighEdHighUd);
  EXPECT_EQ(to_string(Quadrant::kGeneralTopic), "general_topic");
}

TopicNeighborhood neighborhood(const std::string& anchor, std::vector<std::string> members,
                               double ud = 0.0, double mean = 0.0) {
  TopicNeighborhood t;
  t.anchor = anchor;
  t.members = std::move(members);
  t.user_diversity = ud;
  t.mean_engagement = mean;
  return t;
}

TEST(ClassifyTopic, Extremes) {
  std::vector<std::string> members;
  MemberLookup distinct, single;
  for (int i = 0; i < 51; ++i) {
    members.push_back("m" + std::to_string(i));
    distinct[members.back()] = {"inf" + std::to_string(i), 5};
    single[members.back()] = {"solo", 5};
  }
  const auto g = classify_topic(neighborhood("m0", members), distinct);
  EXPECT_EQ(g.user_diversity, 1.0);
  EXPECT_EQ(g.engagement_diversity, 0.0);
  EXPECT_EQ(g.quadrant, Quadrant::kGeneralTopic);
  const auto u = classify_topic(neighborhood("m0", members), single);
  EXPECT_EQ(u.user_diversity, 0.0);
  EXPECT_EQ(u.quadrant, Quadrant::kUserSpecificTopic);

  MemberLookup mixed{{"a", {"x", 5}}, {"b", {"x", 5}}, {"c", {"x", 4}}, {"d", {"y", 5}}, {"e", {"y", 5}}};
  const auto m = classify_topic(neighborhood("a", {"a", "b", "c", "d", "e"}), mixed);
  EXPECT_DOUBLE_EQ(m.user_diversity, 0.6);
  EXPECT_DOUBLE_EQ(m.engagement_diversity, 0.4);
  EXPECT_THROW(classify_topic(neighborhood("a", {"a", "zz"}), mixed), ValidationError);
}

std::vector<std::string> ids(const std::string& prefix, int from, int to) {
  std::vector<std::string> out;
  for (int i = from; i < to; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

TEST(Dedup, OverlapRatioUsesAllMembers) {
  auto a = ids("x", 0, 51);
  auto b = ids("x", 9, 51);  // 42 shared
  auto b_ext = ids("y", 0, 9);
  b.insert(b.end(), b_ext.begin(), b_ext.end());
  auto out = dedup_neighborhoods({neighborhood("x0", a, 0.9), neighborhood("x9", b, 0.8)});
  ASSERT_EQ(out.size(), 1U);
  EXPECT_EQ(out[0].anchor, "x0");

  auto c = ids("x", 10, 51);  // 41 shared: 0.804 > 0.8
  auto c_ext = ids("z", 0, 10);
  c.insert(c.end(), c_ext.begin(), c_ext.end());
  EXPECT_EQ(dedup_neighborhoods({neighborhood("x0", a, 0.9), neighborhood("x10", c, 0.8)}).size(), 1U);

  auto e = ids("x", 11, 51);  // 40 shared: 0.784
  auto e_ext = ids("w", 0, 11);
  e.insert(e.end(), e_ext.begin(), e_ext.end());
  EXPECT_EQ(dedup_neighborhoods({neighborhood("x0", a, 0.9), neighborhood("x11", e, 0.8)}).size(), 2U);

  EXPECT_EQ(dedup_neighborhoods({neighborhood("x0", a), neighborhood("x0b", a)}).size(), 1U);
  EXPECT_EQ(dedup_neighborhoods({neighborhood("x0", a), neighborhood("q0", ids("q", 0, 51))}).size(), 2U);
}

TEST(Dedup, PriorityOrderAndIdempotence) {
  SplitMix64 rng(12);
  std::vector<TopicNeighborhood> in;
  for (int i = 0; i < 60; ++i) {
    std::vector<std::string> m;
    const int start = static_cast<int>(rng.below(40));
    for (int j = 0; j < 11; ++j) m.push_back("p" + std::to_string(start + j + (rng.below(4) == 0 ? 100 : 0)));
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());
    in.push_back(neighborhood("a" + std::to_string(i), m, static_cast<double>(rng.below(5)) / 4.0,
                              rng.uniform()));
  }
  const auto once = dedup_neighborhoods(in);
  const auto twice = dedup_neighborhoods(once);
  ASSERT_EQ(once.size(), twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(once[i].anchor, twice[i].anchor);
  auto reversed = in;
  std::reverse(reversed.begin(), reversed.end());
  const auto from_reversed = dedup_neighborhoods(reversed);
  ASSERT_EQ(from_reversed.size(), once.size());
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(once[i].anchor, from_reversed[i].anchor);
  for (std::size_t i = 1; i < once.size(); ++i)
    EXPECT_GE(once[i - 1].user_diversity, once[i].user_diversity);
}

TEST(Knn, CollinearAndTies) {
  Matrix line(4, 1);
  line << 0, 1, 2, 3;
  const auto t = table_of(line);
  EXPECT_EQ(knn(t, "p00000", 2), (std::vector<std::string>{"p00001", "p00002"}));
  EXPECT_EQ(knn(t, "p00002", 2), (std::vector<std::string>{"p00001", "p00003"}));
  EXPECT_THROW(knn(t, "nope", 1), ValidationError);
  EXPECT_THROW(knn(t, "p00000", 4), ValidationError);

  Matrix sym(3, 1);
  sym << 0, -1, 1;
  const EmbeddingTable named({"m", "z", "b"}, sym, Modality::kText);
  EXPECT_EQ(knn(named, "m", 1), (std::vector<std::string>{"b"}));
  Matrix dup = Matrix::Zero(4, 2);
  const EmbeddingTable same({"d", "c", "b", "a"}, dup, Modality::kText);
  EXPECT_EQ(knn(same, "c", 3), (std::vector<std::string>{"a", "b", "d"}));
}

TEST(Knn, AgreesWithBruteForce) {
  SplitMix64 rng(21);
  Matrix m = testing::gaussian(rng, 300, 6);
  for (Eigen::Index i = 0; i < 40; ++i) m.row(i + 100) = m.row(i);  // exact duplicates
  const auto t = table_of(m);
  const KnnIndex index(t);
  for (std::size_t k : {1U, 3U, 10U, 50U}) {
    const auto all = index.query_all(k, 1);
    for (std::size_t a = 0; a < t.size(); a += 7) {
      const auto expect = testing::brute_force_knn(t, a, k);
      ASSERT_EQ(all[a].size(), k);
      for (std::size_t j = 0; j < k; ++j) EXPECT_EQ(t.post_ids()[all[a][j]], expect[j]);
      EXPECT_EQ(std::count(all[a].begin(), all[a].end(), a), 0);
    }
  }
  EXPECT_EQ(index.query_all(5, 1), index.query_all(5, 3));
}

TEST(Pca, PlaneReconstructionAndRatios) {
  SplitMix64 rng(2);
  const Matrix coeffs = testing::gaussian(rng, 80, 2);
  const Matrix basis = testing::gaussian(rng, 2, 9);
  Matrix plane = coeffs * basis;
  plane.rowwise() += Eigen::RowVectorXd::LinSpaced(9, 1, 9);
  const auto r = pca_reduce(table_of(plane), 2);
  EXPECT_EQ(r.components, 2);
  EXPECT_EQ(r.reduced.dim(), 2U);
  EXPECT_LE((r.reconstruct() - plane).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_NEAR(r.explained_variance_ratio[0] + r.explained_variance_ratio[1], 1.0, 1e-10);

  const Matrix noise = testing::gaussian(rng, 120, 15);
  const auto full = pca_reduce(table_of(noise), 15);
  for (std::size_t i = 1; i < full.explained_variance_ratio.size(); ++i)
    EXPECT_LE(full.explained_variance_ratio[i], full.explained_variance_ratio[i - 1]);
  const Eigen::MatrixXd gram = full.axes.transpose() * full.axes;
  EXPECT_LE((gram - Eigen::MatrixXd::Identity(15, 15)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(full.reduced.post_ids(), table_of(noise).post_ids());
}

TEST(Pca, FullRankPreservesDistances) {
  SplitMix64 rng(8);
  const Matrix m = testing::gaussian(rng, 500, 50);
  const auto r = pca_reduce(table_of(m), 50);
  const Matrix& z = r.reduced.vectors();
  double worst = 0;
  for (Eigen::Index i = 0; i < 500; i += 3) {
    for (Eigen::Index j = i + 1; j < 500; j += 5) {
      worst = std::max(worst, std::abs((m.row(i) - m.row(j)).norm() - (z.row(i) - z.row(j)).norm()));
    }
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(Pca, WideInputAndClamping) {
  SplitMix64 rng(5);
  const Matrix wide = testing::gaussian(rng, 30, 200);
  const auto r = pca_reduce(table_of(wide), 100);
  EXPECT_EQ(r.components, 29);
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings[0].find("clamped"), std::string::npos);
  const Matrix& z = r.reduced.vectors();
  double worst = 0;
  for (Eigen::Index i = 0; i < 30; ++i)
    for (Eigen::Index j = i + 1; j < 30; ++j)
      worst = std::max(worst, std::abs((wide.row(i) - wide.row(j)).norm() - (z.row(i) - z.row(j)).norm()));
  EXPECT_LE(worst, 1e-8);
  EXPECT_THROW(pca_reduce(table_of(Matrix::Ones(1, 3)), 1), ValidationError);
  const auto flat = pca_reduce(table_of(Matrix::Ones(6, 3)), 2);
  EXPECT_TRUE(flat.reduced.vectors().isZero(1e-12));
}

TEST(Purity, PlantedClusterIsPure) {
  SplitMix64 rng(31);
  Matrix m = testing::gaussian(rng, 500, 8) * 5.0;
  std::vector<double> engagement(500);
  for (auto& e : engagement) e = rng.uniform();
  for (Eigen::Index i = 0; i < 60; ++i) {
    m.row(i) = Eigen::RowVectorXd::Constant(8, 40.0) + 1e-3 * testing::gaussian(rng, 1, 8);
    engagement[static_cast<std::size_t>(i)] = 2.0 + rng.uniform();
  }
  const auto t = table_of(m);
  const auto b = stats::engagement_classes(engagement);
  const auto pure = purity_scan(t, engagement, b, 50, 1);
  std::set<std::string> anchors;
  for (const auto& n : pure) {
    anchors.insert(n.anchor);
    EXPECT_EQ(n.members.size(), 51U);
    EXPECT_EQ(n.members[0], n.anchor);
    EXPECT_EQ(b.classify(n.mean_engagement), n.engagement_class);
  }
  for (std::size_t i = 0; i < 60; ++i) EXPECT_TRUE(anchors.contains(t.post_ids()[i]));
}

TEST(Purity, MixedEmbeddingsMatchSimulation) {
  SplitMix64 rng(77);
  const std::size_t n = 2000, k = 50;
  const auto t = table_of(testing::gaussian(rng, n, 10));
  std::vector<double> engagement(n);
  for (auto& e : engagement) e = rng.uniform();
  const auto b = stats::engagement_classes(engagement);
  const std::array<std::size_t, 1> ks{k};
  const double observed = purity_curve(t, engagement, b, ks, 1)[0].pure_fraction;

  // Neighbourhoods independent of engagement: draw k random others per point.
  std::size_t pure = 0, trials = 0;
  for (int rep = 0; rep < 5; ++rep) {
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0;
      for (std::size_t j = 0; j < k; ++j) {
        std::size_t o = rng.below(n - 1);
        if (o >= i) ++o;
        sum += engagement[o];
      }
      pure += b.classify(sum / static_cast<double>(k)) == b.classify(engagement[i]);
      ++trials;
    }
  }
  const double expected = static_cast<double>(pure) / static_cast<double>(trials);
  EXPECT_NEAR(observed, expected, 0.04);
  EXPECT_LT(observed, 0.5);
}

TEST(Purity, CurveProperties) {
  Matrix m(20, 2);
  std::vector<double> engagement(20);
  for (Eigen::Index i = 0; i < 20; ++i) {
    m(i, 0) = static_cast<double>(i / 2) * 10.0;
    m(i, 1) = 0;
    engagement[static_cast<std::size_t>(i)] = static_cast<double>(i / 2);
  }
  const auto t = table_of(m);
  const auto b = stats::engagement_classes(engagement);
  const std::array<std::size_t, 1> one{1};
  EXPECT_EQ(purity_curve(t, engagement, b, one, 1)[0].pure_fraction, 1.0);

  SplitMix64 rng(3);
  const auto r = table_of(testing::gaussian(rng, 200, 4));
  std::vector<double> e(200);
  for (auto& v : e) v = rng.uniform() * 100;
  const auto curve = purity_curve(r, e, stats::engagement_classes(e), kDefaultPurityKs, 1);
  ASSERT_EQ(curve.size(), 7U);
  for (const auto& p : curve) {
    EXPECT_GE(p.pure_fraction, 0.0);
    EXPECT_LE(p.pure_fraction, 1.0);
  }
  auto shifted = e;
  for (auto& v : shifted) v += 1234.5;
  const auto again = purity_curve(r, shifted, stats::engagement_classes(shifted), kDefaultPurityKs, 1);
  for (std::size_t i = 0; i < curve.size(); ++i) EXPECT_EQ(curve[i].pure_fraction, again[i].pure_fraction);
  const std::array<std::size_t, 1> too_big{200};
  EXPECT_THROW(purity_curve(r, e, stats::engagement_classes(e), too_big, 1), ValidationError);
}

TEST(HotTopics, PlantedClustersLandInTheRightQuadrants) {
  const auto p = testing::planted_topics(600, 32, 9);
  HotTopicInput in;
  in.slice_key = "Pet/Micro/likes";
  in.embeddings = p.embeddings;
  in.engagement = p.engagement;
  in.influencers = p.influencers;
  in.k = 50;
  in.pca_components = 20;
  in.threads = 1;
  const auto report = hot_topic_report(in);
  ASSERT_FALSE(report.topics.empty());
  const std::set<std::string> multi(p.multi_cluster.begin(), p.multi_cluster.end());
  const std::set<std::string> single(p.single_cluster.begin(), p.single_cluster.end());
  bool general = false, user_specific = false;
  for (const auto& t : report.topics) {
    EXPECT_EQ(t.engagement_class, 5);
    EXPECT_EQ(t.slice_key, "Pet/Micro/likes");
    std::size_t in_multi = 0, in_single = 0;
    for (const auto& m : t.members) {
      in_multi += multi.contains(m);
      in_single += single.contains(m);
    }
    if (multi.contains(t.anchor) && in_multi >= 48 && t.quadrant == Quadrant::kGeneralTopic) {
      general = true;
      EXPECT_GT(t.user_diversity, 0.5);
      EXPECT_LT(t.engagement_diversity, 0.5);
    }
    if (single.contains(t.anchor) && in_single >= 48) {
      EXPECT_EQ(t.quadrant, Quadrant::kUserSpecificTopic);
      user_specific = true;
    }
  }
  EXPECT_TRUE(general);
  EXPECT_TRUE(user_specific);
  for (std::size_t i = 1; i < report.topics.size(); ++i)
    EXPECT_GE(report.topics[i - 1].user_diversity, report.topics[i].user_diversity);
  const auto j = to_json(report);
  EXPECT_EQ(j["topics"][0]["quadrant"], to_string(report.topics[0].quadrant));
  EXPECT_EQ(j["topics"][0]["members"].size(), 51U);

  in.embeddings = p.embeddings.select(std::vector<std::string>(p.embeddings.post_ids().begin(),
                                                               p.embeddings.post_ids().begin() + 30));
  in.engagement.resize(30);
  in.influencers.resize(30);
  const auto tiny = hot_topic_report(in);
  EXPECT_TRUE(tiny.topics.empty());
  EXPECT_FALSE(tiny.notes.empty());
}

}  // namespace
}  // namespace engage::topics
