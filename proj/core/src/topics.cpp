#include "engage/topics.hpp"

#include <algorithm>
#include <set>

#include "parallel.hpp"

namespace engage::topics {

DiversityIndex simpson_diversity(std::span<const std::uint64_t> counts) {
  DiversityIndex out;
  std::uint64_t pairs = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    out.counts.push_back(c);
    out.total += c;
    pairs += c * (c - 1);
  }
  if (out.total < 2) throw ValidationError("simpson_diversity: need N >= 2");
  const auto n = static_cast<double>(out.total);
  out.value = 1.0 - static_cast<double>(pairs) / (n * (n - 1.0));
  out.value = std::clamp(out.value, 0.0, 1.0);
  return out;
}

std::string_view to_string(Quadrant quadrant) {
  switch (quadrant) {
    case Quadrant::kGeneralTopic: return "general_topic";
    case Quadrant::kUserSpecificTopic: return "user_specific_topic";
    case Quadrant::kUnreliableHighEdLowUd: return "unreliable_high_ed_low_ud";
    case Quadrant::kUnreliableHighEdHighUd: return "unreliable_high_ed_high_ud";
  }
  return "user_specific_topic";
}

Quadrant quadrant_of(double user_diversity, double engagement_diversity) noexcept {
  const bool high_ud = user_diversity >= kDiversityThreshold;
  const bool high_ed = engagement_diversity >= kDiversityThreshold;
  if (!high_ed) return high_ud ? Quadrant::kGeneralTopic : Quadrant::kUserSpecificTopic;
  return high_ud ? Quadrant::kUnreliableHighEdHighUd : Quadrant::kUnreliableHighEdLowUd;
}

nlohmann::json to_json(const TopicNeighborhood& t) {
  return {{"anchor", t.anchor},
          {"members", t.members},
          {"class", t.engagement_class},
          {"mean_engagement", t.mean_engagement},
          {"UD", t.user_diversity},
          {"ED", t.engagement_diversity},
          {"quadrant", to_string(t.quadrant)},
          {"modality", to_string(t.modality)},
          {"slice", t.slice_key}};
}

namespace {

void check_alignment(const EmbeddingTable& embeddings, std::span<const double> engagement) {
  if (engagement.size() != embeddings.size()) {
    throw ValidationError("engagement values not aligned with embedding rows");
  }
}

double mean_of(std::span<const double> engagement, std::span<const std::size_t> rows) {
  double sum = 0.0;
  for (auto r : rows) sum += engagement[r];
  return rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
}

}  // namespace

std::vector<TopicNeighborhood> purity_scan(const EmbeddingTable& embeddings,
                                           std::span<const double> engagement,
                                           const stats::EngagementClassBoundaries& boundaries,
                                           std::size_t k, unsigned threads) {
  check_alignment(embeddings, engagement);
  const KnnIndex index(embeddings);
  const auto neighbours = index.query_all(k, threads);
  const auto& ids = embeddings.post_ids();
  std::vector<TopicNeighborhood> out;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const int own = boundaries.classify(engagement[i]);
    const double mean = mean_of(engagement, neighbours[i]);
    if (boundaries.classify(mean) != own) continue;
    TopicNeighborhood t;
    t.anchor = ids[i];
    t.members.reserve(k + 1);
    t.members.push_back(ids[i]);
    for (auto r : neighbours[i]) t.members.push_back(ids[r]);
    t.engagement_class = own;
    t.mean_engagement = mean;
    t.modality = embeddings.modality();
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<PurityPoint> purity_curve(const EmbeddingTable& embeddings,
                                      std::span<const double> engagement,
                                      const stats::EngagementClassBoundaries& boundaries,
                                      std::span<const std::size_t> k_list, unsigned threads) {
  check_alignment(embeddings, engagement);
  if (k_list.empty()) return {};
  const auto k_max = *std::max_element(k_list.begin(), k_list.end());
  if (k_max >= embeddings.size()) throw ValidationError("purity_curve: max k must be < n");
  const auto neighbours = KnnIndex(embeddings).query_all(k_max, threads);
  std::vector<PurityPoint> out;
  for (auto k : k_list) {
    if (k < 1) throw ValidationError("purity_curve: k must be >= 1");
    std::size_t pure = 0;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
      const double mean = mean_of(engagement, std::span(neighbours[i]).first(k));
      if (boundaries.classify(mean) == boundaries.classify(engagement[i])) ++pure;
    }
    out.push_back({k, static_cast<double>(pure) / static_cast<double>(embeddings.size())});
  }
  return out;
}

TopicNeighborhood classify_topic(TopicNeighborhood nbh, const MemberLookup& lookup) {
  std::vector<std::string> influencers;
  std::vector<int> classes;
  for (const auto& m : nbh.members) {
    const auto it = lookup.find(m);
    if (it == lookup.end()) throw ValidationError("classify_topic: unknown member '" + m + "'");
    influencers.push_back(it->second.influencer);
    classes.push_back(it->second.engagement_class);
  }
  nbh.user_diversity = simpson_of(std::span<const std::string>(influencers)).value;
  nbh.engagement_diversity = simpson_of(std::span<const int>(classes)).value;
  nbh.quadrant = quadrant_of(nbh.user_diversity, nbh.engagement_diversity);
  return nbh;
}

std::vector<TopicNeighborhood> dedup_neighborhoods(std::vector<TopicNeighborhood> nbhs,
                                                   double overlap_threshold) {
  std::sort(nbhs.begin(), nbhs.end(), [](const TopicNeighborhood& a, const TopicNeighborhood& b) {
    if (a.user_diversity != b.user_diversity) return a.user_diversity > b.user_diversity;
    if (a.mean_engagement != b.mean_engagement) return a.mean_engagement > b.mean_engagement;
    return a.anchor < b.anchor;
  });
  std::vector<TopicNeighborhood> kept;
  std::vector<std::vector<std::string>> kept_sorted;
  for (auto& candidate : nbhs) {
    auto members = candidate.members;
    std::sort(members.begin(), members.end());
    const auto size = static_cast<double>(members.size());
    bool drop = false;
    for (const auto& other : kept_sorted) {
      std::size_t shared = 0;
      auto a = members.begin();
      auto b = other.begin();
      while (a != members.end() && b != other.end()) {
        if (*a < *b) {
          ++a;
        } else if (*b < *a) {
          ++b;
        } else {
          ++shared;
          ++a;
          ++b;
        }
      }
      if (static_cast<double>(shared) / size > overlap_threshold) {
        drop = true;
        break;
      }
    }
    if (drop) continue;
    kept_sorted.push_back(std::move(members));
    kept.push_back(std::move(candidate));
  }
  return kept;
}

HotTopicReport hot_topic_report(const HotTopicInput& input) {
  HotTopicReport report;
  report.slice_key = input.slice_key;
  report.modality = input.embeddings.modality();
  report.k = input.k;
  report.points = input.embeddings.size();
  check_alignment(input.embeddings, input.engagement);
  if (input.influencers.size() != input.embeddings.size()) {
    throw ValidationError("influencers not aligned with embedding rows");
  }
  if (input.embeddings.size() <= input.k || input.embeddings.size() < 5) {
    report.notes.push_back("slice has " + std::to_string(input.embeddings.size()) +
                           " embedded posts; need more than k=" + std::to_string(input.k));
    return report;
  }

  EmbeddingTable space = input.embeddings;
  if (input.apply_pca) {
    auto pca = pca_reduce(input.embeddings, input.pca_components);
    report.notes.insert(report.notes.end(), pca.warnings.begin(), pca.warnings.end());
    space = std::move(pca.reduced);
  }
  const auto boundaries = stats::engagement_classes(input.engagement);
  if (boundaries.degenerate) {
    report.notes.push_back("engagement quintile cutpoints coincide; some classes are empty");
  }

  auto pure = purity_scan(space, input.engagement, boundaries, input.k, input.threads);
  report.pure_neighborhoods = pure.size();

  MemberLookup lookup;
  for (std::size_t i = 0; i < space.size(); ++i) {
    lookup.emplace(space.post_ids()[i],
                   MemberInfo{input.influencers[i], boundaries.classify(input.engagement[i])});
  }
  std::vector<TopicNeighborhood> top;
  for (auto& t : pure) {
    if (t.engagement_class != 5) continue;
    t.slice_key = input.slice_key;
    top.push_back(classify_topic(std::move(t), lookup));
  }
  report.top_class_pure = top.size();
  report.topics = dedup_neighborhoods(std::move(top));
  std::stable_sort(report.topics.begin(), report.topics.end(),
                   [](const TopicNeighborhood& a, const TopicNeighborhood& b) {
                     return a.user_diversity > b.user_diversity;
                   });
  if (report.topics.empty()) report.notes.push_back("no pure neighbourhood in the top engagement class");
  return report;
}

nlohmann::json to_json(const HotTopicReport& r) {
  nlohmann::json topics = nlohmann::json::array();
  for (const auto& t : r.topics) topics.push_back(to_json(t));
  return {{"slice", r.slice_key},
          {"modality", to_string(r.modality)},
          {"k", r.k},
          {"points", r.points},
          {"pure_neighborhoods", r.pure_neighborhoods},
          {"top_class_pure", r.top_class_pure},
          {"topics", std::move(topics)},
          {"notes", r.notes}};
}

}  // namespace engage::topics
