#include "engage/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "engage/csv.hpp"

namespace engage {

namespace {

constexpr std::array<std::string_view, 9> kCategoryNames{
    "Beauty", "Family", "Fashion", "Fitness", "Food", "Interior", "Pet", "Travel", "Other"};
constexpr std::array<std::string_view, 5> kTierNames{"Nano", "Micro", "Mid", "Macro", "Mega"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

struct RowError {
  std::string column;
  std::string reason;
};

std::int64_t parse_count(std::string_view text, std::string_view column) {
  text = trim(text);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    // Accept integral values written as reals ("1200.0").
    double real = 0;
    auto [p2, e2] = std::from_chars(text.data(), text.data() + text.size(), real);
    if (text.empty() || e2 != std::errc{} || p2 != text.data() + text.size() ||
        !std::isfinite(real) || real != std::floor(real)) {
      throw RowError{std::string(column), "not an integer"};
    }
    value = static_cast<std::int64_t>(real);
  }
  return value;
}

/// nullopt for an empty (missing) cell; throws RowError for garbage or non-finite.
std::optional<double> parse_feature(std::string_view text, std::string_view column) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw RowError{std::string(column), "not a number"};
  }
  if (!std::isfinite(value)) throw RowError{std::string(column), "non-finite value"};
  return value;
}

/// Builds a record from named string cells; throws RowError on the first problem.
struct RawRow {
  std::string post_id, influencer_id, category, followers, likes, comments, posted_at;
  std::vector<std::pair<std::string, std::string>> features;
};

PostRecord build_record(const RawRow& raw) {
  PostRecord post;
  post.post_id = std::string(trim(raw.post_id));
  if (post.post_id.empty()) throw RowError{"post_id", "empty post_id"};
  post.influencer_id = std::string(trim(raw.influencer_id));
  if (post.influencer_id.empty()) throw RowError{"influencer_id", "empty influencer_id"};
  const auto category = parse_category(trim(raw.category));
  if (!category) throw RowError{"category", "unknown category '" + raw.category + "'"};
  post.category = *category;
  post.followers = parse_count(raw.followers, "followers");
  if (post.followers < 1) throw RowError{"followers", "followers < 1"};
  post.likes = parse_count(raw.likes, "likes");
  if (post.likes < 0) throw RowError{"likes", "likes < 0"};
  post.comments = parse_count(raw.comments, "comments");
  if (post.comments < 0) throw RowError{"comments", "comments < 0"};
  try {
    post.posted_at = parse_rfc3339(trim(raw.posted_at));
  } catch (const ValidationError& e) {
    throw RowError{"posted_at", e.what()};
  }
  for (const auto& [name, cell] : raw.features) {
    if (auto value = parse_feature(cell, name)) post.features.emplace(name, *value);
  }
  return post;
}

void finish(IngestResult& result) {
  if (result.posts.empty()) {
    throw ValidationError("ingest: zero valid rows (" + std::to_string(result.diagnostics.size()) +
                          " rejected)");
  }
}

bool keep_feature(const IngestOptions& options, std::string_view name) {
  if (!options.feature_columns) return true;
  const auto& cols = *options.feature_columns;
  return std::find(cols.begin(), cols.end(), name) != cols.end();
}

}  // namespace

std::string_view to_string(Category category) {
  return kCategoryNames[static_cast<std::size_t>(category)];
}

std::optional<Category> parse_category(std::string_view text) {
  const auto needle = lower(text);
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (lower(kCategoryNames[i]) == needle) return static_cast<Category>(i);
  }
  return std::nullopt;
}

std::string_view to_string(TierName tier) { return kTierNames[static_cast<std::size_t>(tier)]; }

std::optional<TierName> parse_tier(std::string_view text) {
  const auto needle = lower(text);
  for (std::size_t i = 0; i < kTierNames.size(); ++i) {
    if (lower(kTierNames[i]) == needle) return static_cast<TierName>(i);
  }
  return std::nullopt;
}

const std::array<Tier, 5>& tier_table() {
  static const std::array<Tier, 5> kTable{{
      {TierName::kNano, 1'000, 10'000},
      {TierName::kMicro, 10'000, 50'000},
      {TierName::kMid, 50'000, 500'000},
      {TierName::kMacro, 500'000, 1'000'000},
      {TierName::kMega, 1'000'000, std::nullopt},
  }};
  return kTable;
}

Tier assign_tier(std::int64_t followers) {
  if (followers < kInfluencerThreshold) {
    throw ValidationError("sub-influencer account: " + std::to_string(followers) +
                          " followers < 1000");
  }
  for (const auto& tier : tier_table()) {
    if (tier.contains(followers)) return tier;
  }
  throw ValidationError("no tier for " + std::to_string(followers) + " followers");
}

EngagementMetrics PostRecord::engagement() const noexcept {
  const auto f = static_cast<double>(followers);
  return {static_cast<double>(likes) / f, static_cast<double>(comments) / f};
}

nlohmann::json to_json(const PostRecord& post) {
  nlohmann::json j;
  j["post_id"] = post.post_id;
  j["influencer_id"] = post.influencer_id;
  j["category"] = to_string(post.category);
  j["followers"] = post.followers;
  j["likes"] = post.likes;
  j["comments"] = post.comments;
  j["posted_at"] = format_rfc3339(post.posted_at);
  for (const auto& [name, value] : post.features) j[name] = value;
  return j;
}

nlohmann::json to_json(const Diagnostic& d) {
  return {{"row", d.row}, {"column", d.column}, {"reason", d.reason}};
}

IngestResult ingest(const std::filesystem::path& posts_file, const IngestOptions& options) {
  std::ifstream in(posts_file, std::ios::binary);
  if (!in) throw ValidationError("cannot open posts file " + posts_file.string());
  const auto ext = lower(posts_file.extension().string());
  if (ext == ".jsonl" || ext == ".ndjson") return ingest_jsonl(in, options);
  return ingest_csv(in, options);
}

IngestResult ingest_csv(std::istream& in, const IngestOptions& options) {
  csv::Reader reader(in, options.delimiter);
  auto header = reader.next();
  if (!header) throw ValidationError("ingest: empty input (missing header row)");
  if (!header->empty() && header->front().starts_with("\xEF\xBB\xBF")) {
    header->front().erase(0, 3);
  }

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header->size(); ++i) {
    index.emplace(std::string(trim((*header)[i])), i);
  }
  std::array<std::size_t, kRequiredColumns.size()> required{};
  for (std::size_t r = 0; r < kRequiredColumns.size(); ++r) {
    auto it = index.find(std::string(kRequiredColumns[r]));
    if (it == index.end()) {
      throw ValidationError("ingest: missing required column '" +
                            std::string(kRequiredColumns[r]) + "'");
    }
    required[r] = it->second;
  }

  IngestResult result;
  std::vector<std::pair<std::string, std::size_t>> feature_cols;
  for (std::size_t i = 0; i < header->size(); ++i) {
    const std::string name(trim((*header)[i]));
    if (std::find(kRequiredColumns.begin(), kRequiredColumns.end(), name) !=
        kRequiredColumns.end()) {
      continue;
    }
    if (name.empty() || !keep_feature(options, name)) continue;
    feature_cols.emplace_back(name, i);
    result.feature_names.push_back(name);
  }

  std::unordered_set<std::string> seen;
  std::size_t row = 0;
  while (auto fields = reader.next()) {
    if (fields->size() == 1 && trim(fields->front()).empty()) continue;  // blank line
    ++row;
    if (fields->size() != header->size()) {
      result.diagnostics.push_back({row, "", "expected " + std::to_string(header->size()) +
                                                 " fields, found " +
                                                 std::to_string(fields->size())});
      continue;
    }
    RawRow raw{(*fields)[required[0]], (*fields)[required[1]], (*fields)[required[2]],
               (*fields)[required[3]], (*fields)[required[4]], (*fields)[required[5]],
               (*fields)[required[6]], {}};
    for (const auto& [name, col] : feature_cols) raw.features.emplace_back(name, (*fields)[col]);
    try {
      auto post = build_record(raw);
      if (!seen.insert(post.post_id).second) throw RowError{"post_id", "duplicate post_id"};
      result.posts.push_back(std::move(post));
    } catch (const RowError& e) {
      result.diagnostics.push_back({row, e.column, e.reason});
    }
  }
  finish(result);
  return result;
}

IngestResult ingest_jsonl(std::istream& in, const IngestOptions& options) {
  IngestResult result;
  std::set<std::string> feature_set;
  std::string line;
  std::size_t row = 0;
  std::unordered_set<std::string> seen;

  auto cell = [](const nlohmann::json& v) -> std::string {
    if (v.is_null()) return "";
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    return v.dump();
  };

  while (std::getline(in, line)) {
    if (trim(line).empty() || trim(line) == "\r") continue;
    ++row;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      result.diagnostics.push_back({row, "", "malformed JSON"});
      continue;
    }
    if (!j.is_object()) {
      result.diagnostics.push_back({row, "", "expected a JSON object"});
      continue;
    }
    RawRow raw;
    std::string missing;
    std::array<std::string*, 7> slots{&raw.post_id,  &raw.influencer_id, &raw.category,
                                      &raw.followers, &raw.likes,        &raw.comments,
                                      &raw.posted_at};
    for (std::size_t r = 0; r < kRequiredColumns.size(); ++r) {
      auto it = j.find(std::string(kRequiredColumns[r]));
      if (it == j.end()) {
        missing = kRequiredColumns[r];
        break;
      }
      *slots[r] = cell(*it);
    }
    if (!missing.empty()) {
      result.diagnostics.push_back({row, missing, "missing required field"});
      continue;
    }
    for (const auto& [key, value] : j.items()) {
      if (std::find(kRequiredColumns.begin(), kRequiredColumns.end(), key) !=
          kRequiredColumns.end()) {
        continue;
      }
      if (!keep_feature(options, key)) continue;
      if (!value.is_number() && !value.is_boolean() && !value.is_null()) {
        result.diagnostics.push_back({row, key, "not a number"});
        missing = key;
        break;
      }
      raw.features.emplace_back(key, cell(value));
    }
    if (!missing.empty()) continue;
    try {
      auto post = build_record(raw);
      if (!seen.insert(post.post_id).second) throw RowError{"post_id", "duplicate post_id"};
      result.posts.push_back(std::move(post));
      for (const auto& [name, unused] : raw.features) feature_set.insert(name);
    } catch (const RowError& e) {
      result.diagnostics.push_back({row, e.column, e.reason});
    }
  }
  if (options.feature_columns) {
    result.feature_names = *options.feature_columns;
  } else {
    result.feature_names.assign(feature_set.begin(), feature_set.end());
  }
  finish(result);
  return result;
}

std::vector<PostRecord> filter_window(std::vector<PostRecord> posts, Timestamp collection_end) {
  using std::chrono::days;
  std::erase_if(posts, [&](const PostRecord& p) {
    const auto age = collection_end - p.posted_at;
    return age < days{5} || age > days{30};
  });
  return posts;
}

std::string SliceKey::to_string() const {
  std::string out(engage::to_string(category));
  out += '/';
  out += engage::to_string(tier);
  out += '/';
  out += engage::to_string(metric);
  return out;
}

std::filesystem::path SliceKey::relative_dir() const {
  return std::filesystem::path(std::string(engage::to_string(category))) /
         std::string(engage::to_string(tier)) / std::string(engage::to_string(metric));
}

SliceKey SliceKey::parse(std::string_view text) {
  const auto a = text.find('/');
  const auto b = a == std::string_view::npos ? a : text.find('/', a + 1);
  if (b == std::string_view::npos) {
    throw ValidationError("slice '" + std::string(text) + "' is not category/tier/metric");
  }
  const auto category = parse_category(text.substr(0, a));
  const auto tier = parse_tier(text.substr(a + 1, b - a - 1));
  if (!category || !tier) throw ValidationError("unknown slice '" + std::string(text) + "'");
  return {*category, *tier, parse_metric(text.substr(b + 1))};
}

std::vector<double> FeatureTable::target_values(Metric metric) const {
  std::vector<double> out;
  out.reserve(targets.size());
  for (const auto& t : targets) out.push_back(t.get(metric));
  return out;
}

std::vector<double> FeatureTable::column(std::size_t feature) const {
  std::vector<double> out(static_cast<std::size_t>(matrix.rows()));
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    out[static_cast<std::size_t>(r)] = matrix(r, static_cast<Eigen::Index>(feature));
  }
  return out;
}

namespace {

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

FeatureTable slice(const std::vector<PostRecord>& posts,
                   const std::vector<std::string>& feature_names, const SliceKey& key) {
  std::vector<const PostRecord*> rows;
  for (const auto& p : posts) {
    if (p.category != key.category || p.followers < kInfluencerThreshold) continue;
    if (assign_tier(p.followers).name != key.tier) continue;
    rows.push_back(&p);
  }
  std::sort(rows.begin(), rows.end(),
            [](const PostRecord* a, const PostRecord* b) { return a->post_id < b->post_id; });

  FeatureTable table;
  table.key = key;
  table.feature_names = feature_names;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto f = static_cast<Eigen::Index>(feature_names.size());
  table.matrix.resize(n, f);
  table.imputed_counts.assign(feature_names.size(), 0);
  table.post_ids.reserve(rows.size());
  table.influencer_ids.reserve(rows.size());
  table.targets.reserve(rows.size());
  for (const auto* p : rows) {
    table.post_ids.push_back(p->post_id);
    table.influencer_ids.push_back(p->influencer_id);
    table.targets.push_back(p->engagement());
  }

  for (Eigen::Index c = 0; c < f; ++c) {
    const auto& name = feature_names[static_cast<std::size_t>(c)];
    std::vector<double> present;
    std::vector<Eigen::Index> missing;
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& feats = rows[static_cast<std::size_t>(r)]->features;
      if (auto it = feats.find(name); it != feats.end()) {
        table.matrix(r, c) = it->second;
        present.push_back(it->second);
      } else {
        missing.push_back(r);
      }
    }
    const double fill = median(std::move(present));
    for (auto r : missing) table.matrix(r, c) = fill;
    table.imputed_counts[static_cast<std::size_t>(c)] = missing.size();
  }
  return table;
}

std::map<std::pair<Category, TierName>, SliceCount> slice_counts(
    const std::vector<PostRecord>& posts) {
  std::map<std::pair<Category, TierName>, SliceCount> counts;
  std::map<std::pair<Category, TierName>, std::unordered_set<std::string>> influencers;
  for (const auto& p : posts) {
    if (p.followers < kInfluencerThreshold) continue;
    const std::pair key{p.category, assign_tier(p.followers).name};
    ++counts[key].posts;
    influencers[key].insert(p.influencer_id);
  }
  for (auto& [key, count] : counts) count.influencers = influencers[key].size();
  return counts;
}

}  // namespace engage
