#include "pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "engage/csv.hpp"
#include "engage/embeddings.hpp"
#include "engage/guidelines.hpp"
#include "engage/random.hpp"
#include "engage/stats.hpp"
#include "engage/topics.hpp"

namespace engage::cli {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string fixed(double value, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

std::optional<json> read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("corrupt artifact " + path.string() + ": " + e.what());
  }
}

std::string csv_meta_line(const RunConfig& config) {
  return "# config_hash=" + config.config_hash + ",seed=" + std::to_string(config.seed) +
         ",version=" + std::string(kVersion) + "\n";
}

std::string markdown_meta(const RunConfig& config) {
  return "<!-- config_hash=" + config.config_hash + " seed=" + std::to_string(config.seed) +
         " version=" + std::string(kVersion) + " -->\n";
}

fs::path dataset_dir(const RunConfig& config) { return config.out / "dataset"; }
fs::path slice_dir(const RunConfig& config, const SliceKey& key) {
  return config.out / key.relative_dir();
}

fs::path resolve(const fs::path& base, const std::string& text) {
  fs::path p(text);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

struct Dataset {
  std::vector<PostRecord> posts;
  std::vector<std::string> feature_names;
};

Dataset load_dataset(const RunConfig& config) {
  const auto dir = dataset_dir(config);
  const auto manifest = read_json(dir / "manifest.json");
  std::ifstream in(dir / "posts.jsonl", std::ios::binary);
  if (!manifest || !in) {
    throw ValidationError("no ingested dataset under " + dir.string() + "; run `engage ingest` first");
  }
  std::string meta_line;
  std::getline(in, meta_line);
  IngestOptions options;
  options.feature_columns = manifest->at("feature_names").get<std::vector<std::string>>();
  Dataset out;
  out.feature_names = *options.feature_columns;
  out.posts = ingest_jsonl(in, options).posts;
  return out;
}

std::vector<SliceKey> selected_slices(const RunConfig& config,
                                      const std::vector<PostRecord>& posts) {
  const auto counts = slice_counts(posts);
  std::vector<SliceKey> out;
  for (auto category : kAllCategories) {
    for (auto tier : kAllTiers) {
      const auto it = counts.find({category, tier});
      if (it == counts.end() || it->second.posts == 0) continue;
      for (auto metric : {Metric::kLikes, Metric::kComments}) {
        const SliceKey key{category, tier, metric};
        const bool wanted = std::any_of(config.slices.begin(), config.slices.end(),
                                        [&](const auto& p) { return slice_matches(p, key); });
        if (wanted) out.push_back(key);
      }
    }
  }
  return out;
}

json correlation_json(const stats::CorrelationResult& r, std::size_t rank) {
  return {{"feature", r.feature_name}, {"rs", r.rs}, {"p_value", r.p_value}, {"n", r.n},
          {"rank", rank}};
}

json spearman_json(std::span<const double> x, std::span<const double> y) {
  try {
    const auto r = stats::spearman(x, y);
    return {{"rs", r.rs}, {"p_value", r.p_value}, {"n", r.n}};
  } catch (const Error& e) {
    return {{"error", e.what()}, {"n", x.size()}};
  }
}

}  // namespace

// ------------------------------------------------------------------ config

json RunConfig::meta() const {
  return {{"config_hash", config_hash}, {"seed", seed}, {"version", kVersion}};
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (c == ',') {
      if (!current.empty()) out.push_back(current);
      current.clear();
    } else if (c != ' ') {
      current.push_back(c);
    }
  }
  if (!current.empty()) out.push_back(current);
  return out;
}

namespace {

std::vector<std::string> split_parts(std::string_view pattern) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : pattern) {
    if (c == '/') {
      parts.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  parts.push_back(current);
  return parts;
}

bool wildcard(const std::string& part) { return part.empty() || part == "*"; }

}  // namespace

void validate_slice_pattern(std::string_view pattern) {
  if (lower(pattern) == "all") return;
  const auto parts = split_parts(pattern);
  if (parts.size() > 3) throw ValidationError("bad slice pattern '" + std::string(pattern) + "'");
  if (!wildcard(parts[0]) && !parse_category(parts[0])) {
    throw ValidationError("unknown category '" + parts[0] + "' in slice pattern");
  }
  if (parts.size() > 1 && !wildcard(parts[1]) && !parse_tier(parts[1])) {
    throw ValidationError("unknown tier '" + parts[1] + "' in slice pattern");
  }
  if (parts.size() > 2 && !wildcard(parts[2])) parse_metric(lower(parts[2]));
}

bool slice_matches(std::string_view pattern, const SliceKey& key) {
  if (lower(pattern) == "all") return true;
  const auto parts = split_parts(pattern);
  if (!wildcard(parts[0]) && parse_category(parts[0]) != key.category) return false;
  if (parts.size() > 1 && !wildcard(parts[1]) && parse_tier(parts[1]) != key.tier) return false;
  if (parts.size() > 2 && !wildcard(parts[2]) && parse_metric(lower(parts[2])) != key.metric) {
    return false;
  }
  return true;
}

RunConfig parse_config(const json& config, const fs::path& base_dir, const Overrides& overrides) {
  if (!config.is_object()) throw ValidationError("config must be a JSON object");
  static const std::set<std::string> kKnown{"posts",  "embeddings", "collection_end", "slices",
                                            "profile", "seed",      "out",            "folds",
                                            "splits", "topics",     "report",         "threads"};
  for (const auto& [key, unused] : config.items()) {
    if (!kKnown.contains(key)) throw ValidationError("unknown config key '" + key + "'");
  }

  RunConfig rc;
  json canonical;
  try {
    if (!config.contains("posts")) throw ValidationError("config is missing the posts path");
    const auto posts = config.at("posts").get<std::string>();
    rc.posts = resolve(base_dir, posts);
    canonical["posts"] = posts;
    if (!fs::exists(rc.posts)) throw ValidationError("posts file not found: " + rc.posts.string());

    if (config.contains("embeddings")) {
      const auto& e = config.at("embeddings");
      for (const auto& [key, value] : e.items()) {
        const auto path = resolve(base_dir, value.get<std::string>());
        if (!fs::exists(path)) throw ValidationError("embeddings file not found: " + path.string());
        if (key == "image") {
          rc.image_embeddings = path;
        } else if (key == "text") {
          rc.text_embeddings = path;
        } else {
          throw ValidationError("unknown embeddings modality '" + key + "'");
        }
        canonical["embeddings"][key] = value;
      }
    }
    if (config.contains("collection_end")) {
      const auto text = config.at("collection_end").get<std::string>();
      rc.collection_end = parse_rfc3339(text);
      canonical["collection_end"] = format_rfc3339(*rc.collection_end);
    }

    if (overrides.slices) {
      rc.slices = split_list(*overrides.slices);
    } else if (config.contains("slices")) {
      const auto& s = config.at("slices");
      rc.slices = s.is_string() ? split_list(s.get<std::string>())
                                : s.get<std::vector<std::string>>();
    }
    if (rc.slices.empty()) throw ValidationError("no slices selected");
    for (const auto& p : rc.slices) validate_slice_pattern(p);
    canonical["slices"] = rc.slices;

    std::string profile = overrides.profile.value_or(config.value("profile", "fast"));
    rc.profile = dtree::parse_profile(profile);
    canonical["profile"] = rc.profile == dtree::GridProfile::kFast ? "fast" : "full";

    rc.seed = overrides.seed.value_or(config.value("seed", std::uint64_t{42}));
    canonical["seed"] = rc.seed;

    rc.out = resolve(base_dir, overrides.out.value_or(config.value("out", "engage-run")));
    if (overrides.out) rc.out = fs::path(*overrides.out).lexically_normal();

    rc.folds = config.value("folds", 5);
    if (rc.folds < 2) throw ValidationError("folds must be >= 2");
    canonical["folds"] = rc.folds;

    if (config.contains("splits")) {
      rc.group_by_influencer = config.at("splits").value("group_by_influencer", false);
    }
    canonical["splits"]["group_by_influencer"] = rc.group_by_influencer;

    if (config.contains("topics")) {
      const auto& t = config.at("topics");
      rc.topics.k = t.value("k", rc.topics.k);
      rc.topics.components = t.value("components", rc.topics.components);
      const auto scope = t.value("pca_scope", std::string("slice"));
      if (scope != "slice" && scope != "global") {
        throw ValidationError("topics.pca_scope must be 'slice' or 'global'");
      }
      rc.topics.global_pca = scope == "global";
      if (t.contains("k_list")) rc.topics.k_list = t.at("k_list").get<std::vector<std::size_t>>();
    }
    if (rc.topics.k < 1) throw ValidationError("topics.k must be >= 1");
    if (rc.topics.components < 1) throw ValidationError("topics.components must be >= 1");
    canonical["topics"] = {{"k", rc.topics.k},
                           {"components", rc.topics.components},
                           {"pca_scope", rc.topics.global_pca ? "global" : "slice"},
                           {"k_list", rc.topics.k_list}};

    if (config.contains("report")) {
      rc.max_depth_render = config.at("report").value("max_depth_render", 3);
    }
    if (rc.max_depth_render < 1) throw ValidationError("report.max_depth_render must be >= 1");
    canonical["report"]["max_depth_render"] = rc.max_depth_render;

    rc.threads = overrides.threads.value_or(config.value("threads", 0U));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  rc.config_hash = hex64(fnv1a64(canonical.dump()));
  return rc;
}

RunConfig load_config(const fs::path& config_file, const Overrides& overrides) {
  std::ifstream in(config_file, std::ios::binary);
  if (!in) throw ValidationError("cannot open config " + config_file.string());
  json config;
  try {
    config = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(config, fs::absolute(config_file).parent_path(), overrides);
}

// -------------------------------------------------------------------- lock

RunLock::RunLock(const fs::path& out_dir) : path_(out_dir / ".lock") {
  fs::create_directories(out_dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw Error("run directory " + out_dir.string() + " is locked by another process (" +
                path_.string() + ")");
  }
  const auto pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

// ------------------------------------------------------------------ ingest

void cmd_ingest(const RunConfig& config, std::ostream& log) {
  auto result = ingest(config.posts);
  log << "ingest: " << result.posts.size() << " valid rows, " << result.diagnostics.size()
      << " rejected\n";

  json diagnostics = json::array();
  for (const auto& d : result.diagnostics) {
    auto j = to_json(d);
    j["stage"] = "parse";
    diagnostics.push_back(std::move(j));
  }

  std::vector<PostRecord> influencers;
  std::size_t sub_influencer = 0;
  for (auto& p : result.posts) {
    try {
      assign_tier(p.followers);
      influencers.push_back(std::move(p));
    } catch (const ValidationError& e) {
      ++sub_influencer;
      diagnostics.push_back(
          {{"post_id", p.post_id}, {"column", "followers"}, {"reason", e.what()}, {"stage", "tier"}});
    }
  }

  Timestamp end{};
  if (config.collection_end) {
    end = *config.collection_end;
  } else {
    for (const auto& p : influencers) end = std::max(end, p.posted_at);
  }
  const auto before_window = influencers.size();
  auto posts = filter_window(std::move(influencers), end);
  std::sort(posts.begin(), posts.end(),
            [](const PostRecord& a, const PostRecord& b) { return a.post_id < b.post_id; });
  log << "ingest: " << posts.size() << " posts inside the 5-30 day window\n";

  const auto dir = dataset_dir(config);
  std::string lines = json{{"meta", config.meta()}}.dump() + "\n";
  for (const auto& p : posts) lines += to_json(p).dump() + "\n";
  write_file(dir / "posts.jsonl", lines);

  std::string diag_lines = json{{"meta", config.meta()}}.dump() + "\n";
  for (const auto& d : diagnostics) diag_lines += d.dump() + "\n";
  write_file(dir / "diagnostics.jsonl", diag_lines);

  json table = json::array();
  std::map<std::string, json> totals_by_tier;
  const auto counts = slice_counts(posts);
  for (auto category : kAllCategories) {
    json row{{"category", to_string(category)}};
    std::size_t row_posts = 0;
    for (auto tier : kAllTiers) {
      const auto it = counts.find({category, tier});
      const SliceCount c = it == counts.end() ? SliceCount{} : it->second;
      row[std::string(to_string(tier))] = {{"posts", c.posts}, {"influencers", c.influencers}};
      row_posts += c.posts;
    }
    row["total_posts"] = row_posts;
    table.push_back(std::move(row));
  }
  std::set<std::string> all_influencers;
  for (const auto& p : posts) all_influencers.insert(p.influencer_id);

  json manifest{{"meta", config.meta()},
                {"collection_end", format_rfc3339(end)},
                {"collection_end_source", config.collection_end ? "config" : "latest post"},
                {"feature_names", result.feature_names},
                {"rows",
                 {{"valid", result.posts.size()},
                  {"rejected", result.diagnostics.size()},
                  {"sub_influencer", sub_influencer},
                  {"outside_window", before_window - posts.size()},
                  {"retained", posts.size()}}},
                {"influencers", all_influencers.size()},
                {"slices", std::move(table)}};
  write_json(dir / "manifest.json", manifest);
}

// --------------------------------------------------------------- correlate

void cmd_correlate(const RunConfig& config, std::ostream& log) {
  const auto data = load_dataset(config);
  const auto slices = selected_slices(config, data.posts);

  std::string csv = csv_meta_line(config) + "slice,feature,rs,p_value,n,rank\n";
  for (const auto& key : slices) {
    const auto table = slice(data.posts, data.feature_names, key);
    const auto name = key.to_string();
    if (table.rows() < 3) {
      log << "correlate: " << name << " skipped (" << table.rows() << " rows)\n";
      continue;
    }
    const auto corr = stats::correlate_features(table, key.metric);
    json ranked = json::array();
    for (std::size_t i = 0; i < corr.ranked.size(); ++i) {
      const auto& r = corr.ranked[i];
      ranked.push_back(correlation_json(r, i + 1));
      csv += csv::escape(name) + "," + csv::escape(r.feature_name) + "," +
             csv::format_double(r.rs) + "," + csv::format_double(r.p_value) + "," +
             std::to_string(r.n) + "," + std::to_string(i + 1) + "\n";
    }
    for (const auto& f : corr.undefined) {
      csv += csv::escape(name) + "," + csv::escape(f) + ",NA,NA," + std::to_string(table.rows()) +
             ",NA\n";
    }
    json top = json::array();
    const auto top3 = stats::top_features(corr, 3);
    for (std::size_t i = 0; i < top3.size(); ++i) top.push_back(correlation_json(top3[i], i + 1));
    json imputed = json::object();
    for (std::size_t f = 0; f < table.feature_names.size(); ++f) {
      if (table.imputed_counts[f] > 0) imputed[table.feature_names[f]] = table.imputed_counts[f];
    }
    write_json(slice_dir(config, key) / "correlations.json",
               {{"meta", config.meta()},
                {"slice", name},
                {"n", table.rows()},
                {"ranked", std::move(ranked)},
                {"undefined", corr.undefined},
                {"top3", std::move(top)},
                {"imputed", std::move(imputed)}});
  }
  write_file(config.out / "correlations.csv", csv);
  log << "correlate: " << slices.size() << " slices\n";

  // Pooled likes-vs-comments and per category x tier.
  std::vector<double> likes, comments;
  for (const auto& p : data.posts) {
    likes.push_back(p.engagement().likes_rate);
    comments.push_back(p.engagement().comments_rate);
  }
  json per_cell = json::array();
  for (auto category : kAllCategories) {
    for (auto tier : kAllTiers) {
      std::vector<double> l, c;
      for (const auto& p : data.posts) {
        if (p.category != category || assign_tier(p.followers).name != tier) continue;
        l.push_back(p.engagement().likes_rate);
        c.push_back(p.engagement().comments_rate);
      }
      if (l.size() < 3) continue;
      auto j = spearman_json(l, c);
      j["category"] = to_string(category);
      j["tier"] = to_string(tier);
      per_cell.push_back(std::move(j));
    }
  }
  json lvc{{"meta", config.meta()}, {"pooled", spearman_json(likes, comments)},
           {"per_category_tier", std::move(per_cell)}};
  write_json(config.out / "likes_vs_comments.json", lvc);

  // MANOVA on the rank-transformed follower-normalised rates.
  json manova{{"meta", config.meta()},
              {"responses", {"rank(likes_rate)", "rank(comments_rate)"}},
              {"model", "additive two-way, Type II hypothesis matrices"},
              {"n", data.posts.size()}};
  try {
    const auto rl = stats::rank(likes);
    const auto rc = stats::rank(comments);
    Matrix responses(static_cast<Eigen::Index>(data.posts.size()), 2);
    std::vector<std::string> categories, tiers;
    for (std::size_t i = 0; i < data.posts.size(); ++i) {
      responses(static_cast<Eigen::Index>(i), 0) = rl[i];
      responses(static_cast<Eigen::Index>(i), 1) = rc[i];
      categories.emplace_back(to_string(data.posts[i].category));
      tiers.emplace_back(to_string(assign_tier(data.posts[i].followers).name));
    }
    const auto [a, b] = stats::manova_pillai(responses, categories, tiers);
    for (const auto& r : {a, b}) {
      manova["factors"].push_back({{"factor", r.factor},
                                   {"pillai_trace", r.pillai_trace},
                                   {"approx_f", r.approx_f},
                                   {"df_num", r.df_num},
                                   {"df_den", r.df_den},
                                   {"p_value", r.p_value}});
    }
  } catch (const Error& e) {
    manova["error"] = e.what();
    log << "correlate: MANOVA not computed: " << e.what() << "\n";
  }
  write_json(config.out / "manova.json", manova);
}

// ------------------------------------------------------------------- train

void cmd_train(const RunConfig& config, std::ostream& log) {
  const auto data = load_dataset(config);
  const auto slices = selected_slices(config, data.posts);
  const auto grid = dtree::default_grid(config.profile);

  std::string csv = csv_meta_line(config) +
                    "category,tier,metric,n,model_f1_mean,model_f1_std,dummy_f1_mean,"
                    "dummy_f1_std,cv_macro_f1,hyperparameters\n";
  json trained = json::array();
  json skipped = json::array();
  for (const auto& key : slices) {
    const auto name = key.to_string();
    const auto table = slice(data.posts, data.feature_names, key);
    const auto slice_seed = derive_seed(config.seed, "slice/" + name);
    try {
      const auto labeled = label_engagement(table, key.metric);
      dtree::GridSearchOptions gso;
      gso.folds = config.folds;
      gso.seed = derive_seed(slice_seed, "train/grid");
      gso.group_by_influencer = config.group_by_influencer;
      gso.threads = config.threads;
      const auto search = dtree::grid_search(labeled, grid, gso);

      dtree::EvalOptions eo;
      eo.seed = derive_seed(slice_seed, "train/eval");
      eo.group_by_influencer = config.group_by_influencer;
      const auto report = dtree::evaluate(labeled, search.best, eo);

      auto plan = search.best.resampling;
      plan.seed = derive_seed(slice_seed, "train/final");
      const auto resampled = resampling::apply(labeled, plan);
      const auto model = dtree::fit_tree(resampled.data, search.best);
      const auto importance = dtree::feature_importance(model);
      const auto guidelines = dtree::extract_guidelines(model, Label::kHigh);

      const auto dir = slice_dir(config, key);
      json ranked = json::array();
      for (const auto& fi : importance.ranked) {
        ranked.push_back({{"feature", fi.feature}, {"importance", fi.importance}});
      }
      Warnings warnings = search.warnings;
      warnings.insert(warnings.end(), resampled.warnings.begin(), resampled.warnings.end());
      warnings.insert(warnings.end(), importance.warnings.begin(), importance.warnings.end());
      write_json(dir / "model.json",
                 {{"meta", config.meta()},
                  {"slice", name},
                  {"n", labeled.rows()},
                  {"high", labeled.count(Label::kHigh)},
                  {"threshold_used", labeled.threshold_used},
                  {"grid_profile", config.profile == dtree::GridProfile::kFast ? "fast" : "full"},
                  {"grid_size", grid.size()},
                  {"best_index", search.best_index},
                  {"cv_macro_f1", search.cv_score},
                  {"final_resampling",
                   {{"synthetic_added", resampled.synthetic_added},
                    {"removed", resampled.removed},
                    {"effective_k", resampled.effective_k}}},
                  {"ranked_importance", std::move(ranked)},
                  {"warnings", warnings},
                  {"model", model.to_json()}});

      auto eval_json = dtree::to_json(report);
      eval_json["meta"] = config.meta();
      eval_json["slice"] = name;
      eval_json["hyperparameters"] = dtree::to_json(search.best);
      write_json(dir / "evaluation.json", eval_json);

      auto guide_json = dtree::to_json(guidelines);
      guide_json["meta"] = config.meta();
      guide_json["slice"] = name;
      write_json(dir / "guidelines.json", guide_json);
      write_file(dir / "guidelines.md",
                 markdown_meta(config) + "# Guidelines for " + name + "\n\n" +
                     dtree::render_guidelines_markdown(model, guidelines,
                                                       config.max_depth_render));

      csv += std::string(to_string(key.category)) + "," + std::string(to_string(key.tier)) + "," +
             std::string(to_string(key.metric)) + "," + std::to_string(labeled.rows()) + "," +
             csv::format_double(report.f1_macro_mean) + "," +
             csv::format_double(report.f1_macro_std) + "," +
             csv::format_double(report.dummy_f1_mean) + "," +
             csv::format_double(report.dummy_f1_std) + "," + csv::format_double(search.cv_score) +
             "," + csv::escape(search.best.describe()) + "\n";
      trained.push_back({{"slice", name}, {"n", labeled.rows()}});
      log << "train: " << name << " macro-F1 " << fixed(report.f1_macro_mean) << " +/- "
          << fixed(report.f1_macro_std) << " (dummy " << fixed(report.dummy_f1_mean) << ")\n";
    } catch (const Error& e) {
      skipped.push_back({{"slice", name}, {"n", table.rows()}, {"reason", e.what()}});
      log << "train: " << name << " skipped: " << e.what() << "\n";
    }
  }
  write_file(config.out / "evaluation.csv", csv);
  write_json(config.out / "train_summary.json",
             {{"meta", config.meta()}, {"trained", std::move(trained)},
              {"skipped", std::move(skipped)}});
}

// ------------------------------------------------------------------ topics

void cmd_topics(const RunConfig& config, std::ostream& log) {
  using topics::Modality;
  const auto data = load_dataset(config);
  const auto slices = selected_slices(config, data.posts);

  std::unordered_map<std::string, const PostRecord*> by_id;
  std::vector<std::string> all_ids;
  for (const auto& p : data.posts) {
    by_id.emplace(p.post_id, &p);
    all_ids.push_back(p.post_id);
  }

  std::map<Modality, topics::EmbeddingTable> spaces;
  std::map<Modality, Warnings> space_notes;
  auto space_for = [&](Modality modality) -> const topics::EmbeddingTable* {
    if (auto it = spaces.find(modality); it != spaces.end()) return &it->second;
    const auto& path =
        modality == Modality::kImage ? config.image_embeddings : config.text_embeddings;
    if (!path) return nullptr;
    auto table = topics::load_embeddings(*path, modality).select(all_ids);
    if (table.modality() != modality) {
      throw ValidationError("embeddings at " + path->string() + " are declared " +
                            std::string(topics::to_string(table.modality())) + ", expected " +
                            std::string(topics::to_string(modality)));
    }
    if (config.topics.global_pca && table.size() > 1) {
      auto pca = topics::pca_reduce(table, config.topics.components);
      space_notes[modality] = pca.warnings;
      table = std::move(pca.reduced);
    }
    return &spaces.emplace(modality, std::move(table)).first->second;
  };

  std::string csv = csv_meta_line(config) + "slice,modality,k,pure_fraction\n";
  json summary = json::array();
  for (const auto& key : slices) {
    const auto name = key.to_string();
    const auto modality = topics::modality_for(key.metric);
    const auto* space = space_for(modality);
    json entry{{"slice", name}, {"modality", topics::to_string(modality)}};
    if (space == nullptr) {
      entry["status"] = "skipped";
      entry["note"] = "no " + std::string(topics::to_string(modality)) + " embeddings configured";
      log << "topics: " << name << " skipped: no embeddings\n";
      summary.push_back(std::move(entry));
      continue;
    }

    std::vector<std::string> ids;
    for (const auto& p : data.posts) {
      if (p.category == key.category && assign_tier(p.followers).name == key.tier) {
        ids.push_back(p.post_id);
      }
    }
    auto emb = space->select(ids);
    const auto missing = ids.size() - emb.size();
    Warnings notes = space_notes[modality];
    if (missing > 0) notes.push_back(std::to_string(missing) + " posts have no embedding");
    if (emb.size() < 5) {
      entry["status"] = "skipped";
      entry["note"] = "only " + std::to_string(emb.size()) + " embedded posts";
      log << "topics: " << name << " skipped: " << emb.size() << " embedded posts\n";
      summary.push_back(std::move(entry));
      continue;
    }

    json pca_info{{"scope", config.topics.global_pca ? "global" : "slice"}};
    if (!config.topics.global_pca) {
      auto pca = topics::pca_reduce(emb, config.topics.components);
      notes.insert(notes.end(), pca.warnings.begin(), pca.warnings.end());
      double retained = 0.0;
      for (double r : pca.explained_variance_ratio) retained += r;
      pca_info["components"] = pca.components;
      pca_info["explained_variance"] = retained;
      emb = std::move(pca.reduced);
    }

    topics::HotTopicInput input;
    input.slice_key = name;
    input.k = config.topics.k;
    input.apply_pca = false;
    input.threads = config.threads;
    for (const auto& id : emb.post_ids()) {
      const auto* p = by_id.at(id);
      input.engagement.push_back(p->engagement().get(key.metric));
      input.influencers.push_back(p->influencer_id);
    }

    const auto boundaries = stats::engagement_classes(input.engagement, key.metric);
    std::vector<std::size_t> ks;
    for (auto k : config.topics.k_list) {
      if (k >= 1 && k < emb.size()) ks.push_back(k);
    }
    const auto curve = topics::purity_curve(emb, input.engagement, boundaries, ks, config.threads);
    json purity = json::array();
    for (const auto& pt : curve) {
      purity.push_back({{"k", pt.k}, {"pure_fraction", pt.pure_fraction}});
      csv += csv::escape(name) + "," + std::string(topics::to_string(modality)) + "," +
             std::to_string(pt.k) + "," + csv::format_double(pt.pure_fraction) + "\n";
    }

    input.embeddings = std::move(emb);
    auto report = topics::hot_topic_report(input);
    report.notes.insert(report.notes.begin(), notes.begin(), notes.end());
    auto j = topics::to_json(report);
    j["meta"] = config.meta();
    j["pca"] = std::move(pca_info);
    j["purity_curve"] = std::move(purity);
    j["cutpoints"] = boundaries.cutpoints;
    write_json(slice_dir(config, key) / "topics.json", j);

    entry["status"] = "done";
    entry["topics"] = report.topics.size();
    summary.push_back(std::move(entry));
    log << "topics: " << name << " " << report.topics.size() << " hot topics from "
        << report.top_class_pure << " class-5 pure neighbourhoods\n";
  }
  write_file(config.out / "purity_curves.csv", csv);
  write_json(config.out / "topics_summary.json",
             {{"meta", config.meta()}, {"slices", std::move(summary)}});
}

// ------------------------------------------------------------------ report

namespace {

std::string md_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

std::string p_value_text(double p) {
  if (p < 1e-4) return "< 0.0001";
  return fixed(p, 4);
}

}  // namespace

void cmd_report(const RunConfig& config, std::ostream& log) {
  const auto data = load_dataset(config);
  const auto slices = selected_slices(config, data.posts);

  std::ostringstream body;
  std::set<std::string> missing_stages;
  std::size_t with_corr = 0, with_model = 0, with_topics = 0;

  for (const auto& key : slices) {
    const auto dir = slice_dir(config, key);
    const auto name = key.to_string();
    const auto corr = read_json(dir / "correlations.json");
    const auto model = read_json(dir / "model.json");
    const auto eval = read_json(dir / "evaluation.json");
    const auto guide = read_json(dir / "guidelines.json");
    const auto topic = read_json(dir / "topics.json");
    with_corr += corr.has_value();
    with_model += model.has_value();
    with_topics += topic.has_value();

    std::size_t n = 0;
    for (const auto& p : data.posts) {
      n += p.category == key.category && assign_tier(p.followers).name == key.tier;
    }
    body << "## " << to_string(key.category) << " / " << to_string(key.tier) << " / "
         << to_string(key.metric) << "\n\nPosts in slice: " << n << "\n\n";

    body << "### Top correlations\n\n";
    if (!corr) {
      body << "_Missing: no correlation artifact for this slice._\n\n";
    } else if (corr->at("top3").empty()) {
      body << "No feature has a defined correlation.\n\n";
    } else {
      body << "| rank | feature | r_s | p-value |\n|---|---|---|---|\n";
      for (const auto& r : corr->at("top3")) {
        body << "| " << r.at("rank").get<int>() << " | "
             << md_escape(r.at("feature").get<std::string>()) << " | "
             << fixed(r.at("rs").get<double>()) << " | "
             << p_value_text(r.at("p_value").get<double>()) << " |\n";
      }
      body << "\n";
    }

    body << "### Prediction\n\n";
    if (!model || !eval) {
      body << "_Missing: no trained model for this slice._\n\n";
    } else {
      body << "Decision tree macro-F1 " << fixed(eval->at("f1_macro_mean").get<double>()) << " ± "
           << fixed(eval->at("f1_macro_std").get<double>()) << " against a stratified dummy at "
           << fixed(eval->at("dummy_f1_mean").get<double>()) << " ± "
           << fixed(eval->at("dummy_f1_std").get<double>()) << " over "
           << eval->at("partition_scores").size() << " holdout partitions. High engagement means "
           << to_string(key.metric) << " rate ≥ "
           << csv::format_double(model->at("threshold_used").get<double>()) << ".\n\n";
      body << "| feature | importance |\n|---|---|\n";
      std::size_t shown = 0;
      for (const auto& fi : model->at("ranked_importance")) {
        if (shown == 5 || fi.at("importance").get<double>() <= 0.0) break;
        body << "| " << md_escape(fi.at("feature").get<std::string>()) << " | "
             << fixed(fi.at("importance").get<double>()) << " |\n";
        ++shown;
      }
      if (shown == 0) body << "| (no split) | 0 |\n";
      body << "\n";
    }

    body << "### Guidelines for high engagement\n\n";
    if (!guide) {
      body << "_Missing: no guideline artifact for this slice._\n\n";
    } else if (guide->at("paths").empty()) {
      body << "The tree has no leaf predicting High.\n\n";
    } else {
      for (const auto& path : guide->at("paths")) {
        std::string conds;
        for (const auto& c : path.at("conditions")) {
          if (!conds.empty()) conds += " and ";
          conds += "`" + c.at("text").get<std::string>() + "`";
        }
        if (conds.empty()) conds = "(every post)";
        body << "- " << conds << " (support " << path.at("support").get<std::size_t>()
             << ", purity " << fixed(path.at("purity").get<double>(), 2) << ")\n";
      }
      body << "\n";
    }

    body << "### Hot topics\n\n";
    if (!topic) {
      body << "_Missing: no topic artifact for this slice._\n\n";
    } else {
      body << "Modality " << topic->at("modality").get<std::string>() << ", k = "
           << topic->at("k").get<std::size_t>() << ", "
           << topic->at("pure_neighborhoods").get<std::size_t>() << " pure neighbourhoods, "
           << topic->at("top_class_pure").get<std::size_t>() << " in the top class.\n\n";
      const auto& list = topic->at("topics");
      if (!list.empty()) {
        body << "| anchor | quadrant | UD | ED | mean engagement | sample members |\n"
                "|---|---|---|---|---|---|\n";
        std::size_t shown = 0;
        for (const auto& t : list) {
          if (shown++ == 10) break;
          std::string sample;
          const auto& members = t.at("members");
          for (std::size_t m = 0; m < std::min<std::size_t>(5, members.size()); ++m) {
            if (!sample.empty()) sample += ", ";
            sample += members[m].get<std::string>();
          }
          body << "| " << md_escape(t.at("anchor").get<std::string>()) << " | "
               << t.at("quadrant").get<std::string>() << " | " << fixed(t.at("UD").get<double>())
               << " | " << fixed(t.at("ED").get<double>()) << " | "
               << csv::format_double(t.at("mean_engagement").get<double>()) << " | "
               << md_escape(sample) << " |\n";
        }
        if (list.size() > 10) body << "\n" << list.size() - 10 << " more in topics.json.\n";
        body << "\n";
      }
      for (const auto& note : topic->at("notes")) body << "> " << note.get<std::string>() << "\n";
      if (!topic->at("notes").empty()) body << "\n";
    }
  }

  if (with_corr == 0) missing_stages.insert("correlations");
  if (with_model == 0) missing_stages.insert("prediction and guidelines");
  if (with_topics == 0) missing_stages.insert("hot topics");

  std::ostringstream doc;
  doc << markdown_meta(config) << "# Engagement report\n\n";
  if (!missing_stages.empty()) {
    doc << "> **Missing sections:**";
    bool first = true;
    for (const auto& s : missing_stages) {
      doc << (first ? " " : ", ") << s;
      first = false;
    }
    doc << ". Run the corresponding subcommand to fill them in.\n\n";
  }

  const auto manifest = read_json(dataset_dir(config) / "manifest.json");
  doc << "## Dataset\n\n" << manifest->at("rows").at("retained").get<std::size_t>()
      << " posts from " << manifest->at("influencers").get<std::size_t>()
      << " influencers in the collection window ending "
      << manifest->at("collection_end").get<std::string>() << ".\n\n";

  if (const auto lvc = read_json(config.out / "likes_vs_comments.json")) {
    const auto& pooled = lvc->at("pooled");
    if (pooled.contains("rs")) {
      doc << "Likes rate vs comments rate, Spearman r_s = " << fixed(pooled.at("rs").get<double>())
          << " (p " << p_value_text(pooled.at("p_value").get<double>()) << ", n = "
          << pooled.at("n").get<std::size_t>() << ").\n\n";
    }
  }
  if (const auto manova = read_json(config.out / "manova.json")) {
    if (manova->contains("factors")) {
      doc << "| MANOVA factor | Pillai trace | approx F | df | p-value |\n|---|---|---|---|---|\n";
      for (const auto& f : manova->at("factors")) {
        doc << "| " << f.at("factor").get<std::string>() << " | "
            << fixed(f.at("pillai_trace").get<double>(), 4) << " | "
            << fixed(f.at("approx_f").get<double>(), 2) << " | " << f.at("df_num").get<int>()
            << ", " << f.at("df_den").get<int>() << " | "
            << p_value_text(f.at("p_value").get<double>()) << " |\n";
      }
      doc << "\n";
    } else if (manova->contains("error")) {
      doc << "MANOVA not available: " << manova->at("error").get<std::string>() << "\n\n";
    }
  }
  if (slices.empty()) doc << "No slice selected.\n";
  doc << body.str();
  write_file(config.out / "report.md", doc.str());
  log << "report: " << slices.size() << " slice sections written to "
      << (config.out / "report.md").string() << "\n";
}

}  // namespace engage::cli
