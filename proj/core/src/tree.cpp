#include "engage/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "engage/csv.hpp"

namespace engage::dtree {

std::string_view to_string(Criterion c) { return c == Criterion::kGini ? "gini" : "entropy"; }
std::string_view to_string(ClassWeight w) {
  return w == ClassWeight::kUniform ? "uniform" : "balanced";
}

void Hyperparameters::validate() const {
  if (max_depth && *max_depth < 1) throw ValidationError("max_depth must be >= 1");
  if (min_samples_leaf < 1) throw ValidationError("min_samples_leaf must be >= 1");
  if (min_samples_split < 2) throw ValidationError("min_samples_split must be >= 2");
}

std::string Hyperparameters::describe() const {
  std::string out = "criterion=" + std::string(to_string(criterion));
  out += ",max_depth=" + (max_depth ? std::to_string(*max_depth) : std::string("none"));
  out += ",min_samples_leaf=" + std::to_string(min_samples_leaf);
  out += ",min_samples_split=" + std::to_string(min_samples_split);
  out += ",class_weight=" + std::string(to_string(class_weight));
  out += ",resampling=" + resampling.describe();
  return out;
}

nlohmann::json to_json(const Hyperparameters& hp) {
  nlohmann::json j;
  j["criterion"] = to_string(hp.criterion);
  j["max_depth"] = hp.max_depth ? nlohmann::json(*hp.max_depth) : nlohmann::json(nullptr);
  j["min_samples_leaf"] = hp.min_samples_leaf;
  j["min_samples_split"] = hp.min_samples_split;
  j["class_weight"] = to_string(hp.class_weight);
  j["resampling"] = {{"strategy", resampling::to_string(hp.resampling.strategy)},
                     {"smote_k", hp.resampling.smote_k},
                     {"target_ratio", hp.resampling.target_ratio}};
  return j;
}

Hyperparameters hyperparameters_from_json(const nlohmann::json& j) {
  Hyperparameters hp;
  const auto criterion = j.at("criterion").get<std::string>();
  if (criterion != "gini" && criterion != "entropy") {
    throw ValidationError("unknown criterion '" + criterion + "'");
  }
  hp.criterion = criterion == "gini" ? Criterion::kGini : Criterion::kEntropy;
  if (!j.at("max_depth").is_null()) hp.max_depth = j.at("max_depth").get<int>();
  hp.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  hp.min_samples_split = j.at("min_samples_split").get<int>();
  hp.class_weight = j.at("class_weight").get<std::string>() == "balanced"
                        ? ClassWeight::kBalanced
                        : ClassWeight::kUniform;
  if (j.contains("resampling")) {
    const auto& r = j.at("resampling");
    hp.resampling.strategy = resampling::parse_strategy(r.at("strategy").get<std::string>());
    hp.resampling.smote_k = r.value("smote_k", 5);
    hp.resampling.target_ratio = r.value("target_ratio", 1.0);
  }
  hp.validate();
  return hp;
}

TreeModel::TreeModel(std::vector<std::string> feature_names, Hyperparameters hp,
                     std::vector<TreeNode> nodes, std::vector<double> raw_importances)
    : feature_names_(std::move(feature_names)),
      hp_(std::move(hp)),
      nodes_(std::move(nodes)),
      importances_(std::move(raw_importances)) {
  importances_.resize(feature_names_.size(), 0.0);
  const double top = importances_.empty()
                         ? 0.0
                         : *std::max_element(importances_.begin(), importances_.end());
  for (auto& v : importances_) v = top > 0.0 ? std::max(0.0, v) / top : 0.0;
}

int TreeModel::apply(std::span<const double> row) const {
  if (nodes_.empty()) throw ValidationError("TreeModel: not fitted");
  int id = 0;
  while (!nodes_[static_cast<std::size_t>(id)].is_leaf()) {
    const auto& node = nodes_[static_cast<std::size_t>(id)];
    id = row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return id;
}

Label TreeModel::predict(std::span<const double> row) const {
  return nodes_[static_cast<std::size_t>(apply(row))].predicted();
}

std::vector<Label> TreeModel::predict(const Matrix& rows) const {
  if (static_cast<std::size_t>(rows.cols()) != feature_names_.size()) {
    throw ValidationError("TreeModel::predict: feature count mismatch");
  }
  std::vector<Label> out(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    out[static_cast<std::size_t>(r)] =
        predict(std::span<const double>(rows.row(r).data(), static_cast<std::size_t>(rows.cols())));
  }
  return out;
}

std::size_t TreeModel::split_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

int TreeModel::depth() const noexcept {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

std::string TreeModel::schema_hash() const {
  std::uint64_t h = fnv1a64("engage-tree-v1");
  for (const auto& name : feature_names_) {
    h = fnv1a64(name, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
  }
  return hex64(h);
}

nlohmann::json TreeModel::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    nlohmann::json j;
    j["id"] = i;
    j["depth"] = n.depth;
    j["impurity"] = n.impurity;
    j["class_counts"] = n.class_counts;
    j["samples"] = n.samples;
    j["predicted"] = to_string(n.predicted());
    if (n.is_leaf()) {
      j["leaf"] = true;
    } else {
      j["leaf"] = false;
      j["feature"] = n.feature;
      j["feature_name"] = feature_names_[static_cast<std::size_t>(n.feature)];
      j["threshold"] = n.threshold;
      j["left"] = n.left;
      j["right"] = n.right;
    }
    nodes.push_back(std::move(j));
  }
  nlohmann::json importances = nlohmann::json::array();
  for (std::size_t f = 0; f < feature_names_.size(); ++f) {
    importances.push_back({{"feature", feature_names_[f]}, {"importance", importances_[f]}});
  }
  return {{"schema_hash", schema_hash()},
          {"feature_names", feature_names_},
          {"hyperparameters", dtree::to_json(hp_)},
          {"nodes", std::move(nodes)},
          {"importances", std::move(importances)}};
}

TreeModel TreeModel::from_json(const nlohmann::json& j) {
  TreeModel model;
  model.feature_names_ = j.at("feature_names").get<std::vector<std::string>>();
  model.hp_ = hyperparameters_from_json(j.at("hyperparameters"));
  for (const auto& jn : j.at("nodes")) {
    TreeNode n;
    n.depth = jn.at("depth").get<int>();
    n.impurity = jn.at("impurity").get<double>();
    n.class_counts = jn.at("class_counts").get<std::array<double, kNumClasses>>();
    n.samples = jn.at("samples").get<std::array<std::size_t, kNumClasses>>();
    if (!jn.at("leaf").get<bool>()) {
      n.feature = jn.at("feature").get<int>();
      n.threshold = jn.at("threshold").get<double>();
      n.left = jn.at("left").get<int>();
      n.right = jn.at("right").get<int>();
    }
    model.nodes_.push_back(n);
  }
  const auto count = static_cast<int>(model.nodes_.size());
  if (count == 0) throw ValidationError("model has no nodes");
  for (int i = 0; i < count; ++i) {
    const auto& n = model.nodes_[static_cast<std::size_t>(i)];
    if (n.is_leaf()) continue;
    if (n.left <= i || n.right <= i || n.left >= count || n.right >= count || n.feature < 0 ||
        n.feature >= static_cast<int>(model.feature_names_.size())) {
      throw ValidationError("model node " + std::to_string(i) + " is malformed");
    }
  }
  model.importances_.assign(model.feature_names_.size(), 0.0);
  for (const auto& ji : j.at("importances")) {
    const auto name = ji.at("feature").get<std::string>();
    const auto it = std::find(model.feature_names_.begin(), model.feature_names_.end(), name);
    if (it != model.feature_names_.end()) {
      model.importances_[static_cast<std::size_t>(it - model.feature_names_.begin())] =
          ji.at("importance").get<double>();
    }
  }
  if (j.at("schema_hash").get<std::string>() != model.schema_hash()) {
    throw ValidationError("model schema hash mismatch");
  }
  return model;
}

namespace {

double impurity(Criterion criterion, double w0, double w1) {
  const double total = w0 + w1;
  if (total <= 0.0) return 0.0;
  const double p0 = w0 / total;
  const double p1 = w1 / total;
  if (criterion == Criterion::kGini) return 1.0 - p0 * p0 - p1 * p1;
  double h = 0.0;
  if (p0 > 0.0) h -= p0 * std::log2(p0);
  if (p1 > 0.0) h -= p1 * std::log2(p1);
  return h;
}

/// Per-feature index arrays sorted by value; each node owns the same
/// contiguous [begin, end) range in every array.
class Builder {
 public:
  Builder(const LabeledDataset& data, const Hyperparameters& hp)
      : data_(data), hp_(hp), n_(data.rows()), f_(data.cols()) {
    std::array<double, kNumClasses> weight{1.0, 1.0};
    if (hp.class_weight == ClassWeight::kBalanced) {
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto count = data.count(static_cast<Label>(c));
        weight[c] = count > 0 ? static_cast<double>(n_) / (2.0 * static_cast<double>(count)) : 0.0;
      }
    }
    sample_weight_.resize(n_);
    label_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      label_[i] = static_cast<std::size_t>(data.labels[i]);
      sample_weight_[i] = weight[label_[i]];
    }
    sorted_.assign(f_, std::vector<std::size_t>(n_));
    for (std::size_t f = 0; f < f_; ++f) {
      auto& idx = sorted_[f];
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      const auto col = static_cast<Eigen::Index>(f);
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return data.features(static_cast<Eigen::Index>(a), col) <
               data.features(static_cast<Eigen::Index>(b), col);
      });
    }
    goes_left_.assign(n_, 0);
    scratch_.resize(n_);
    importance_.assign(f_, 0.0);
  }

  TreeModel build() {
    struct Pending {
      int id;
      std::size_t begin, end;
    };
    nodes_.push_back(make_node(0, n_, 0));
    std::vector<Pending> stack{{0, 0, n_}};
    while (!stack.empty()) {
      const auto [id, begin, end] = stack.back();
      stack.pop_back();
      const auto split = best_split(nodes_[static_cast<std::size_t>(id)], begin, end);
      if (!split) continue;
      const std::size_t mid = partition(*split, begin, end);
      auto& parent = nodes_[static_cast<std::size_t>(id)];
      parent.feature = static_cast<int>(split->feature);
      parent.threshold = split->threshold;
      const int depth = parent.depth + 1;
      TreeNode left = make_node(begin, mid, depth);
      TreeNode right = make_node(mid, end, depth);
      const double w_total = total_weight_;
      const double decrease = weight_of(parent) * parent.impurity -
                              weight_of(left) * left.impurity - weight_of(right) * right.impurity;
      importance_[split->feature] += decrease / w_total;
      const int left_id = static_cast<int>(nodes_.size());
      nodes_[static_cast<std::size_t>(id)].left = left_id;
      nodes_[static_cast<std::size_t>(id)].right = left_id + 1;
      nodes_.push_back(left);
      nodes_.push_back(right);
      stack.push_back({left_id + 1, mid, end});
      stack.push_back({left_id, begin, mid});
    }
    return TreeModel(data_.feature_names, hp_, std::move(nodes_), std::move(importance_));
  }

 private:
  struct Split {
    std::size_t feature;
    std::size_t position;  // last sorted position going left
    double threshold;
  };

  static double weight_of(const TreeNode& n) { return n.class_counts[0] + n.class_counts[1]; }

  TreeNode make_node(std::size_t begin, std::size_t end, int depth) {
    TreeNode node;
    node.depth = depth;
    // Any feature's range holds the node's samples.
    const auto& idx = sorted_.empty() ? identity() : sorted_[0];
    for (std::size_t p = begin; p < end; ++p) {
      const auto i = idx[p];
      node.class_counts[label_[i]] += sample_weight_[i];
      ++node.samples[label_[i]];
    }
    node.impurity = impurity(hp_.criterion, node.class_counts[0], node.class_counts[1]);
    if (depth == 0) total_weight_ = weight_of(node);
    return node;
  }

  const std::vector<std::size_t>& identity() {
    if (identity_.size() != n_) {
      identity_.resize(n_);
      std::iota(identity_.begin(), identity_.end(), std::size_t{0});
    }
    return identity_;
  }

  std::optional<Split> best_split(const TreeNode& node, std::size_t begin, std::size_t end) const {
    const std::size_t count = end - begin;
    const auto min_leaf = static_cast<std::size_t>(hp_.min_samples_leaf);
    if (node.samples[0] == 0 || node.samples[1] == 0) return std::nullopt;
    if (hp_.max_depth && node.depth >= *hp_.max_depth) return std::nullopt;
    if (count < static_cast<std::size_t>(hp_.min_samples_split)) return std::nullopt;
    if (count < 2 * min_leaf) return std::nullopt;

    const double w_node = weight_of(node);
    std::optional<Split> best;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < f_; ++f) {
      const auto& idx = sorted_[f];
      const auto col = static_cast<Eigen::Index>(f);
      std::array<double, kNumClasses> left{0.0, 0.0};
      for (std::size_t p = begin; p + 1 < end; ++p) {
        const auto i = idx[p];
        left[label_[i]] += sample_weight_[i];
        const std::size_t n_left = p - begin + 1;
        if (n_left < min_leaf) continue;
        if (count - n_left < min_leaf) break;
        const double v = data_.features(static_cast<Eigen::Index>(i), col);
        const double v_next = data_.features(static_cast<Eigen::Index>(idx[p + 1]), col);
        if (!(v < v_next)) continue;
        const double w_left = left[0] + left[1];
        const double w_right = w_node - w_left;
        const double score =
            (w_left * impurity(hp_.criterion, left[0], left[1]) +
             w_right * impurity(hp_.criterion, node.class_counts[0] - left[0],
                                node.class_counts[1] - left[1])) /
            w_node;
        if (score < best_score - 1e-12) {
          best_score = score;
          double threshold = 0.5 * (v + v_next);
          if (!(threshold < v_next)) threshold = v;  // adjacent doubles
          best = Split{f, p, threshold};
        }
      }
    }
    return best;
  }

  /// Stable-partitions every feature's range; returns the first right position.
  std::size_t partition(const Split& split, std::size_t begin, std::size_t end) {
    const auto& chosen = sorted_[split.feature];
    for (std::size_t p = begin; p < end; ++p) goes_left_[chosen[p]] = p <= split.position;
    const std::size_t mid = split.position + 1;
    for (std::size_t f = 0; f < f_; ++f) {
      auto& idx = sorted_[f];
      std::size_t l = begin;
      std::size_t r = 0;
      for (std::size_t p = begin; p < end; ++p) {
        const auto i = idx[p];
        if (goes_left_[i]) {
          idx[l++] = i;
        } else {
          scratch_[r++] = i;
        }
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<long>(r),
                idx.begin() + static_cast<long>(l));
    }
    return mid;
  }

  const LabeledDataset& data_;
  const Hyperparameters& hp_;
  std::size_t n_;
  std::size_t f_;
  std::vector<double> sample_weight_;
  std::vector<std::size_t> label_;
  std::vector<std::vector<std::size_t>> sorted_;
  std::vector<char> goes_left_;
  std::vector<std::size_t> scratch_;
  std::vector<std::size_t> identity_;
  std::vector<TreeNode> nodes_;
  std::vector<double> importance_;
  double total_weight_ = 1.0;
};

}  // namespace

TreeModel fit_tree(const LabeledDataset& data, const Hyperparameters& hp) {
  hp.validate();
  if (data.rows() == 0) throw ValidationError("fit_tree: empty dataset");
  if (data.count(Label::kHigh) == 0 || data.count(Label::kLow) == 0) {
    throw ValidationError("fit_tree: both classes must be present");
  }
  if (static_cast<std::size_t>(data.features.cols()) != data.cols()) {
    throw ValidationError("fit_tree: feature_names do not match the matrix");
  }
  return Builder(data, hp).build();
}

ImportanceReport feature_importance(const TreeModel& model) {
  ImportanceReport report;
  const auto& names = model.feature_names();
  const auto& values = model.importances();
  for (std::size_t f = 0; f < names.size(); ++f) report.ranked.push_back({names[f], values[f]});
  std::sort(report.ranked.begin(), report.ranked.end(),
            [](const FeatureImportance& a, const FeatureImportance& b) {
              if (a.importance != b.importance) return a.importance > b.importance;
              return a.feature < b.feature;
            });
  if (model.split_count() == 0) {
    report.warnings.push_back("feature_importance: tree has no splits; all importances are 0");
  }
  return report;
}

}  // namespace engage::dtree
