#include "engage/guidelines.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>

#include "engage/csv.hpp"

namespace engage::dtree {

std::string Condition::to_string() const {
  return feature + (comparator == Comparator::kLessEqual ? " <= " : " > ") +
         csv::format_double(threshold);
}

bool GuidelinePath::matches(std::span<const double> row) const noexcept {
  return std::all_of(conditions.begin(), conditions.end(), [&](const Condition& c) {
    return c.holds(row[static_cast<std::size_t>(c.feature_index)]);
  });
}

namespace {

struct Bounds {
  std::optional<Condition> lower;  // x > t
  std::optional<Condition> upper;  // x <= t
};

GuidelinePath collapse(const TreeModel& model, const std::vector<Condition>& raw, int leaf) {
  std::vector<int> order;
  std::map<int, Bounds> bounds;
  for (const auto& c : raw) {
    if (!bounds.count(c.feature_index)) order.push_back(c.feature_index);
    auto& b = bounds[c.feature_index];
    if (c.comparator == Comparator::kGreater) {
      if (!b.lower || c.threshold > b.lower->threshold) b.lower = c;
    } else if (!b.upper || c.threshold < b.upper->threshold) {
      b.upper = c;
    }
  }
  const auto& node = model.nodes()[static_cast<std::size_t>(leaf)];
  GuidelinePath path;
  for (int f : order) {
    const auto& b = bounds[f];
    if (b.lower) path.conditions.push_back(*b.lower);
    if (b.upper) path.conditions.push_back(*b.upper);
  }
  path.predicted_class = node.predicted();
  path.support = node.n_samples();
  path.purity = path.support > 0
                    ? static_cast<double>(node.samples[static_cast<std::size_t>(path.predicted_class)]) /
                          static_cast<double>(path.support)
                    : 0.0;
  path.leaf_node = leaf;
  path.leaf_depth = node.depth;
  return path;
}

}  // namespace

GuidelineResult extract_guidelines(const TreeModel& model, Label target) {
  GuidelineResult result;
  const auto& nodes = model.nodes();
  if (nodes.empty()) throw ValidationError("extract_guidelines: model not fitted");
  std::vector<Condition> trail;
  // Explicit DFS keeps left-before-right order without recursion limits.
  struct Frame {
    int node;
    std::size_t trail_size;
    std::optional<Condition> entering;
  };
  std::vector<Frame> stack{{0, 0, std::nullopt}};
  while (!stack.empty()) {
    auto frame = std::move(stack.back());
    stack.pop_back();
    trail.resize(frame.trail_size);
    if (frame.entering) trail.push_back(*frame.entering);
    const auto& node = nodes[static_cast<std::size_t>(frame.node)];
    if (node.is_leaf()) {
      if (node.predicted() == target) result.paths.push_back(collapse(model, trail, frame.node));
      continue;
    }
    const auto& name = model.feature_names()[static_cast<std::size_t>(node.feature)];
    const Condition go_right{name, node.feature, Comparator::kGreater, node.threshold, node.depth};
    const Condition go_left{name, node.feature, Comparator::kLessEqual, node.threshold, node.depth};
    stack.push_back({node.right, trail.size(), go_right});
    stack.push_back({node.left, trail.size(), go_left});
  }
  if (result.paths.empty()) {
    result.warnings.push_back("extract_guidelines: no leaf predicts " +
                              std::string(to_string(target)));
  }
  return result;
}

nlohmann::json to_json(const GuidelinePath& path) {
  nlohmann::json conditions = nlohmann::json::array();
  for (const auto& c : path.conditions) {
    conditions.push_back({{"feature", c.feature},
                          {"comparator", c.comparator == Comparator::kLessEqual ? "<=" : ">"},
                          {"threshold", c.threshold},
                          {"depth", c.depth},
                          {"text", c.to_string()}});
  }
  return {{"conditions", std::move(conditions)},
          {"predicted_class", to_string(path.predicted_class)},
          {"support", path.support},
          {"purity", path.purity},
          {"leaf_node", path.leaf_node},
          {"leaf_depth", path.leaf_depth}};
}

nlohmann::json to_json(const GuidelineResult& result) {
  nlohmann::json paths = nlohmann::json::array();
  for (const auto& p : result.paths) paths.push_back(to_json(p));
  return {{"paths", std::move(paths)}, {"warnings", result.warnings}};
}

std::string render_guidelines_markdown(const TreeModel& model, const GuidelineResult& guidelines,
                                       int max_depth_render) {
  std::ostringstream out;
  const auto& nodes = model.nodes();
  out << "### Decision tree (depth <= " << max_depth_render << ")\n\n```\n";
  struct Frame {
    int node;
    std::string prefix;
  };
  std::vector<Frame> stack{{0, ""}};
  while (!stack.empty()) {
    const auto frame = stack.back();
    stack.pop_back();
    const auto& n = nodes[static_cast<std::size_t>(frame.node)];
    const std::string indent(static_cast<std::size_t>(2 * n.depth), ' ');
    out << indent << frame.prefix;
    if (n.is_leaf()) {
      out << "-> " << to_string(n.predicted()) << " (low=" << n.samples[0]
          << ", high=" << n.samples[1] << ")\n";
      continue;
    }
    if (n.depth >= max_depth_render) {
      out << "... subtree: " << n.n_samples() << " samples, majority "
          << to_string(n.predicted()) << "\n";
      continue;
    }
    const auto& name = model.feature_names()[static_cast<std::size_t>(n.feature)];
    out << "[" << name << " <= " << csv::format_double(n.threshold) << "]\n";
    stack.push_back({n.right, "else: "});
    stack.push_back({n.left, "then: "});
  }
  out << "```\n\n### Paths to High engagement\n\n";
  if (guidelines.paths.empty()) out << "_No leaf predicts High._\n";
  for (std::size_t i = 0; i < guidelines.paths.size(); ++i) {
    const auto& p = guidelines.paths[i];
    out << i + 1 << ". ";
    std::size_t shown = 0;
    std::size_t hidden = 0;
    for (const auto& c : p.conditions) {
      if (c.depth >= max_depth_render) {
        ++hidden;
        continue;
      }
      out << (shown++ ? " AND " : "") << "`" << c.to_string() << "`";
    }
    if (shown == 0) out << "_(root)_";
    if (hidden > 0) out << " (+" << hidden << " deeper conditions)";
    out << "; support " << p.support << ", purity " << csv::format_double(p.purity) << "\n";
  }
  return out.str();
}

}  // namespace engage::dtree
