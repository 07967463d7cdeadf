/*
 * Copyright 2026 The Pathwise Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pathwise/tree.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include "pathwise/error.hpp"

namespace pathwise {
namespace {

// Gains closer than this are ties; splits must beat it to be accepted.
constexpr double kGainTolerance = 1e-12;

double plog2p(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }
double plnp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

std::string format_threshold(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", p);
  return buf;
}

class Builder {
 public:
  Builder(const FeatureMatrix& m, const Hyperparameters& hp)
      : m_(m), hp_(hp), labels_(*m.labels()) {}

  std::vector<TreeNode> build() {
    const std::size_t n = m_.rows();
    std::vector<std::vector<std::uint32_t>> sorted(m_.cols());
    for (std::size_t c = 0; c < m_.cols(); ++c) {
      auto& order = sorted[c];
      order.resize(n);
      std::iota(order.begin(), order.end(), 0u);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::uint32_t a, std::uint32_t b) {
                         return m_.at(a, c) < m_.at(b, c);
                       });
    }
    goes_left_.assign(n, 0);
    std::vector<std::uint32_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0u);
    grow(std::move(rows), std::move(sorted), -1, 0);
    return std::move(nodes_);
  }

 private:
  struct Best {
    double gain = -std::numeric_limits<double>::infinity();
    std::size_t column = 0;
    double threshold = 0.0;
  };

  ClassCounts tally(const std::vector<std::uint32_t>& rows) const {
    ClassCounts c;
    for (auto r : rows) {
      if (labels_[r] == Outcome::kNoGrad4yr) {
        ++c.at_risk;
      } else {
        ++c.grad;
      }
    }
    return c;
  }

  Best find_split(const std::vector<std::vector<std::uint32_t>>& sorted,
                  ClassCounts counts) const {
    Best best;
    const double n = counts.total();
    const double parent = impurity(counts, hp_.criterion);
    const std::size_t min_leaf = static_cast<std::size_t>(hp_.min_samples_leaf);
    for (std::size_t c = 0; c < sorted.size(); ++c) {
      const auto& order = sorted[c];
      ClassCounts left;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        if (labels_[order[i]] == Outcome::kNoGrad4yr) {
          ++left.at_risk;
        } else {
          ++left.grad;
        }
        const std::size_t n_left = i + 1;
        if (n_left < min_leaf) continue;
        if (order.size() - n_left < min_leaf) break;
        const double a = m_.at(order[i], c);
        const double b = m_.at(order[i + 1], c);
        if (!(a < b)) continue;
        const ClassCounts right{counts.at_risk - left.at_risk,
                                counts.grad - left.grad};
        const double gain =
            parent -
            (static_cast<double>(n_left) / n) * impurity(left, hp_.criterion) -
            (static_cast<double>(right.total()) / n) *
                impurity(right, hp_.criterion);
        if (gain > best.gain + kGainTolerance) {
          double t = a + (b - a) / 2.0;
          if (!(t < b)) t = a;  // a, b adjacent doubles
          best = {gain, c, t};
        }
      }
    }
    return best;
  }

  int grow(std::vector<std::uint32_t> rows,
           std::vector<std::vector<std::uint32_t>> sorted, int parent,
           int depth) {
    const int id = static_cast<int>(nodes_.size());
    TreeNode node;
    node.id = id;
    node.parent = parent;
    node.depth = depth;
    node.counts = tally(rows);
    nodes_.push_back(node);

    const bool pure = node.counts.at_risk == 0 || node.counts.grad == 0;
    if (depth >= hp_.max_depth || pure ||
        rows.size() < 2 * static_cast<std::size_t>(hp_.min_samples_leaf)) {
      return id;
    }
    const Best best = find_split(sorted, node.counts);
    if (!(best.gain > kGainTolerance)) return id;

    for (auto r : rows) {
      goes_left_[r] = m_.at(r, best.column) <= best.threshold ? 1 : 0;
    }
    std::vector<std::uint32_t> left_rows, right_rows;
    for (auto r : rows) (goes_left_[r] ? left_rows : right_rows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    std::vector<std::vector<std::uint32_t>> left_sorted(sorted.size()),
        right_sorted(sorted.size());
    for (std::size_t c = 0; c < sorted.size(); ++c) {
      left_sorted[c].reserve(left_rows.size());
      right_sorted[c].reserve(right_rows.size());
      for (auto r : sorted[c]) {
        (goes_left_[r] ? left_sorted[c] : right_sorted[c]).push_back(r);
      }
      std::vector<std::uint32_t>().swap(sorted[c]);
    }

    nodes_[id].rule =
        SplitRule{best.column, m_.column_names()[best.column], best.threshold};
    const int left = grow(std::move(left_rows), std::move(left_sorted), id,
                          depth + 1);
    right_sorted.shrink_to_fit();
    const int right = grow(std::move(right_rows), std::move(right_sorted), id,
                           depth + 1);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  const FeatureMatrix& m_;
  const Hyperparameters& hp_;
  const std::vector<Outcome>& labels_;
  std::vector<TreeNode> nodes_;
  std::vector<std::uint8_t> goes_left_;
};

std::string counts_text(ClassCounts c) {
  return "counts=[" + std::to_string(c.at_risk) + ", " +
         std::to_string(c.grad) + "]";
}

}  // namespace

std::string_view to_string(Criterion criterion) {
  switch (criterion) {
    case Criterion::kGini:
      return "gini";
    case Criterion::kEntropy:
      return "entropy";
    case Criterion::kLogLoss:
      return "log_loss";
  }
  return "gini";
}

Criterion parse_criterion(std::string_view tag) {
  if (tag == "gini") return Criterion::kGini;
  if (tag == "entropy") return Criterion::kEntropy;
  if (tag == "log_loss") return Criterion::kLogLoss;
  throw ValidationError("unknown criterion: " + std::string(tag));
}

void Hyperparameters::validate() const {
  if (max_depth < 1) throw ValidationError("max_depth must be >= 1");
  if (min_samples_leaf < 1) {
    throw ValidationError("min_samples_leaf must be >= 1");
  }
}

double impurity(ClassCounts counts, Criterion criterion) {
  const double n = counts.total();
  if (n == 0) throw ValidationError("impurity of an empty node");
  const double p = counts.at_risk / n;
  const double q = counts.grad / n;
  switch (criterion) {
    case Criterion::kGini:
      return 1.0 - p * p - q * q;
    case Criterion::kEntropy:
      return -(plog2p(p) + plog2p(q));
    case Criterion::kLogLoss:
      return -(plnp(p) + plnp(q));
  }
  return 0.0;
}

Prediction leaf_prediction(ClassCounts counts) {
  const double n = counts.total();
  if (n == 0) throw ValidationError("prediction from an empty leaf");
  Prediction out;
  out.label = counts.at_risk >= counts.grad ? Outcome::kNoGrad4yr
                                            : Outcome::kGrad4yr;
  out.probability = std::max(counts.at_risk, counts.grad) / n;
  out.at_risk_score = counts.at_risk / n;
  return out;
}

// ---------------------------------------------------------------------------
// DecisionTree

DecisionTree::DecisionTree(std::vector<TreeNode> nodes,
                           Hyperparameters hyperparameters,
                           std::vector<std::string> column_names,
                           TrainingFingerprint fingerprint)
    : nodes_(std::move(nodes)),
      hp_(hyperparameters),
      columns_(std::move(column_names)),
      fingerprint_(fingerprint) {
  if (nodes_.empty()) throw ValidationError("tree has no nodes");
  const int n = static_cast<int>(nodes_.size());
  for (int i = 0; i < n; ++i) {
    const auto& node = nodes_[i];
    const std::string where = "node " + std::to_string(i);
    if (node.id != i) throw ValidationError(where + ": ids must be contiguous");
    if (node.counts.total() == 0) throw ValidationError(where + ": empty node");
    if (i == 0) {
      if (node.parent != -1 || node.depth != 0) {
        throw ValidationError("root must have no parent and depth 0");
      }
    } else if (node.parent < 0 || node.parent >= i) {
      throw ValidationError(where + ": parent must precede it in pre-order");
    }
    if (node.is_leaf()) {
      if (node.left != -1 || node.right != -1) {
        throw ValidationError(where + ": leaf with children");
      }
      continue;
    }
    if (node.rule->column_index >= columns_.size() ||
        columns_[node.rule->column_index] != node.rule->column_name) {
      throw ValidationError(where + ": split column does not match the tree");
    }
    if (node.left != i + 1 || node.right <= node.left || node.right >= n) {
      throw ValidationError(where + ": children are not in pre-order");
    }
    const auto& l = nodes_[node.left];
    const auto& r = nodes_[node.right];
    if (l.parent != i || r.parent != i || l.depth != node.depth + 1 ||
        r.depth != node.depth + 1) {
      throw ValidationError(where + ": inconsistent child links");
    }
    if (l.counts + r.counts != node.counts) {
      throw ValidationError(where + ": child counts do not sum to the node");
    }
  }
}

int DecisionTree::depth() const {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(),
                    [](const TreeNode& n) { return n.is_leaf(); }));
}

int DecisionTree::leaf_for(std::span<const double> row, int depth_cap) const {
  if (row.size() != columns_.size()) {
    throw ValidationError("row has " + std::to_string(row.size()) +
                          " values, tree expects " +
                          std::to_string(columns_.size()));
  }
  int id = 0;
  while (!nodes_[id].is_leaf() && nodes_[id].depth < depth_cap) {
    const auto& rule = *nodes_[id].rule;
    id = rule.goes_left(row[rule.column_index]) ? nodes_[id].left
                                                : nodes_[id].right;
  }
  return id;
}

Prediction DecisionTree::predict(std::span<const double> row) const {
  return leaf_prediction(
      nodes_[leaf_for(row, std::numeric_limits<int>::max())].counts);
}

Prediction DecisionTree::predict(std::span<const double> row,
                                 int depth_cap) const {
  return leaf_prediction(nodes_[leaf_for(row, depth_cap)].counts);
}

TreePath DecisionTree::extract_path(std::span<const double> row) const {
  if (row.size() != columns_.size()) {
    throw ValidationError("row has " + std::to_string(row.size()) +
                          " values, tree expects " +
                          std::to_string(columns_.size()));
  }
  TreePath path;
  int id = 0;
  while (!nodes_[id].is_leaf()) {
    const auto& node = nodes_[id];
    PathStep step;
    step.node_id = id;
    step.rule = *node.rule;
    step.value = row[node.rule->column_index];
    step.branch = node.rule->goes_left(step.value) ? Branch::kLeft
                                                   : Branch::kRight;
    path.steps.push_back(step);
    id = step.branch == Branch::kLeft ? node.left : node.right;
  }
  path.leaf_id = id;
  path.leaf_counts = nodes_[id].counts;
  path.prediction = leaf_prediction(path.leaf_counts);
  return path;
}

nlohmann::json DecisionTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : nodes_) {
    nlohmann::json o = {{"id", n.id},
                        {"parent", n.parent},
                        {"depth", n.depth},
                        {"counts", {n.counts.at_risk, n.counts.grad}},
                        {"left", n.left},
                        {"right", n.right}};
    if (n.rule) {
      o["rule"] = {{"column_index", n.rule->column_index},
                   {"column_name", n.rule->column_name},
                   {"threshold", n.rule->threshold}};
    } else {
      o["rule"] = nullptr;
    }
    nodes.push_back(std::move(o));
  }
  return {{"hyperparameters",
           {{"criterion", std::string(to_string(hp_.criterion))},
            {"max_depth", hp_.max_depth},
            {"min_samples_leaf", hp_.min_samples_leaf}}},
          {"column_names", columns_},
          {"fingerprint",
           {{"rows", fingerprint_.rows},
            {"at_risk", fingerprint_.totals.at_risk},
            {"grad", fingerprint_.totals.grad},
            {"seed", fingerprint_.seed}}},
          {"nodes", std::move(nodes)}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
  try {
    Hyperparameters hp;
    const auto& h = j.at("hyperparameters");
    hp.criterion = parse_criterion(h.at("criterion").get<std::string>());
    hp.max_depth = h.at("max_depth").get<int>();
    hp.min_samples_leaf = h.at("min_samples_leaf").get<int>();
    TrainingFingerprint fp;
    if (j.contains("fingerprint")) {
      const auto& f = j["fingerprint"];
      fp.rows = f.at("rows").get<std::size_t>();
      fp.totals = {f.at("at_risk").get<std::uint32_t>(),
                   f.at("grad").get<std::uint32_t>()};
      fp.seed = f.at("seed").get<std::uint64_t>();
    }
    std::vector<TreeNode> nodes;
    for (const auto& o : j.at("nodes")) {
      TreeNode n;
      n.id = o.at("id").get<int>();
      n.parent = o.at("parent").get<int>();
      n.depth = o.at("depth").get<int>();
      const auto counts = o.at("counts").get<std::vector<std::uint32_t>>();
      if (counts.size() != 2) throw ValidationError("node counts need 2 entries");
      n.counts = {counts[0], counts[1]};
      n.left = o.at("left").get<int>();
      n.right = o.at("right").get<int>();
      if (!o.at("rule").is_null()) {
        const auto& r = o["rule"];
        n.rule = SplitRule{r.at("column_index").get<std::size_t>(),
                           r.at("column_name").get<std::string>(),
                           r.at("threshold").get<double>()};
      }
      nodes.push_back(std::move(n));
    }
    return DecisionTree(std::move(nodes), hp,
                        j.at("column_names").get<std::vector<std::string>>(),
                        fp);
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("malformed tree JSON: ") + ex.what());
  }
}

bool DecisionTree::structurally_equal(const DecisionTree& other) const {
  return nodes_ == other.nodes_ && columns_ == other.columns_ &&
         hp_ == other.hp_;
}

// ---------------------------------------------------------------------------
// Training

DecisionTree train(const FeatureMatrix& matrix, const Hyperparameters& hp,
                   std::uint64_t seed) {
  hp.validate();
  if (matrix.rows() == 0) throw ValidationError("cannot train on an empty matrix");
  if (!matrix.labels()) throw ValidationError("training matrix has no labels");
  Builder builder(matrix, hp);
  auto nodes = builder.build();
  TrainingFingerprint fp{matrix.rows(), nodes.front().counts, seed};
  return DecisionTree(std::move(nodes), hp, matrix.column_names(), fp);
}

// ---------------------------------------------------------------------------
// Text rendering

std::string render_tree_text(const DecisionTree& tree) {
  std::string out;
  for (const auto& n : tree.nodes()) {
    out.append(static_cast<std::size_t>(2 * n.depth), ' ');
    if (n.is_leaf()) {
      const auto p = leaf_prediction(n.counts);
      out += "leaf: " + counts_text(n.counts) + " → " +
             std::string(to_string(p.label)) + " (p=" +
             format_probability(p.probability) + ")";
    } else {
      out += std::to_string(n.id) + ": IF " + n.rule->column_name + " ≤ " +
             format_threshold(n.rule->threshold) + " (" +
             counts_text(n.counts) + ")";
    }
    out += '\n';
  }
  return out;
}

namespace {

ClassCounts parse_counts(std::string_view text, std::size_t line_no) {
  // text looks like "counts=[a, g]"
  auto fail = [&]() -> ClassCounts {
    throw ValidationError("tree text line " + std::to_string(line_no) +
                          ": malformed counts");
  };
  if (!text.starts_with("counts=[") || !text.ends_with("]")) return fail();
  text.remove_prefix(8);
  text.remove_suffix(1);
  const auto comma = text.find(", ");
  if (comma == std::string_view::npos) return fail();
  ClassCounts c;
  auto parse_u32 = [&](std::string_view s, std::uint32_t& v) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail();
  };
  parse_u32(text.substr(0, comma), c.at_risk);
  parse_u32(text.substr(comma + 2), c.grad);
  return c;
}

}  // namespace

DecisionTree parse_tree_text(std::string_view text,
                             std::vector<std::string> column_names,
                             Hyperparameters hp) {
  std::vector<TreeNode> nodes;
  // Internal nodes still waiting for a left or right child.
  std::vector<int> open;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::string where = "tree text line " + std::to_string(line_no);

    std::size_t indent = 0;
    while (indent < line.size() && line[indent] == ' ') ++indent;
    if (indent % 2 != 0) throw ValidationError(where + ": odd indentation");
    line.remove_prefix(indent);

    TreeNode node;
    node.id = static_cast<int>(nodes.size());
    node.depth = static_cast<int>(indent / 2);
    if (node.id == 0) {
      if (node.depth != 0) throw ValidationError(where + ": root is indented");
    } else {
      if (open.empty()) throw ValidationError(where + ": node after a complete tree");
      auto& parent = nodes[open.back()];
      if (node.depth != parent.depth + 1) {
        throw ValidationError(where + ": unexpected indentation");
      }
      node.parent = parent.id;
      if (parent.left == -1) {
        parent.left = node.id;
      } else {
        parent.right = node.id;
        open.pop_back();
      }
    }

    if (line.starts_with("leaf: ")) {
      line.remove_prefix(6);
      const auto arrow = line.find(" → ");
      if (arrow == std::string_view::npos) {
        throw ValidationError(where + ": leaf without prediction");
      }
      node.counts = parse_counts(line.substr(0, arrow), line_no);
      if (node.counts.total() == 0) throw ValidationError(where + ": empty leaf");
      const auto p = leaf_prediction(node.counts);
      const std::string expected = std::string(to_string(p.label)) + " (p=" +
                                   format_probability(p.probability) + ")";
      if (line.substr(arrow + std::string_view(" → ").size()) != expected) {
        throw ValidationError(where + ": leaf prediction disagrees with counts");
      }
    } else {
      const auto colon = line.find(": IF ");
      if (colon == std::string_view::npos) {
        throw ValidationError(where + ": expected 'leaf:' or '<id>: IF'");
      }
      int id = -1;
      const auto id_text = line.substr(0, colon);
      auto [ptr, ec] =
          std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
      if (ec != std::errc() || ptr != id_text.data() + id_text.size() ||
          id != node.id) {
        throw ValidationError(where + ": node id is not the pre-order index");
      }
      auto rest = line.substr(colon + 5);
      const auto paren = rest.rfind(" (");
      const auto le = rest.rfind(" ≤ ", paren);
      if (paren == std::string_view::npos || le == std::string_view::npos ||
          !rest.ends_with(")")) {
        throw ValidationError(where + ": malformed split line");
      }
      const std::string name(rest.substr(0, le));
      const auto thr_text =
          rest.substr(le + std::string_view(" ≤ ").size(),
                      paren - le - std::string_view(" ≤ ").size());
      double threshold = 0.0;
      auto [tp, tec] = std::from_chars(
          thr_text.data(), thr_text.data() + thr_text.size(), threshold);
      if (tec != std::errc() || tp != thr_text.data() + thr_text.size()) {
        throw ValidationError(where + ": malformed threshold");
      }
      const auto col =
          std::find(column_names.begin(), column_names.end(), name);
      if (col == column_names.end()) {
        throw ValidationError(where + ": unknown column '" + name + "'");
      }
      node.rule = SplitRule{
          static_cast<std::size_t>(col - column_names.begin()), name,
          threshold};
      auto counts_part = rest.substr(paren + 2);
      counts_part.remove_suffix(1);
      node.counts = parse_counts(counts_part, line_no);
      open.push_back(node.id);
    }
    nodes.push_back(std::move(node));
  }
  if (nodes.empty()) throw ValidationError("tree text is empty");
  if (!open.empty()) throw ValidationError("tree text ends with an incomplete split");
  TrainingFingerprint fp{nodes.front().counts.total(), nodes.front().counts, 0};
  return DecisionTree(std::move(nodes), hp, std::move(column_names), fp);
}

}  // namespace pathwise
