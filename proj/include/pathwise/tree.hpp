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

#ifndef PATHWISE_TREE_HPP_
#define PATHWISE_TREE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pathwise/datamodel.hpp"

namespace pathwise {

enum class Criterion { kGini, kEntropy, kLogLoss };

std::string_view to_string(Criterion criterion);
Criterion parse_criterion(std::string_view tag);

struct Hyperparameters {
  Criterion criterion = Criterion::kGini;
  int max_depth = 5;
  int min_samples_leaf = 1;

  void validate() const;
  bool operator==(const Hyperparameters&) const = default;
};

// Class tallies, at-risk first.
struct ClassCounts {
  std::uint32_t at_risk = 0;
  std::uint32_t grad = 0;

  std::uint32_t total() const { return at_risk + grad; }
  ClassCounts operator+(const ClassCounts& o) const {
    return {at_risk + o.at_risk, grad + o.grad};
  }
  bool operator==(const ClassCounts&) const = default;
};

// gini = 1 - sum p^2, entropy = -sum p log2 p, log_loss = -sum p ln p.
// Throws ValidationError on an empty node.
double impurity(ClassCounts counts, Criterion criterion);

// Rows with value <= threshold go left.
struct SplitRule {
  std::size_t column_index = 0;
  std::string column_name;
  double threshold = 0.0;

  bool goes_left(double value) const { return value <= threshold; }
  bool operator==(const SplitRule&) const = default;
};

struct TreeNode {
  int id = 0;  // pre-order index
  int parent = -1;
  int depth = 0;
  ClassCounts counts;
  std::optional<SplitRule> rule;  // empty for leaves
  int left = -1;
  int right = -1;

  bool is_leaf() const { return !rule.has_value(); }
  bool operator==(const TreeNode&) const = default;
};

struct Prediction {
  Outcome label = Outcome::kGrad4yr;
  double probability = 0.0;    // majority count / leaf total
  double at_risk_score = 0.0;  // at-risk count / leaf total, for ROC

  bool operator==(const Prediction&) const = default;
};

// Majority vote with ties going to NoGrad4yr.
Prediction leaf_prediction(ClassCounts counts);

enum class Branch { kLeft, kRight };

struct PathStep {
  int node_id = 0;
  SplitRule rule;
  double value = 0.0;
  Branch branch = Branch::kLeft;
};

struct TreePath {
  std::vector<PathStep> steps;
  int leaf_id = 0;
  ClassCounts leaf_counts;
  Prediction prediction;
};

struct TrainingFingerprint {
  std::size_t rows = 0;
  ClassCounts totals;
  std::uint64_t seed = 0;

  bool operator==(const TrainingFingerprint&) const = default;
};

class DecisionTree {
 public:
  // Validates topology: contiguous pre-order ids, count conservation and
  // depth bookkeeping. Throws ValidationError otherwise.
  DecisionTree(std::vector<TreeNode> nodes, Hyperparameters hyperparameters,
               std::vector<std::string> column_names,
               TrainingFingerprint fingerprint = {});

  const TreeNode& root() const { return nodes_.front(); }
  const TreeNode& node(int id) const { return nodes_.at(id); }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const Hyperparameters& hyperparameters() const { return hp_; }
  const std::vector<std::string>& column_names() const { return columns_; }
  const TrainingFingerprint& fingerprint() const { return fingerprint_; }

  int depth() const;
  std::size_t leaf_count() const;

  // Throws ValidationError on a row of the wrong width.
  Prediction predict(std::span<const double> row) const;
  // Prediction of the same tree truncated at `depth_cap`: the node reached
  // at that depth acts as a leaf.
  Prediction predict(std::span<const double> row, int depth_cap) const;
  TreePath extract_path(std::span<const double> row) const;

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j);

  // Same nodes, column names and hyperparameters.
  bool structurally_equal(const DecisionTree& other) const;

 private:
  std::vector<TreeNode> nodes_;
  Hyperparameters hp_;
  std::vector<std::string> columns_;
  TrainingFingerprint fingerprint_;

  int leaf_for(std::span<const double> row, int depth_cap) const;
};

// Greedy recursive CART. At each node the (column, midpoint) pair with the
// largest size-weighted impurity decrease wins; ties go to the lowest column
// then the lowest threshold. Throws ValidationError on an empty or
// unlabelled matrix.
DecisionTree train(const FeatureMatrix& matrix, const Hyperparameters& hp,
                   std::uint64_t seed = 0);

inline Prediction predict(const DecisionTree& tree,
                          std::span<const double> row) {
  return tree.predict(row);
}

inline TreePath extract_path(const DecisionTree& tree,
                             std::span<const double> row) {
  return tree.extract_path(row);
}

// One line per node in pre-order, two spaces of indent per level, the
// "value <= threshold" child first:
//   0: IF gpacumulativecurrent ≤ 37.25 (counts=[107, 333])
//     leaf: counts=[25, 5] → NoGrad4yr (p=0.833)
std::string render_tree_text(const DecisionTree& tree);

// Inverse of render_tree_text. Column indices are resolved against
// `column_names`; hyperparameters are not part of the text and are taken
// from `hp`. Blank lines and lines starting with '#' are skipped.
DecisionTree parse_tree_text(std::string_view text,
                             std::vector<std::string> column_names,
                             Hyperparameters hp = {});

}  // namespace pathwise

#endif  // PATHWISE_TREE_HPP_
