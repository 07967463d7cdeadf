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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "doctest.h"
#include "pathwise/datamodel.hpp"
#include "pathwise/error.hpp"
#include "pathwise/synthetic.hpp"
#include "pathwise/tree.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace pathwise {
namespace {

DecisionTree single_leaf(ClassCounts counts, std::size_t cols = 1) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < cols; ++c) names.push_back("x" + std::to_string(c));
  TreeNode root;
  root.counts = counts;
  return DecisionTree({root}, {}, names);
}

// Checks every structural invariant of a trained tree against its data.
void check_invariants(const DecisionTree& tree, const FeatureMatrix& m) {
  const auto& hp = tree.hyperparameters();
  std::map<int, ClassCounts> routed;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto path = tree.extract_path(m.row(r));
    auto& c = routed[path.leaf_id];
    ((*m.labels())[r] == Outcome::kNoGrad4yr ? c.at_risk : c.grad) += 1;
  }
  ClassCounts total;
  for (const auto& node : tree.nodes()) {
    if (node.is_leaf()) {
      CHECK(node.depth <= hp.max_depth);
      CHECK(node.counts.total() >= static_cast<unsigned>(hp.min_samples_leaf));
      CHECK(routed[node.id] == node.counts);
      total = total + node.counts;
    } else {
      const auto& l = tree.node(node.left);
      const auto& r = tree.node(node.right);
      CHECK(l.counts + r.counts == node.counts);
      const double n = node.counts.total();
      const double gain = impurity(node.counts, hp.criterion) -
                          l.counts.total() / n * impurity(l.counts, hp.criterion) -
                          r.counts.total() / n * impurity(r.counts, hp.criterion);
      CHECK(gain > 0.0);
    }
  }
  CHECK(total == tree.root().counts);
  CHECK(tree.root().counts.total() == m.rows());
}

TEST_CASE("impurity values") {
  CHECK(impurity({30, 0}, Criterion::kGini) == 0.0);
  CHECK(impurity({30, 0}, Criterion::kEntropy) == 0.0);
  CHECK(impurity({0, 7}, Criterion::kLogLoss) == 0.0);
  CHECK(impurity({25, 5}, Criterion::kGini) ==
        doctest::Approx(1.0 - (25.0 / 30) * (25.0 / 30) - (5.0 / 30) * (5.0 / 30))
            .epsilon(1e-12));
  CHECK(std::abs(impurity({25, 5}, Criterion::kGini) - 0.277777777778) < 1e-9);
  CHECK(impurity({15, 15}, Criterion::kEntropy) == doctest::Approx(1.0));
  CHECK(impurity({15, 15}, Criterion::kLogLoss) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(impurity({0, 0}, Criterion::kGini), ValidationError);
}

TEST_CASE("entropy and log_loss differ by a constant factor") {
  for (unsigned a = 0; a <= 20; ++a) {
    for (unsigned g = 0; g <= 20; ++g) {
      if (a + g == 0) continue;
      CHECK(impurity({a, g}, Criterion::kLogLoss) ==
            doctest::Approx(impurity({a, g}, Criterion::kEntropy) * std::log(2.0)));
    }
  }
}

TEST_CASE("leaf predictions") {
  const auto p = single_leaf({25, 5}).predict(std::vector<double>{0.0});
  CHECK(p.label == Outcome::kNoGrad4yr);
  CHECK(p.probability == doctest::Approx(25.0 / 30.0));
  const auto grad = single_leaf({0, 100}).predict(std::vector<double>{0.0});
  CHECK(grad.label == Outcome::kGrad4yr);
  CHECK(grad.probability == 1.0);
  const auto tie = single_leaf({10, 10}).predict(std::vector<double>{0.0});
  CHECK(tie.label == Outcome::kNoGrad4yr);
  CHECK(tie.probability == 0.5);
  CHECK_THROWS_AS(single_leaf({1, 1}, 2).predict(std::vector<double>{0.0}),
                  ValidationError);
}

TEST_CASE("training stops at a pure or constrained root") {
  FeatureMatrix pure({"x"}, {1, 2, 3}, std::vector<Outcome>(3, Outcome::kGrad4yr), 1);
  const auto t = train(pure, {Criterion::kGini, 5, 1});
  CHECK(t.nodes().size() == 1);
  CHECK(t.predict(std::vector<double>{2}).probability == 1.0);
  CHECK(t.predict(std::vector<double>{2}).label == Outcome::kGrad4yr);

  Rng rng(4);
  const auto m = testing::random_matrix(rng, 10, 2);
  CHECK(train(m, {Criterion::kGini, 5, 6}).nodes().size() == 1);

  CHECK_THROWS_AS(train(FeatureMatrix({"x"}, {}, std::vector<Outcome>{}, 1), {}),
                  ValidationError);
  CHECK_THROWS_AS(train(FeatureMatrix({"x"}, {1.0}, std::nullopt, 1), {}),
                  ValidationError);
}

TEST_CASE("depth-1 tree recovers a planted single rule") {
  const auto schema = FeatureSchema::standard();
  SyntheticConfig cfg = testing::planted_config(800, 0.0, 12);
  cfg.planted_rules = {{Condition{"grantaid", Comparison::kLessEqual, 8000.0}}};
  const auto panel = generate_synthetic(cfg, schema);
  const auto m = build_matrix(panel, 1);
  const auto tree = train(m, {Criterion::kGini, 1, 1});
  REQUIRE_FALSE(tree.root().is_leaf());
  CHECK(tree.root().rule->column_name == "grantaid");
  std::size_t correct = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (tree.predict(m.row(r)).label == (*m.labels())[r]) ++correct;
  }
  CHECK(correct == m.rows());
}

TEST_CASE("depth-1 training matches exhaustive split enumeration") {
  Rng rng(2026);
  int mismatches = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t rows = 1 + rng.below(8);
    const std::size_t cols = 1 + rng.below(3);
    const auto m = testing::random_matrix(rng, rows, cols, 4);
    const int min_leaf = 1 + static_cast<int>(rng.below(3));
    const auto tree = train(m, {Criterion::kGini, 1, min_leaf});
    const auto oracle = oracle::best_split(m, min_leaf);
    if (oracle.split != !tree.root().is_leaf()) {
      ++mismatches;
      continue;
    }
    if (oracle.split && (tree.root().rule->column_index != oracle.column ||
                         tree.root().rule->threshold != oracle.threshold)) {
      ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("trained trees satisfy conservation and positive gains") {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const auto m = testing::random_matrix(rng, 20 + rng.below(100), 1 + rng.below(5), 6);
    const Hyperparameters hp{static_cast<Criterion>(rng.below(3)),
                             1 + static_cast<int>(rng.below(8)),
                             1 + static_cast<int>(rng.below(6))};
    const auto tree = train(m, hp);
    check_invariants(tree, m);
    CHECK(tree.leaf_count() == (tree.nodes().size() + 1) / 2);
  }
}

TEST_CASE("predict and extract_path agree") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = testing::random_matrix(rng, 30 + rng.below(50), 1 + rng.below(4), 7);
    const auto tree = train(m, {Criterion::kEntropy, 1 + static_cast<int>(rng.below(6)), 1});
    for (int i = 0; i < 20; ++i) {
      std::vector<double> row(m.cols());
      for (auto& v : row) v = rng.uniform() * 8 - 0.5;
      const auto path = tree.extract_path(row);
      CHECK(path.prediction == tree.predict(row));
      int id = 0;
      for (const auto& step : path.steps) {
        CHECK(step.node_id == id);
        const auto& node = tree.node(id);
        CHECK(step.value == row[node.rule->column_index]);
        const bool left = step.value <= step.rule.threshold;
        CHECK((step.branch == Branch::kLeft) == left);
        id = left ? node.left : node.right;
      }
      CHECK(id == path.leaf_id);
    }
  }
  const auto leaf = single_leaf({3, 4});
  const auto path = leaf.extract_path(std::vector<double>{1.0});
  CHECK(path.steps.empty());
  CHECK(path.prediction.label == Outcome::kGrad4yr);
}

TEST_CASE("four-split traversal yields four consistent steps") {
  // x0 alternates so that each level peels one value off the staircase.
  std::vector<double> values;
  std::vector<Outcome> labels;
  for (int v = 0; v < 5; ++v) {
    for (int rep = 0; rep < 4; ++rep) {
      values.push_back(v);
      labels.push_back(v % 2 == 0 ? Outcome::kGrad4yr : Outcome::kNoGrad4yr);
    }
  }
  FeatureMatrix m({"x0"}, values, labels, 1);
  const auto tree = train(m, {Criterion::kGini, 10, 1});
  bool found = false;
  for (double v = 0; v < 5; ++v) {
    const std::vector<double> row{v};
    const auto path = tree.extract_path(row);
    if (path.steps.size() != 4) continue;
    found = true;
    for (const auto& s : path.steps) {
      CHECK((s.branch == Branch::kLeft) == (s.value <= s.rule.threshold));
    }
  }
  CHECK(found);
}

TEST_CASE("truncated prediction equals training at the smaller depth") {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const auto m = testing::random_matrix(rng, 60 + rng.below(60), 1 + rng.below(4), 9);
    const auto crit = static_cast<Criterion>(rng.below(3));
    const int leaf = 1 + static_cast<int>(rng.below(5));
    const auto deep = train(m, {crit, 12, leaf});
    for (int d = 1; d <= 6; ++d) {
      const auto shallow = train(m, {crit, d, leaf});
      for (std::size_t r = 0; r < m.rows(); ++r) {
        CHECK(deep.predict(m.row(r), d) == shallow.predict(m.row(r)));
      }
    }
  }
}

TEST_CASE("tree text rendering") {
  CHECK(render_tree_text(single_leaf({1, 3})) ==
        "leaf: counts=[1, 3] → Grad4yr (p=0.750)\n");

  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = testing::random_matrix(rng, 40 + rng.below(40), 1 + rng.below(4), 8);
    const auto tree = train(m, {Criterion::kGini, 1 + static_cast<int>(rng.below(6)), 2});
    const auto text = render_tree_text(tree);
    const auto parsed = parse_tree_text(text, tree.column_names(), tree.hyperparameters());
    CHECK(parsed.structurally_equal(tree));
    CHECK(render_tree_text(parsed) == text);

    std::size_t leaf_lines = 0, split_lines = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
      const auto eol = text.find('\n', pos);
      const auto line = text.substr(pos, eol - pos);
      (line.find("leaf: ") != std::string::npos ? leaf_lines : split_lines) += 1;
      pos = eol + 1;
    }
    CHECK(split_lines + 1 == leaf_lines);
  }

  CHECK_THROWS_AS(parse_tree_text("0: IF x0 ≤ 1 (counts=[1, 1])\n", {"x0"}),
                  ValidationError);
  CHECK_THROWS_AS(parse_tree_text("leaf: counts=[1, 3] → NoGrad4yr (p=0.750)\n", {"x0"}),
                  ValidationError);
}

TEST_CASE("rendered text names columns with spaces") {
  std::vector<double> values;
  std::vector<Outcome> labels;
  for (int i = 0; i < 10; ++i) {
    values.push_back(i < 5 ? 0.0 : 1.0);
    labels.push_back(i < 5 ? Outcome::kGrad4yr : Outcome::kNoGrad4yr);
  }
  FeatureMatrix m({"enrollment=Full Time"}, values, labels, 1);
  const auto tree = train(m, {Criterion::kGini, 2, 1});
  const auto text = render_tree_text(tree);
  CHECK(text.starts_with("0: IF enrollment=Full Time ≤ 0.5 (counts=[5, 5])\n"));
  CHECK(parse_tree_text(text, {"enrollment=Full Time"}, tree.hyperparameters())
            .structurally_equal(tree));
}

TEST_CASE("training is deterministic and JSON round-trips") {
  const auto schema = FeatureSchema::standard();
  const auto panel = generate_synthetic(testing::planted_config(400, 0.1, 8), schema);
  const auto m = build_matrix(panel, 1);
  const Hyperparameters hp{Criterion::kLogLoss, 6, 5};
  const auto a = train(m, hp, 3);
  const auto b = train(m, hp, 3);
  CHECK(a.to_json().dump() == b.to_json().dump());
  const auto back = DecisionTree::from_json(nlohmann::json::parse(a.to_json().dump()));
  CHECK(back.structurally_equal(a));
  CHECK(back.fingerprint() == a.fingerprint());
  check_invariants(a, m);
}

TEST_CASE("entropy and log_loss grow the same tree") {
  const auto schema = FeatureSchema::standard();
  const auto panel = generate_synthetic(testing::planted_config(500, 0.1, 21), schema);
  const auto m = build_matrix(panel, 1);
  const auto e = train(m, {Criterion::kEntropy, 6, 5});
  const auto l = train(m, {Criterion::kLogLoss, 6, 5});
  CHECK(render_tree_text(e) == render_tree_text(l));
}

TEST_CASE("tree constructor rejects broken topology") {
  TreeNode root{0, -1, 0, {2, 2}, SplitRule{0, "x0", 0.5}, 1, 2};
  TreeNode left{1, 0, 1, {2, 0}, std::nullopt, -1, -1};
  TreeNode right{2, 0, 1, {0, 1}, std::nullopt, -1, -1};
  CHECK_THROWS_AS(DecisionTree({root, left, right}, {}, {"x0"}), ValidationError);
  right.counts = {0, 2};
  CHECK_NOTHROW(DecisionTree({root, left, right}, {}, {"x0"}));
}

}  // namespace
}  // namespace pathwise
