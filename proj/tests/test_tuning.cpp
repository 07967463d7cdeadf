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
#include <set>
#include <sstream>

#include "doctest.h"
#include "pathwise/error.hpp"
#include "pathwise/metrics.hpp"
#include "pathwise/synthetic.hpp"
#include "pathwise/tuning.hpp"
#include "test_support.hpp"

namespace pathwise {
namespace {

std::vector<Outcome> random_labels(Rng& rng, std::size_t n, double p) {
  std::vector<Outcome> y(n);
  for (auto& l : y) l = rng.bernoulli(p) ? Outcome::kNoGrad4yr : Outcome::kGrad4yr;
  return y;
}

std::size_t count_risk(const std::vector<Outcome>& y, std::span<const std::size_t> idx) {
  std::size_t n = 0;
  for (auto i : idx) n += y[i] == Outcome::kNoGrad4yr;
  return n;
}

std::string csv_of(const CVResult& r) {
  std::ostringstream out;
  r.write_csv(out);
  return out.str();
}

TEST_CASE("kfold on a balanced set of eight") {
  std::vector<Outcome> y;
  for (int i = 0; i < 4; ++i) {
    y.push_back(Outcome::kNoGrad4yr);
    y.push_back(Outcome::kGrad4yr);
  }
  const auto folds = kfold_split(y, 4, 1);
  REQUIRE(folds.size() == 4);
  for (const auto& f : folds) {
    CHECK(f.size() == 2);
    CHECK(count_risk(y, f) == 1);
  }
  CHECK(kfold_split(y, 4, 1) == folds);
}

TEST_CASE("kfold partitions and stratifies") {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 4 + rng.below(200);
    auto y = random_labels(rng, n, 0.1 + 0.8 * rng.uniform());
    y[0] = Outcome::kNoGrad4yr;
    y[1] = Outcome::kGrad4yr;
    const int k = 2 + static_cast<int>(rng.below(std::min<std::size_t>(n - 1, 9)));
    const auto folds = kfold_split(y, k, trial);
    REQUIRE(folds.size() == static_cast<std::size_t>(k));
    std::vector<int> seen(n, 0);
    for (const auto& f : folds) {
      for (auto i : f) seen[i] += 1;
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    const double ratio = static_cast<double>(count_risk(y, std::vector<std::size_t>(
                             [&] { std::vector<std::size_t> a(n); for (std::size_t i = 0; i < n; ++i) a[i] = i; return a; }()))) / n;
    for (const auto& f : folds) {
      const double expected = ratio * static_cast<double>(f.size());
      CHECK(std::abs(static_cast<double>(count_risk(y, f)) - expected) <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("kfold rejects impossible requests") {
  const std::vector<Outcome> one_class(6, Outcome::kGrad4yr);
  CHECK_THROWS_AS(kfold_split(one_class, 2, 0), ValidationError);
  const std::vector<Outcome> few{Outcome::kGrad4yr, Outcome::kNoGrad4yr};
  CHECK_THROWS_AS(kfold_split(few, 3, 0), ValidationError);
  CHECK_THROWS_AS(kfold_split(few, 1, 0), ValidationError);
}

TEST_CASE("stratified holdout") {
  Rng rng(2);
  const auto y = random_labels(rng, 500, 0.25);
  const auto split = stratified_holdout(y, 0.2, 9);
  CHECK(split.train.size() + split.test.size() == 500);
  CHECK(split.test.size() == doctest::Approx(100).epsilon(0.02));
  std::set<std::size_t> all(split.train.begin(), split.train.end());
  all.insert(split.test.begin(), split.test.end());
  CHECK(all.size() == 500);
  const double share = static_cast<double>(count_risk(y, split.test)) / split.test.size();
  const double global = static_cast<double>(std::count(y.begin(), y.end(), Outcome::kNoGrad4yr)) / 500;
  CHECK(std::abs(share - global) < 0.02);
  CHECK(stratified_holdout(y, 0.2, 9).test == split.test);
}

TEST_CASE("default grid has the full Cartesian product") {
  const GridSpec grid;
  const auto combos = grid.combinations();
  CHECK(combos.size() == 3u * 29u * 25u);
  CHECK(combos.size() == 2175);
  CHECK(combos.front() == Hyperparameters{Criterion::kGini, 1, 5});
  CHECK(combos.back() == Hyperparameters{Criterion::kLogLoss, 29, 29});
  std::set<std::tuple<int, int, int>> unique;
  for (const auto& hp : combos) {
    unique.insert({static_cast<int>(hp.criterion), hp.max_depth, hp.min_samples_leaf});
  }
  CHECK(unique.size() == 2175);

  GridSpec bad;
  bad.depth_range = {3, 2};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = GridSpec{};
  bad.criteria.clear();
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = GridSpec{};
  bad.k_folds = 1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("single combination grid") {
  Rng rng(6);
  const auto m = testing::random_matrix(rng, 80, 3);
  GridSpec grid;
  grid.criteria = {Criterion::kEntropy};
  grid.depth_range = {3, 3};
  grid.leaf_range = {7, 7};
  const auto r = grid_search(m, grid);
  REQUIRE(r.table.size() == 1);
  CHECK(r.best == Hyperparameters{Criterion::kEntropy, 3, 7});
  const auto& row = r.table[0];
  CHECK(row.fold_scores.size() == 4);
  double mean = 0;
  for (double s : row.fold_scores) mean += s;
  mean /= 4;
  CHECK(row.mean == doctest::Approx(mean).epsilon(1e-12));
  double var = 0;
  for (double s : row.fold_scores) var += (s - mean) * (s - mean);
  CHECK(row.std == doctest::Approx(std::sqrt(var / 4)).epsilon(1e-12));
  CHECK(r.best_mean == row.mean);
}

TEST_CASE("grid scores match direct per-fold training") {
  Rng rng(13);
  const auto m = testing::random_matrix(rng, 120, 3, 7);
  GridSpec grid;
  grid.depth_range = {1, 5};
  grid.leaf_range = {2, 4};
  grid.k_folds = 3;
  grid.seed = 77;
  const auto result = grid_search(m, grid);
  const auto folds = kfold_split(*m.labels(), 3, 77);
  const auto combos = grid.combinations();
  REQUIRE(result.table.size() == combos.size());
  for (std::size_t c = 0; c < combos.size(); ++c) {
    CHECK(result.table[c].hp == combos[c]);
    for (int f = 0; f < 3; ++f) {
      std::vector<std::size_t> train_idx;
      for (int g = 0; g < 3; ++g) {
        if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
      }
      std::sort(train_idx.begin(), train_idx.end());
      std::vector<std::size_t> held = folds[f];
      std::sort(held.begin(), held.end());
      const auto tr = m.select_rows(train_idx);
      const auto te = m.select_rows(held);
      const auto tree = train(tr, combos[c], 77);
      std::vector<Outcome> preds;
      for (std::size_t r = 0; r < te.rows(); ++r) preds.push_back(tree.predict(te.row(r)).label);
      const double score = class_report(preds, *te.labels()).weighted_f1;
      CHECK(result.table[c].fold_scores[f] == doctest::Approx(score).epsilon(1e-12));
    }
  }
  for (const auto& row : result.table) CHECK(result.best_mean >= row.mean);
}

TEST_CASE("tie-break prefers the simplest model") {
  // Perfectly separable on one column: every depth and leaf scores 1.0.
  std::vector<double> values;
  std::vector<Outcome> labels;
  for (int i = 0; i < 40; ++i) {
    values.push_back(i < 10 ? i : 100 + i);
    labels.push_back(i < 10 ? Outcome::kNoGrad4yr : Outcome::kGrad4yr);
  }
  FeatureMatrix m({"x"}, values, labels, 1);
  GridSpec grid;
  grid.depth_range = {1, 4};
  grid.leaf_range = {1, 3};
  const auto r = grid_search(m, grid);
  CHECK(r.best_mean == 1.0);
  CHECK(r.best == Hyperparameters{Criterion::kGini, 1, 3});
}

TEST_CASE("wider grids never lower the best mean") {
  Rng rng(21);
  const auto m = testing::random_matrix(rng, 150, 4, 6);
  GridSpec narrow;
  narrow.criteria = {Criterion::kGini};
  narrow.depth_range = {1, 3};
  narrow.leaf_range = {5, 8};
  GridSpec wide = narrow;
  wide.criteria = {Criterion::kGini, Criterion::kEntropy};
  wide.depth_range = {1, 6};
  CHECK(grid_search(m, wide).best_mean >= grid_search(m, narrow).best_mean);
}

TEST_CASE("grid search is deterministic across thread counts") {
  Rng rng(4);
  const auto m = testing::random_matrix(rng, 200, 3, 9);
  GridSpec grid;
  grid.depth_range = {1, 8};
  grid.leaf_range = {5, 9};
  grid.seed = 5;
  const auto a = csv_of(grid_search(m, grid));
  CHECK(a == csv_of(grid_search(m, grid)));
  grid.threads = 3;
  CHECK(a == csv_of(grid_search(m, grid)));
  CHECK(a.starts_with("criterion,max_depth,min_samples_leaf,fold_1,fold_2,fold_3,fold_4,mean,std\n"));
}

TEST_CASE("k larger than the minority class is rejected") {
  std::vector<Outcome> labels(20, Outcome::kGrad4yr);
  labels[0] = labels[1] = Outcome::kNoGrad4yr;
  FeatureMatrix m({"x"}, std::vector<double>(20, 1.0), labels, 1);
  GridSpec grid;
  grid.depth_range = {1, 1};
  grid.leaf_range = {1, 1};
  CHECK_THROWS_AS(grid_search(m, grid), ValidationError);
}

TEST_CASE("per-fold encoding never sees held-out rows") {
  const auto schema = FeatureSchema::standard();
  const auto panel = generate_synthetic(testing::planted_config(160, 0.1, 31), schema);
  const auto records = panel.year(1);
  std::vector<Outcome> labels;
  for (const auto* r : records) labels.push_back(*r->outcome);
  GridSpec grid;
  grid.criteria = {Criterion::kGini};
  grid.depth_range = {2, 3};
  grid.leaf_range = {5, 5};
  grid.seed = 3;
  const auto result = grid_search(records, schema, 1, MissingPolicy::kMedianIndicator, grid);

  const auto folds = kfold_split(labels, 4, 3);
  for (int f = 0; f < 4; ++f) {
    std::vector<const StudentRecord*> tr, te;
    for (int g = 0; g < 4; ++g) {
      std::vector<std::size_t> idx = folds[g];
      std::sort(idx.begin(), idx.end());
      for (auto i : idx) (g == f ? te : tr).push_back(records[i]);
    }
    // Oracle: encoder fitted on the training fold only.
    const auto enc = FeatureEncoder::fit(schema, tr, MissingPolicy::kMedianIndicator);
    const auto train_m = enc.transform(tr, 1);
    const auto test_m = enc.transform(te, 1);
    for (std::size_t c = 0; c < result.table.size(); ++c) {
      const auto tree = train(train_m, result.table[c].hp, 3);
      std::vector<Outcome> preds;
      for (std::size_t r = 0; r < test_m.rows(); ++r) preds.push_back(tree.predict(test_m.row(r)).label);
      CHECK(result.table[c].fold_scores[f] ==
            doctest::Approx(class_report(preds, *test_m.labels()).weighted_f1).epsilon(1e-12));
    }
  }

  // Changing only the held-out rows' raw values cannot change the
  // training-fold encoding.
  std::vector<const StudentRecord*> tr;
  std::vector<std::size_t> held(folds[0].begin(), folds[0].end());
  std::set<std::size_t> held_set(held.begin(), held.end());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!held_set.count(i)) tr.push_back(records[i]);
  }
  const auto base = FeatureEncoder::fit(schema, tr, MissingPolicy::kMedianIndicator).transform(tr, 1);
  std::vector<StudentRecord> altered;
  for (auto i : held) {
    StudentRecord r = *records[i];
    r.values[*schema.index_of("grantaid")] = 1e9;
    altered.push_back(r);
  }
  std::vector<const StudentRecord*> mixed = tr;
  for (const auto& r : altered) mixed.push_back(&r);
  const auto refit = FeatureEncoder::fit(schema, tr, MissingPolicy::kMedianIndicator).transform(tr, 1);
  CHECK(refit == base);
}

TEST_CASE("planted depth-2 rule is recovered by the tuned tree") {
  const auto schema = FeatureSchema::standard();
  const auto panel = generate_synthetic(testing::planted_config(1000, 0.0, 44), schema);
  const auto records = panel.year(1);
  std::vector<Outcome> labels;
  for (const auto* r : records) labels.push_back(*r->outcome);
  const auto split = stratified_holdout(labels, 0.2, 44);
  std::vector<const StudentRecord*> tr, te;
  for (auto i : split.train) tr.push_back(records[i]);
  for (auto i : split.test) te.push_back(records[i]);

  GridSpec grid;
  grid.depth_range = {1, 6};
  grid.leaf_range = {5, 10};
  grid.seed = 44;
  const auto result = grid_search(tr, schema, 1, MissingPolicy::kMedianIndicator, grid);
  const auto enc = FeatureEncoder::fit(schema, tr, MissingPolicy::kMedianIndicator);
  const auto tree = train(enc.transform(tr, 1), result.best, 44);
  const auto test_m = enc.transform(te, 1);
  std::vector<Outcome> preds;
  for (std::size_t r = 0; r < test_m.rows(); ++r) preds.push_back(tree.predict(test_m.row(r)).label);
  CHECK(class_report(preds, *test_m.labels()).weighted_f1 >= 0.98);
  CHECK(tree.root().rule->column_name == "gpacumulativecurrent");
}

TEST_CASE("default grid runs on a 500-case matrix") {
  const auto schema = FeatureSchema::standard();
  const auto panel = generate_synthetic(testing::planted_config(500, 0.1, 1), schema);
  const auto m = build_matrix(panel, 1);
  const auto r = grid_search(m, GridSpec{});
  CHECK(r.table.size() == 2175);
  for (const auto& row : r.table) CHECK(r.best_mean >= row.mean);
}

}  // namespace
}  // namespace pathwise
