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

#ifndef PATHWISE_TUNING_HPP_
#define PATHWISE_TUNING_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "pathwise/datamodel.hpp"
#include "pathwise/tree.hpp"

namespace pathwise {

struct IntRange {
  int first = 1;
  int last = 1;

  int size() const { return last - first + 1; }
};

// Defaults span the full search space: three criteria, depth 1..29,
// min_samples_leaf 5..29 and four folds.
struct GridSpec {
  std::vector<Criterion> criteria = {Criterion::kGini, Criterion::kEntropy,
                                     Criterion::kLogLoss};
  IntRange depth_range{1, 29};
  IntRange leaf_range{5, 29};
  int k_folds = 4;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // grid cells evaluated concurrently

  void validate() const;
  // Cartesian product, criterion outermost and min_samples_leaf innermost.
  std::vector<Hyperparameters> combinations() const;
};

struct CVRow {
  Hyperparameters hp;
  std::vector<double> fold_scores;  // weighted F1 per held-out fold
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over folds
};

struct CVResult {
  std::vector<CVRow> table;  // in GridSpec::combinations() order
  Hyperparameters best;
  double best_mean = 0.0;

  // Columns criterion,max_depth,min_samples_leaf,fold_1..fold_k,mean,std.
  void write_csv(std::ostream& out) const;
};

// Stratified folds over indices 0..labels.size()-1, each sorted ascending.
// Throws ValidationError when k < 2, k > n or only one class is present.
std::vector<std::vector<std::size_t>> kfold_split(
    std::span<const Outcome> labels, int k, std::uint64_t seed);

struct HoldoutSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Stratified train/test split with round(fraction * n_class) test cases
// drawn from each class.
HoldoutSplit stratified_holdout(std::span<const Outcome> labels,
                                double fraction, std::uint64_t seed);

struct FoldData {
  FeatureMatrix train;
  FeatureMatrix held_out;
};

// Builds the matrices for one fold from row indices into the source data.
using FoldMaterializer = std::function<FoldData(
    std::span<const std::size_t> train, std::span<const std::size_t> held_out)>;

CVResult grid_search(std::span<const Outcome> labels,
                     const FoldMaterializer& materialize, const GridSpec& grid);

// Folds are row subsets of an already-encoded matrix.
CVResult grid_search(const FeatureMatrix& matrix, const GridSpec& grid);

// Percentile statistics are refitted on each training fold and applied to
// its held-out fold.
CVResult grid_search(std::span<const StudentRecord* const> records,
                     const FeatureSchema& schema, int cohort_year,
                     MissingPolicy policy, const GridSpec& grid);

}  // namespace pathwise

#endif  // PATHWISE_TUNING_HPP_
