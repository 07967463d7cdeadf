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

#include "pathwise/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "pathwise/error.hpp"
#include "pathwise/metrics.hpp"
#include "pathwise/parallel.hpp"
#include "pathwise/rng.hpp"

namespace pathwise {
namespace {

int criterion_rank(Criterion c) { return static_cast<int>(c); }

// True when `a` should replace the current winner `b`.
bool better(const CVRow& a, const CVRow& b) {
  if (a.mean != b.mean) return a.mean > b.mean;
  if (a.hp.max_depth != b.hp.max_depth) return a.hp.max_depth < b.hp.max_depth;
  if (a.hp.min_samples_leaf != b.hp.min_samples_leaf) {
    return a.hp.min_samples_leaf > b.hp.min_samples_leaf;
  }
  return criterion_rank(a.hp.criterion) < criterion_rank(b.hp.criterion);
}

}  // namespace

void GridSpec::validate() const {
  if (criteria.empty()) throw ValidationError("grid has no criteria");
  if (depth_range.first < 1 || depth_range.size() < 1) {
    throw ValidationError("depth range must be non-empty and start at >= 1");
  }
  if (leaf_range.first < 1 || leaf_range.size() < 1) {
    throw ValidationError("leaf range must be non-empty and start at >= 1");
  }
  if (k_folds < 2) throw ValidationError("k_folds must be >= 2");
}

std::vector<Hyperparameters> GridSpec::combinations() const {
  std::vector<Hyperparameters> out;
  for (Criterion c : criteria) {
    for (int d = depth_range.first; d <= depth_range.last; ++d) {
      for (int l = leaf_range.first; l <= leaf_range.last; ++l) {
        out.push_back({c, d, l});
      }
    }
  }
  return out;
}

void CVResult::write_csv(std::ostream& out) const {
  const std::size_t k = table.empty() ? 0 : table.front().fold_scores.size();
  out << "criterion,max_depth,min_samples_leaf";
  for (std::size_t f = 1; f <= k; ++f) out << ",fold_" << f;
  out << ",mean,std\n";
  char buf[64];
  for (const auto& row : table) {
    out << to_string(row.hp.criterion) << ',' << row.hp.max_depth << ','
        << row.hp.min_samples_leaf;
    for (double s : row.fold_scores) {
      std::snprintf(buf, sizeof(buf), ",%.17g", s);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g\n", row.mean, row.std);
    out << buf;
  }
}

std::vector<std::vector<std::size_t>> kfold_split(
    std::span<const Outcome> labels, int k, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (k < 2) throw ValidationError("k must be >= 2");
  if (static_cast<std::size_t>(k) > n) {
    throw ValidationError("k (" + std::to_string(k) + ") exceeds case count (" +
                          std::to_string(n) + ")");
  }
  std::vector<std::size_t> at_risk, on_time;
  for (std::size_t i = 0; i < n; ++i) {
    (labels[i] == Outcome::kNoGrad4yr ? at_risk : on_time).push_back(i);
  }
  if (at_risk.empty() || on_time.empty()) {
    throw ValidationError("stratified folds need both classes");
  }
  Rng rng(seed);
  rng.shuffle(std::span(at_risk));
  rng.shuffle(std::span(on_time));

  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  std::size_t slot = 0;
  for (const auto* group : {&at_risk, &on_time}) {
    for (std::size_t idx : *group) {
      folds[slot % folds.size()].push_back(idx);
      ++slot;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

HoldoutSplit stratified_holdout(std::span<const Outcome> labels,
                                double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ValidationError("holdout fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> at_risk, on_time;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == Outcome::kNoGrad4yr ? at_risk : on_time).push_back(i);
  }
  Rng rng(seed);
  HoldoutSplit split;
  for (auto* group : {&at_risk, &on_time}) {
    rng.shuffle(std::span(*group));
    const auto n_test = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(group->size())));
    split.test.insert(split.test.end(), group->begin(),
                      group->begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.insert(split.train.end(),
                       group->begin() + static_cast<std::ptrdiff_t>(n_test),
                       group->end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  if (split.train.empty() || split.test.empty()) {
    throw ValidationError("holdout split leaves an empty partition");
  }
  return split;
}

CVResult grid_search(std::span<const Outcome> labels,
                     const FoldMaterializer& materialize,
                     const GridSpec& grid) {
  grid.validate();
  const std::size_t minority = std::min(
      static_cast<std::size_t>(
          std::count(labels.begin(), labels.end(), Outcome::kNoGrad4yr)),
      static_cast<std::size_t>(
          std::count(labels.begin(), labels.end(), Outcome::kGrad4yr)));
  if (minority == 0) throw ValidationError("grid search needs both classes");
  if (static_cast<std::size_t>(grid.k_folds) > minority) {
    throw ValidationError("k_folds exceeds the minority-class count");
  }

  const auto folds = kfold_split(labels, grid.k_folds, grid.seed);
  const std::size_t k = folds.size();
  std::vector<FoldData> data;
  data.reserve(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(train.begin(), train.end());
    data.push_back(materialize(train, folds[f]));
    if (!data.back().held_out.labels() || !data.back().train.labels()) {
      throw ValidationError("fold matrices must carry labels");
    }
  }

  // A depth-d tree is the depth-d truncation of a deeper tree grown with the
  // same criterion and leaf size, so one tree per (criterion, leaf, fold)
  // scores every depth in the range.
  const auto n_crit = grid.criteria.size();
  const auto n_depth = static_cast<std::size_t>(grid.depth_range.size());
  const auto n_leaf = static_cast<std::size_t>(grid.leaf_range.size());
  std::vector<double> scores(n_crit * n_depth * n_leaf * k);
  auto score_index = [&](std::size_t c, std::size_t d, std::size_t l,
                         std::size_t f) {
    return ((c * n_depth + d) * n_leaf + l) * k + f;
  };

  parallel_for(n_crit * n_leaf * k, grid.threads, [&](std::size_t task) {
    const std::size_t f = task % k;
    const std::size_t l = (task / k) % n_leaf;
    const std::size_t c = task / (k * n_leaf);
    const Hyperparameters hp{grid.criteria[c], grid.depth_range.last,
                             grid.leaf_range.first + static_cast<int>(l)};
    const auto tree = train(data[f].train, hp, grid.seed);
    const auto& held = data[f].held_out;
    const auto& truth = *held.labels();
    std::vector<Outcome> predicted(held.rows());
    for (std::size_t d = 0; d < n_depth; ++d) {
      const int cap = grid.depth_range.first + static_cast<int>(d);
      for (std::size_t r = 0; r < held.rows(); ++r) {
        predicted[r] = tree.predict(held.row(r), cap).label;
      }
      scores[score_index(c, d, l, f)] =
          class_report(predicted, truth).weighted_f1;
    }
  });

  CVResult result;
  const auto combos = grid.combinations();
  result.table.reserve(combos.size());
  std::size_t i = 0;
  for (std::size_t c = 0; c < n_crit; ++c) {
    for (std::size_t d = 0; d < n_depth; ++d) {
      for (std::size_t l = 0; l < n_leaf; ++l, ++i) {
        CVRow row;
        row.hp = combos[i];
        for (std::size_t f = 0; f < k; ++f) {
          row.fold_scores.push_back(scores[score_index(c, d, l, f)]);
        }
        double sum = 0.0;
        for (double s : row.fold_scores) sum += s;
        row.mean = sum / static_cast<double>(k);
        double ss = 0.0;
        for (double s : row.fold_scores) ss += (s - row.mean) * (s - row.mean);
        row.std = std::sqrt(ss / static_cast<double>(k));
        result.table.push_back(std::move(row));
      }
    }
  }
  const CVRow* best = &result.table.front();
  for (const auto& row : result.table) {
    if (better(row, *best)) best = &row;
  }
  result.best = best->hp;
  result.best_mean = best->mean;
  return result;
}

CVResult grid_search(const FeatureMatrix& matrix, const GridSpec& grid) {
  if (!matrix.labels()) throw ValidationError("grid search needs labels");
  return grid_search(
      *matrix.labels(),
      [&](std::span<const std::size_t> train,
          std::span<const std::size_t> held_out) {
        return FoldData{matrix.select_rows(train), matrix.select_rows(held_out)};
      },
      grid);
}

CVResult grid_search(std::span<const StudentRecord* const> records,
                     const FeatureSchema& schema, int cohort_year,
                     MissingPolicy policy, const GridSpec& grid) {
  std::vector<Outcome> labels;
  labels.reserve(records.size());
  for (const auto* r : records) {
    if (!r->outcome) throw ValidationError("grid search needs labelled records");
    labels.push_back(*r->outcome);
  }
  return grid_search(
      labels,
      [&](std::span<const std::size_t> train,
          std::span<const std::size_t> held_out) {
        std::vector<const StudentRecord*> train_records, held_records;
        for (auto i : train) train_records.push_back(records[i]);
        for (auto i : held_out) held_records.push_back(records[i]);
        const auto enc = FeatureEncoder::fit(schema, train_records, policy);
        return FoldData{enc.transform(train_records, cohort_year),
                        enc.transform(held_records, cohort_year)};
      },
      grid);
}

}  // namespace pathwise
