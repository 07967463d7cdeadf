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

// Python bindings. Structured values cross the boundary as JSON text and
// are decoded by the pure-Python wrapper in pathwise/__init__.py.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "pathwise/datamodel.hpp"
#include "pathwise/error.hpp"
#include "pathwise/explain.hpp"
#include "pathwise/metrics.hpp"
#include "pathwise/synthetic.hpp"
#include "pathwise/tree.hpp"
#include "pathwise/tuning.hpp"
#include "pathwise/usability.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace pathwise {
namespace {

std::vector<Outcome> outcomes(const std::vector<int>& bits) {
  std::vector<Outcome> out;
  out.reserve(bits.size());
  for (int b : bits) out.push_back(b ? Outcome::kNoGrad4yr : Outcome::kGrad4yr);
  return out;
}

FeatureMatrix matrix(const std::vector<std::vector<double>>& rows,
                     const std::vector<std::string>& columns,
                     const std::vector<int>& labels) {
  std::vector<double> values;
  for (const auto& r : rows) {
    if (r.size() != columns.size()) throw ValidationError("row width does not match columns");
    values.insert(values.end(), r.begin(), r.end());
  }
  return FeatureMatrix(columns, std::move(values), outcomes(labels), 1);
}

json prediction_json(const Prediction& p) {
  return {{"label", to_string(p.label)},
          {"probability", p.probability},
          {"at_risk_score", p.at_risk_score}};
}

json path_json(const TreePath& path) {
  json steps = json::array();
  for (const auto& s : path.steps) {
    steps.push_back({{"node_id", s.node_id},
                     {"feature", s.rule.column_name},
                     {"threshold", s.rule.threshold},
                     {"value", s.value},
                     {"branch", s.branch == Branch::kLeft ? "left" : "right"}});
  }
  return {{"steps", steps},
          {"leaf_id", path.leaf_id},
          {"leaf_counts", {path.leaf_counts.at_risk, path.leaf_counts.grad}},
          {"prediction", prediction_json(path.prediction)}};
}

}  // namespace
}  // namespace pathwise

PYBIND11_MODULE(_pathwise, m) {
  using namespace pathwise;
  m.doc() = "Native core of the pathwise pipeline";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<RuntimeFailure>(m, "RuntimeFailure", PyExc_RuntimeError);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"));

  m.def("standard_schema", [] { return FeatureSchema::standard().to_json().dump(); });

  m.def("generate_panel_csv", [](const std::string& config, const std::string& schema) {
    const auto s = schema.empty() ? FeatureSchema::standard()
                                  : FeatureSchema::from_json(json::parse(schema));
    std::ostringstream csv;
    write_panel(csv, generate_synthetic(SyntheticConfig::from_json(json::parse(config)), s));
    return csv.str();
  }, py::arg("config"), py::arg("schema") = "");

  m.def("f1_from", &f1_from, py::arg("precision"), py::arg("recall"));
  m.def("weighted_f1", [](const std::vector<double>& f1s, const std::vector<std::size_t>& n) {
    return weighted_f1(f1s, n);
  }, py::arg("f1s"), py::arg("supports"));
  m.def("class_report", [](const std::vector<int>& pred, const std::vector<int>& truth, int year) {
    return class_report(outcomes(pred), outcomes(truth), year).to_json().dump();
  }, py::arg("predictions"), py::arg("labels"), py::arg("cohort_year") = 0);
  m.def("roc_auc", [](const std::vector<double>& scores, const std::vector<int>& labels) {
    const auto roc = roc_auc(scores, outcomes(labels));
    std::vector<std::tuple<double, double, double>> pts;
    for (const auto& p : roc.points) pts.emplace_back(p.threshold, p.fpr, p.tpr);
    return py::make_tuple(roc.auc, pts);
  }, py::arg("scores"), py::arg("labels"));

  m.def("train_tree", [](const std::vector<std::vector<double>>& rows,
                         const std::vector<std::string>& columns, const std::vector<int>& labels,
                         const std::string& criterion, int max_depth, int min_samples_leaf,
                         std::uint64_t seed) {
    const Hyperparameters hp{parse_criterion(criterion), max_depth, min_samples_leaf};
    return train(matrix(rows, columns, labels), hp, seed).to_json().dump();
  }, py::arg("rows"), py::arg("columns"), py::arg("labels"), py::arg("criterion") = "gini",
     py::arg("max_depth") = 5, py::arg("min_samples_leaf") = 1, py::arg("seed") = 0);

  m.def("grid_search", [](const std::vector<std::vector<double>>& rows,
                          const std::vector<std::string>& columns, const std::vector<int>& labels,
                          std::pair<int, int> depth, std::pair<int, int> leaf, int folds,
                          std::uint64_t seed, unsigned threads) {
    GridSpec grid;
    grid.depth_range = {depth.first, depth.second};
    grid.leaf_range = {leaf.first, leaf.second};
    grid.k_folds = folds;
    grid.seed = seed;
    grid.threads = threads;
    grid.validate();
    CVResult r;
    {
      const auto mtx = matrix(rows, columns, labels);
      py::gil_scoped_release release;
      r = grid_search(mtx, grid);
    }
    return json{{"best",
                 {{"criterion", to_string(r.best.criterion)},
                  {"max_depth", r.best.max_depth},
                  {"min_samples_leaf", r.best.min_samples_leaf}}},
                {"best_mean", r.best_mean},
                {"combinations", r.table.size()}}
        .dump();
  }, py::arg("rows"), py::arg("columns"), py::arg("labels"), py::arg("depth") = std::pair{1, 29},
     py::arg("leaf") = std::pair{5, 29}, py::arg("folds") = 4, py::arg("seed") = 0,
     py::arg("threads") = 1);

  m.def("tree_predict", [](const std::string& tree, const std::vector<double>& row) {
    return prediction_json(DecisionTree::from_json(json::parse(tree)).predict(row)).dump();
  }, py::arg("tree"), py::arg("row"));
  m.def("tree_path", [](const std::string& tree, const std::vector<double>& row) {
    return path_json(DecisionTree::from_json(json::parse(tree)).extract_path(row)).dump();
  }, py::arg("tree"), py::arg("row"));
  m.def("render_tree", [](const std::string& tree) {
    return render_tree_text(DecisionTree::from_json(json::parse(tree)));
  }, py::arg("tree"));
  m.def("leaf_prediction", [](std::uint32_t at_risk, std::uint32_t grad) {
    return prediction_json(leaf_prediction({at_risk, grad})).dump();
  }, py::arg("at_risk"), py::arg("grad"));

  m.def("render_prompt", [](const std::string& variant, int year, const std::string& tree_text,
                            const std::string& case_data, const std::string& kb) {
    std::optional<KnowledgeBase> k;
    if (!kb.empty()) k = KnowledgeBase::from_json(json::parse(kb));
    return render_prompt(parse_prompt_variant(variant), year, tree_text, case_data,
                         k ? &*k : nullptr);
  }, py::arg("variant"), py::arg("cohort_year"), py::arg("tree_text"), py::arg("case_data"),
     py::arg("kb") = "");
  m.def("parse_prediction", [](const std::string& text) -> py::object {
    const auto p = parse_prediction(text);
    if (!p) return py::none();
    return py::make_tuple(std::string(to_string(p->label)),
                          p->probability ? py::cast(*p->probability) : py::none());
  }, py::arg("response"));

  m.def("fe_regression", [](const std::string& observations, bool rater_effects,
                            bool case_effects, bool year_effects) {
    std::vector<RegressionObs> obs;
    for (const auto& o : json::parse(observations)) {
      obs.push_back({o.at("y").get<double>(), o.at("kb").get<bool>(),
                     o.value("rater", ""), o.value("case_id", ""), o.value("cohort_year", 0),
                     o.value("cluster", "")});
    }
    RegressionOptions opt;
    opt.rater_effects = rater_effects;
    opt.case_effects = case_effects;
    opt.year_effects = year_effects;
    return fe_regression(obs, opt).to_json().dump();
  }, py::arg("observations"), py::arg("rater_effects") = true, py::arg("case_effects") = true,
     py::arg("year_effects") = true);
}
