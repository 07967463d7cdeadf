# Copyright 2026 The Pathwise Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Interpretable graduation-risk pipeline.

Thin wrappers over the native ``_pathwise`` module: structured results are
decoded from JSON into plain dicts.
"""

import json

from . import _pathwise
from ._pathwise import RuntimeFailure, ValidationError, f1_from

__all__ = [
    "RuntimeFailure",
    "ValidationError",
    "class_report",
    "f1_from",
    "fe_regression",
    "generate_panel_csv",
    "grid_search",
    "leaf_prediction",
    "parse_prediction",
    "render_prompt",
    "render_tree",
    "roc_auc",
    "run_cli",
    "standard_schema",
    "train_tree",
    "tree_path",
    "tree_predict",
    "weighted_f1",
]


def _bits(labels):
    return [1 if label in (1, True, "NoGrad4yr") else 0 for label in labels]


def _text(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def run_cli(*args):
    """Run a ``pathwise`` subcommand; returns (exit_code, stdout, stderr)."""
    return _pathwise.run_cli([str(a) for a in args])


def standard_schema():
    return json.loads(_pathwise.standard_schema())


def generate_panel_csv(config, schema=None):
    return _pathwise.generate_panel_csv(_text(config), "" if schema is None else _text(schema))


def weighted_f1(f1s, supports):
    return _pathwise.weighted_f1(list(f1s), list(supports))


def class_report(predictions, labels, cohort_year=0):
    """Labels are 1/True/"NoGrad4yr" for at risk, anything else otherwise."""
    return json.loads(_pathwise.class_report(_bits(predictions), _bits(labels), cohort_year))


def roc_auc(scores, labels):
    auc, points = _pathwise.roc_auc(list(scores), _bits(labels))
    return auc, points


def train_tree(rows, columns, labels, criterion="gini", max_depth=5, min_samples_leaf=1, seed=0):
    return json.loads(
        _pathwise.train_tree(rows, list(columns), _bits(labels), criterion, max_depth,
                             min_samples_leaf, seed))


def grid_search(rows, columns, labels, depth=(1, 29), leaf=(5, 29), folds=4, seed=0, threads=1):
    return json.loads(
        _pathwise.grid_search(rows, list(columns), _bits(labels), tuple(depth), tuple(leaf),
                              folds, seed, threads))


def tree_predict(tree, row):
    return json.loads(_pathwise.tree_predict(_text(tree), list(row)))


def tree_path(tree, row):
    return json.loads(_pathwise.tree_path(_text(tree), list(row)))


def render_tree(tree):
    return _pathwise.render_tree(_text(tree))


def leaf_prediction(at_risk, grad):
    return json.loads(_pathwise.leaf_prediction(at_risk, grad))


def render_prompt(variant, cohort_year, tree_text, case_data, kb=None):
    return _pathwise.render_prompt(variant, cohort_year, tree_text, case_data,
                                   "" if kb is None else _text(kb))


def parse_prediction(response):
    """Returns (label, probability or None), or None when unparseable."""
    return _pathwise.parse_prediction(response)


def fe_regression(observations, rater_effects=True, case_effects=True, year_effects=True):
    return json.loads(
        _pathwise.fe_regression(json.dumps(list(observations)), rater_effects, case_effects,
                                year_effects))
