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

import json
import os

import pytest

import pathwise

DATA = os.environ.get("PATHWISE_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "data"))


def test_f1_arithmetic():
    assert round(pathwise.f1_from(0.78, 0.70), 2) == 0.74
    assert round(pathwise.weighted_f1([0.74, 0.92], [107, 333]), 2) == 0.88


def test_leaf_probability():
    p = pathwise.leaf_prediction(25, 5)
    assert p["label"] == "NoGrad4yr"
    assert round(p["probability"], 3) == 0.833


def test_train_predict_and_path():
    rows = [[float(i), float(i % 3)] for i in range(40)]
    labels = [1 if i < 12 else 0 for i in range(40)]
    tree = pathwise.train_tree(rows, ["gpa", "cost"], labels, max_depth=2, min_samples_leaf=2)
    assert tree["nodes"][0]["rule"]["column_name"] == "gpa"
    pred = pathwise.tree_predict(tree, [3.0, 0.0])
    path = pathwise.tree_path(tree, [3.0, 0.0])
    assert pred == path["prediction"]
    assert pred["label"] == "NoGrad4yr"
    assert "IF gpa" in pathwise.render_tree(tree)
    best = pathwise.grid_search(rows, ["gpa", "cost"], labels, depth=(1, 3), leaf=(5, 6))
    assert best["combinations"] == 3 * 3 * 2


def test_metrics():
    report = pathwise.class_report([1, 1, 0, 0], [1, 0, 0, 0], cohort_year=1)
    assert report["at_risk"]["precision"] == 0.5
    auc, points = pathwise.roc_auc([0.9, 0.8, 0.2, 0.1], [1, 0, 1, 0])
    assert auc == 0.75
    assert points[0][1:] == (0.0, 0.0)


def test_prompt_and_parsing():
    kb = {"best_practices": [{"title": "Tutoring", "text": "Refer early."}]}
    text = pathwise.render_prompt("with_kb", 2, "leaf: counts=[1, 3] → Grad4yr (p=0.750)",
                                  "gpa: 40.0", kb)
    assert "Refer early." in text
    assert "Refer early." not in pathwise.render_prompt("basic", 2, "t", "c")
    assert pathwise.parse_prediction("- **Prediction:** NoGrad4yr (83%)") == ("NoGrad4yr", 0.83)
    assert pathwise.parse_prediction("no verdict") is None
    with pytest.raises(pathwise.ValidationError):
        pathwise.render_prompt("with_kb", 2, "t", "c")


def test_regression_recovers_planted_effect():
    obs = []
    for r, shift in enumerate([0.0, -0.4, 0.3]):
        for c in range(12):
            for kb in (0, 1):
                obs.append({"y": 3 + 0.93 * kb + shift + 0.1 * c, "kb": bool(kb),
                            "rater": f"cm{r}", "case_id": f"S{c}", "cohort_year": 1 + c % 4})
    res = pathwise.fe_regression(obs)
    assert abs(res["beta"] - 0.93) < 1e-9
    assert res["clusters"] == 3


def test_cli_pipeline(tmp_path):
    log = str(tmp_path / "log.jsonl")
    config = json.load(open(os.path.join(DATA, "synthetic_config.json")))
    config["n_cases"] = 200
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(config))
    code, out, err = pathwise.run_cli("--run-log", log, "gen-data", "--config", cfg,
                                      "--out", tmp_path / "panel.csv")
    assert code == 0, err
    code, out, err = pathwise.run_cli("--run-log", log, "train", "--data", tmp_path / "panel.csv",
                                      "--depth", "1:3", "--leaf", "5:6", "--out-dir", tmp_path / "m")
    assert code == 0, err
    model = json.load(open(tmp_path / "m" / "model.json"))
    assert len(model["config_hash"]) == 16
    code, _, err = pathwise.run_cli("--run-log", log, "train", "--out-dir", tmp_path / "m")
    assert code == 1 and "--data" in err
    assert pathwise.generate_panel_csv(config).startswith("student_id,cohort_year")
