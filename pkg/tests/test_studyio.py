import json
import warnings

import numpy as np
import pandas as pd
import pytest

from genrank.data import toy_study_paths
from genrank.exceptions import InputError
from genrank.studyio import (
    GeneralizabilityReport,
    KernelConfig,
    StudySchema,
    analyze_study,
    build_configurations,
    emit_report,
    load_long_table,
    load_report,
    summarize_reports,
)

SCHEMA = dict(
    alternative_column="model",
    score_column="score",
    factor_roles={"task": "design", "dataset": "generalizability", "seed": "stochasticity", "folds": "held-constant"},
)


def write(tmp_path, rows, name="t.csv"):
    path = tmp_path / name
    pd.DataFrame(rows, columns=["task", "dataset", "seed", "folds", "model", "score"]).to_csv(path, index=False)
    return path


def grid(scores, task="t1", seeds=(0,)):
    """rows for dataset i and model j with score scores[i][j] (None = missing)."""
    rows = []
    for i, row in enumerate(scores):
        for s in seeds:
            for j, v in enumerate(row):
                rows.append((task, f"d{i}", s, 5, f"m{j}", "" if v is None else v))
    return rows


def test_schema_validation(tmp_path):
    with pytest.raises(InputError):
        StudySchema("a", "s", {"x": "design"})
    with pytest.raises(InputError):
        StudySchema("a", "s", {"x": "generalizability", "y": "nuisance"})
    with pytest.raises(InputError):
        StudySchema("a", "s", {"x": "generalizability"}, missing_policy="guess")
    with pytest.raises(InputError):
        StudySchema.from_file(tmp_path / "missing.json")
    p = tmp_path / "s.json"
    p.write_text(json.dumps({**SCHEMA, "extra": 1}))
    with pytest.raises(InputError, match="unknown schema fields"):
        StudySchema.from_file(p)


def test_load_toy(tmp_path):
    rows = grid([[0.9, 0.5, 0.1], [0.8, 0.6, 0.2]])
    t = load_long_table(write(tmp_path, rows), StudySchema(**SCHEMA))
    assert len(t) == 6 and t.held_constant == {"folds": "5"}
    assert "folds" not in t.frame.columns


def test_load_errors(tmp_path):
    schema = StudySchema(**SCHEMA)
    rows = grid([[0.9, 0.5], [0.8, 0.6]])
    rows[3] = rows[3][:3] + (4,) + rows[3][4:]
    with pytest.raises(InputError, match=r"'folds'.*rows 4"):
        load_long_table(write(tmp_path, rows), schema)
    rows = grid([[0.9, "abc"], [0.8, 0.6]])
    with pytest.raises(InputError, match="rows 2"):
        load_long_table(write(tmp_path, rows), schema)
    path = tmp_path / "bad.csv"
    pd.DataFrame({"model": ["a"], "score": [1.0]}).to_csv(path, index=False)
    with pytest.raises(InputError, match="missing columns"):
        load_long_table(path, schema)
    with pytest.raises(InputError, match="not found"):
        load_long_table(tmp_path / "nope.csv", schema)


def test_missing_scores_kept(tmp_path):
    rows = grid([[0.9, None, 0.1], [0.8, 0.6, 0.2]])
    t = load_long_table(write(tmp_path, rows), StudySchema(**SCHEMA))
    assert len(t) == 6 and t.frame["score"].isna().sum() == 1


def test_complete_table_one_ranking_per_condition(tmp_path):
    rows = grid([[0.9, 0.5, 0.1], [0.8, 0.6, 0.2], [0.1, 0.5, 0.9]], seeds=(0, 1))
    schema = StudySchema(**SCHEMA)
    cfgs = build_configurations(load_long_table(write(tmp_path, rows), schema), schema)
    assert len(cfgs) == 1
    c = cfgs[0]
    assert c.key == {"task": "t1"} and c.N == 3 and c.n_imputed == 0
    assert c.sample.results.tolist() == [[0, 1, 2], [0, 1, 2], [2, 1, 0]]
    assert cfgs.accounting() == {"used": 18}


def test_stochasticity_mean_and_median(tmp_path):
    rows = [("t1", "d0", s, 5, m, v) for s, (a, b) in enumerate([(0.0, 0.5), (0.9, 0.5), (0.9, 0.5)]) for m, v in (("m0", a), ("m1", b))]
    rows += [("t1", "d1", 0, 5, "m0", 1.0), ("t1", "d1", 0, 5, "m1", 0.0)]
    path = write(tmp_path, rows)
    mean = StudySchema(**SCHEMA)
    median = StudySchema(**SCHEMA, aggregate="median")
    # mean of m0 is 0.6 > 0.5, median is 0.9 > 0.5: both rank m0 first
    assert build_configurations(load_long_table(path, mean), mean)[0].scores[0].tolist() == pytest.approx([0.6, 0.5])
    assert build_configurations(load_long_table(path, median), median)[0].scores[0].tolist() == pytest.approx([0.9, 0.5])


def test_worst_rank_imputation(tmp_path):
    # 4 of 5 alternatives observed keeps the condition at 80% coverage
    rows = grid([[0.9, None, 0.5, 0.1, 0.05]] + [[0.9, 0.8, 0.5, 0.1, 0.05]] * 5)
    schema = StudySchema(**SCHEMA)
    cfg = build_configurations(load_long_table(write(tmp_path, rows), schema), schema)[0]
    assert cfg.sample.results[0].tolist() == [0, 4, 1, 2, 3]
    assert cfg.n_imputed == 1
    # 1 of 4 missing needs the condition filter relaxed to 75%
    four = grid([[0.9, None, 0.5, 0.1]] + [[0.9, 0.8, 0.5, 0.1]] * 5)
    relaxed = StudySchema(**SCHEMA, coverage_row=0.75)
    cfg = build_configurations(load_long_table(write(tmp_path, four), relaxed), relaxed)[0]
    assert cfg.sample.results[0].tolist() == [0, 3, 1, 2]
    drop =StudySchema(**SCHEMA, missing_policy="drop-condition")
    cfgs = build_configurations(load_long_table(write(tmp_path, rows), drop), drop)
    assert cfgs[0].N == 5
    assert cfgs.accounting()["filtered: incomplete condition dropped"] == 5


def test_imputation_keeps_observed_order(tmp_path):
    rng = np.random.default_rng(0)
    scores = rng.normal(size=(8, 5)).round(3).tolist()
    for i, j in [(0, 1), (2, 4), (5, 0)]:
        scores[i][j] = None
    schema = StudySchema(**SCHEMA, coverage_col=0.0, coverage_row=0.0)
    cfg = build_configurations(load_long_table(write(tmp_path, grid(scores)), schema), schema)[0]
    for row, r in zip(scores, cfg.sample.results):
        obs = [j for j, v in enumerate(row) if v is not None]
        for a in obs:
            for b in obs:
                if row[a] > row[b]:
                    assert r[a] < r[b]
        for j, v in enumerate(row):
            if v is None:
                assert r[j] == r.max() and all(r[j] > r[o] for o in obs)


def test_alternative_coverage_filter(tmp_path):
    # m5 is missing on 3 of 10 conditions: 70% < 80% coverage
    scores = [[0.9, 0.7, 0.5, 0.3, 0.2, None if i < 3 else 0.1] for i in range(10)]
    schema = StudySchema(**SCHEMA)
    cfgs = build_configurations(load_long_table(write(tmp_path, grid(scores)), schema), schema)
    assert cfgs[0].alternatives.names == ("m0", "m1", "m2", "m3", "m4")
    assert cfgs[0].n_imputed == 0
    assert cfgs.accounting() == {"filtered: alternative coverage": 10, "used": 50}


def test_condition_coverage_filter(tmp_path):
    scores = [[0.9, None, None, None, 0.1]] + [[0.9, 0.7, 0.5, 0.3, 0.1]] * 4
    schema = StudySchema(**SCHEMA)
    cfgs = build_configurations(load_long_table(write(tmp_path, grid(scores)), schema), schema)
    assert cfgs[0].N == 4 and cfgs.accounting()["filtered: condition coverage"] == 5


def test_too_few_conditions_excluded(tmp_path):
    rows = grid([[0.9, 0.1]], task="tiny") + grid([[0.9, 0.1], [0.2, 0.8]], task="ok")
    schema = StudySchema(**SCHEMA)
    with pytest.warns(RuntimeWarning, match="excluded"):
        cfgs = build_configurations(load_long_table(write(tmp_path, rows), schema), schema)
    assert [c.key["task"] for c in cfgs] == ["ok"]
    assert cfgs.excluded[0].key == {"task": "tiny"}
    acc = cfgs.accounting()
    assert sum(acc.values()) == len(rows) and acc["filtered: configuration excluded"] == 2


def test_row_order_independence(tmp_path):
    rng = np.random.default_rng(4)
    rows = grid(rng.normal(size=(6, 4)).round(3).tolist(), task="a", seeds=(0, 1))
    rows += grid(rng.normal(size=(6, 4)).round(3).tolist(), task="b", seeds=(0, 1))
    schema = StudySchema(**SCHEMA)
    a = build_configurations(load_long_table(write(tmp_path, rows, "a.csv"), schema), schema)
    shuffled = [rows[i] for i in rng.permutation(len(rows))]
    b = build_configurations(load_long_table(write(tmp_path, shuffled, "b.csv"), schema), schema)
    assert [c.key for c in a] == [c.key for c in b]
    for x, y in zip(a, b):
        assert np.array_equal(x.sample.results, y.sample.results)
        assert np.allclose(x.scores, y.scores)


def _study(tmp_path, blocks):
    rows = []
    for task, scores in blocks.items():
        rows += grid(scores, task=task)
    path = write(tmp_path, rows)
    schema = StudySchema(**SCHEMA)
    return build_configurations(load_long_table(path, schema), schema)


def test_analyze_orders_point_mass_before_uniform(tmp_path):
    perms = [[3 - p.index(j) for j in range(3)] for p in ([0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0])]
    uniform = [perms[i % 6] for i in range(24)]
    cfgs = _study(tmp_path, {"const": [[3, 2, 1]] * 24, "unif": uniform})
    reports = analyze_study(cfgs, KernelConfig("mallows"))
    by = {r.config_key["task"]: r for r in reports}
    assert by["const"].n_hat == 1 and by["const"].generalizable
    assert by["const"].n_hat < by["unif"].n_hat


def test_analyze_failures_do_not_abort(tmp_path):
    cfgs = _study(tmp_path, {"small": [[1, 2]] * 3, "fine": [[1, 2], [2, 1]] * 5})
    reports = analyze_study(cfgs, KernelConfig("jaccard"))
    by = {r.config_key["task"]: r for r in reports}
    assert by["small"].error and by["small"].n_hat is None
    assert by["fine"].error is None and by["fine"].n_hat >= 1


def test_alpha_sweep_monotone():
    csv_path, schema_path = toy_study_paths()
    schema = StudySchema.from_file(schema_path)
    cfgs = build_configurations(load_long_table(csv_path, schema), schema)
    alphas = [0.7, 0.8, 0.9, 0.95, 0.99]
    for fam in ("jaccard", "mallows", "borda", "rbf"):
        reports = analyze_study(cfgs, KernelConfig(fam), alpha_grid=alphas)
        assert len(reports) == len(cfgs) * len(alphas)
        for cfg in cfgs:
            ns = [r.n_hat for r in reports if r.config_key == cfg.key]
            assert all(b >= a - 1 for a, b in zip(ns, ns[1:]))


def test_kernel_config():
    with pytest.raises(InputError):
        KernelConfig("jaccard", target="m0")
    with pytest.raises(InputError):
        KernelConfig("borda", topk=2)
    with pytest.raises(InputError):
        KernelConfig("jaccard", nu=0.1)


def test_borda_target_by_name(tmp_path):
    cfgs = _study(tmp_path, {"t": [[0.9, 0.5, 0.1], [0.1, 0.5, 0.9]] * 3})
    spec = KernelConfig("borda", target="m2").resolve(cfgs[0])
    assert spec.target == 2


def _reports(tmp_path):
    cfgs = _study(tmp_path, {"a": [[0.9, 0.5, 0.1], [0.1, 0.5, 0.9], [0.5, 0.9, 0.1]] * 4, "b": [[3, 2, 1]] * 8})
    return analyze_study(cfgs, KernelConfig("mallows"), alpha_grid=[0.8, 0.95], delta_grid=[0.05, 0.1])


def test_report_roundtrip(tmp_path):
    reports = _reports(tmp_path)
    assert len(reports) == 8
    emit_report(reports, "json", tmp_path / "r.json")
    emit_report(reports, "csv", tmp_path / "r.csv")
    assert load_report(tmp_path / "r.json") == reports
    assert load_report(tmp_path / "r.csv") == reports
    first = json.loads((tmp_path / "r.json").read_text())[0]
    assert list(first) == [
        "config_key", "N", "n_hat", "alpha_star", "delta_star", "eps_star",
        "kernel", "generalizable", "curve", "fit", "seed", "error",
    ]
    header = (tmp_path / "r.csv").read_text().splitlines()[0]
    assert header.startswith("config.task,N,n_hat")


def test_report_empty_and_errors(tmp_path):
    assert json.loads(emit_report([], "json")) == []
    assert load_report_text(emit_report([], "csv"), tmp_path) == []
    with pytest.raises(InputError):
        emit_report([], "xml")
    with pytest.raises(InputError):
        emit_report([], "json", tmp_path / "no" / "such" / "dir.json")


def load_report_text(text, tmp_path):
    p = tmp_path / "x.csv"
    p.write_text(text)
    return load_report(p)


def test_report_with_error_roundtrips(tmp_path):
    r = GeneralizabilityReport({"task": "x"}, 3, None, 0.95, 0.05, None, "jaccard", None, seed=0, error="too small")
    emit_report([r], "csv", tmp_path / "e.csv")
    assert load_report(tmp_path / "e.csv") == [r]


def test_summarize_reports(tmp_path):
    s = summarize_reports(_reports(tmp_path))
    assert len(s) == 4 and all(row["configs"] == 2 for row in s)
    assert all(row["min"] <= row["median"] <= row["max"] for row in s)
