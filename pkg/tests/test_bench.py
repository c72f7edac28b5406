"""Tests for benchmark metrics, k-fold splitting, the real-pairs loader,
report persistence, config handling, and the end-to-end runner."""

import json
import os

import numpy as np
import pytest

from metacause.bench import (
    BenchmarkReport,
    TuebingenPair,
    auprc,
    compute_aggregates,
    format_report_table,
    kfold_cv,
    load_report,
    load_tuebingen,
    parse_config_file,
    pr_curve,
    record_lines,
    resolve_config,
    run_benchmark,
    save_report,
    tuebingen_db,
    weighted_accuracy,
)
from metacause.datagen import PairDataset
from metacause.errors import (
    ConfigError,
    DataFormatError,
    MetricUndefinedError,
    PreconditionError,
)


# -- PR curve / AUPRC -----------------------------------------------------------


def test_auprc_hand_oracle():
    scores = [(0.9, 1), (0.8, 0), (0.7, 1), (0.6, 0)]
    rec, prec = pr_curve(scores)
    assert np.allclose(rec, [0.0, 0.5, 0.5, 1.0, 1.0])
    assert np.allclose(prec, [1.0, 1.0, 0.5, 2 / 3, 0.5])
    assert auprc(scores) == pytest.approx(5 / 6)


def test_auprc_groups_tied_scores():
    scores = [(0.9, 1), (0.9, 0), (0.5, 1)]
    rec, prec = pr_curve(scores)
    assert np.allclose(rec, [0.0, 0.5, 1.0])
    assert np.allclose(prec, [1.0, 0.5, 2 / 3])
    assert auprc(scores) == pytest.approx(0.5 * 0.5 + 0.5 * 2 / 3)


def test_auprc_perfect_ranking():
    assert auprc([(3.0, 1), (2.0, 1), (1.0, 0)]) == pytest.approx(1.0)


def test_pr_curve_undefined_for_single_class():
    with pytest.raises(MetricUndefinedError):
        pr_curve([(0.5, 1), (0.4, 1)])
    with pytest.raises(MetricUndefinedError):
        auprc([(0.5, 0)])
    with pytest.raises(MetricUndefinedError):
        pr_curve([])


# -- weighted accuracy -------------------------------------------------------------


def test_weighted_accuracy_dicts_and_tuples():
    recs = [
        {"predicted": "x_to_y", "label": "x_to_y"},
        {"predicted": "y_to_x", "label": "x_to_y"},
        {"predicted": "tie", "label": "x_to_y"},  # tie is incorrect
        {"predicted": "y_to_x", "label": "y_to_x"},
    ]
    assert weighted_accuracy(recs) == pytest.approx(0.5)
    tuples = [("x_to_y", "x_to_y"), ("x_to_y", "y_to_x")]
    assert weighted_accuracy(tuples) == pytest.approx(0.5)
    assert weighted_accuracy(tuples, [3.0, 1.0]) == pytest.approx(0.75)


def test_weighted_accuracy_validation():
    recs = [("x_to_y", "x_to_y")]
    with pytest.raises(PreconditionError):
        weighted_accuracy(recs, [0.0])
    with pytest.raises(PreconditionError):
        weighted_accuracy(recs, [1.0, 2.0])
    with pytest.raises(PreconditionError):
        weighted_accuracy([])


# -- k-fold splitting ---------------------------------------------------------------


def test_kfold_cv_partitions():
    folds = kfold_cv(11, k=3, seed=4)
    assert len(folds) == 3
    all_test = sorted(j for _, test in folds for j in test)
    assert all_test == list(range(11))
    for train, test in folds:
        assert sorted(train + test) == list(range(11))
        assert not set(train) & set(test)
    assert folds == kfold_cv(11, k=3, seed=4)          # deterministic
    assert folds != kfold_cv(11, k=3, seed=5)
    assert kfold_cv(["a", "b", "c"], k=2, seed=0)      # accepts sequences


def test_kfold_cv_validation():
    with pytest.raises(PreconditionError):
        kfold_cv(10, k=1, seed=0)
    with pytest.raises(PreconditionError):
        kfold_cv(3, k=4, seed=0)


# -- real-pairs loader ---------------------------------------------------------------


def _write_tueb_fixture(root, n_rows=30):
    rng = np.random.default_rng(0)
    meta_lines = []

    def write_pair(pid, cols):
        table = rng.standard_normal((n_rows, cols))
        table[:, 1] = np.tanh(table[:, 0]) + 0.1 * table[:, 1]
        with open(root / f"pair{pid:04d}.txt", "w") as fh:
            for row in table:
                fh.write(" ".join(f"{v:.6f}" for v in row) + "\n")

    write_pair(1, 2)
    meta_lines.append("0001 1 1 2 2 1.0")  # cause in column 1
    write_pair(2, 2)
    meta_lines.append("0002 2 2 1 1 0.5")  # cause in column 2
    write_pair(3, 4)
    meta_lines.append("0003 1 2 3 4 1.0")  # multivariate: must be skipped
    (root / "pairmeta.txt").write_text("\n".join(meta_lines) + "\n")


def test_load_tuebingen_fixture(tmp_path):
    _write_tueb_fixture(tmp_path)
    pairs = load_tuebingen(str(tmp_path), budget=100, seed=0)
    assert [p.id for p in pairs] == [1, 2]  # multivariate pair dropped
    assert pairs[0].data.label == "x_to_y"
    assert pairs[1].data.label == "y_to_x"
    assert pairs[1].weight == 0.5
    assert pairs[0].data.m == 30  # under budget: untouched


def test_load_tuebingen_budget_subsample(tmp_path):
    _write_tueb_fixture(tmp_path, n_rows=50)
    a = load_tuebingen(str(tmp_path), budget=20, seed=3)
    b = load_tuebingen(str(tmp_path), budget=20, seed=3)
    c = load_tuebingen(str(tmp_path), budget=20, seed=4)
    assert a[0].data.m == 20
    assert np.array_equal(a[0].data.x, b[0].data.x)   # seeded subsample
    assert not np.array_equal(a[0].data.x, c[0].data.x)
    full = load_tuebingen(str(tmp_path), budget=1000, seed=0)[0].data
    assert np.all(np.isin(a[0].data.x, full.x))       # subset of the raw rows


def test_load_tuebingen_errors(tmp_path):
    with pytest.raises(DataFormatError):
        load_tuebingen(str(tmp_path))  # no pairmeta.txt

    _write_tueb_fixture(tmp_path)
    (tmp_path / "pairmeta.txt").write_text("0001 1 1 2\n")
    with pytest.raises(DataFormatError) as exc:
        load_tuebingen(str(tmp_path))
    assert exc.value.line == 1

    (tmp_path / "pairmeta.txt").write_text("0001 1 1 2 2 not_a_weight\n")
    with pytest.raises(DataFormatError):
        load_tuebingen(str(tmp_path))

    (tmp_path / "pairmeta.txt").write_text("0009 1 1 2 2 1.0\n")
    with pytest.raises(DataFormatError):  # data file missing
        load_tuebingen(str(tmp_path))

    (tmp_path / "pairmeta.txt").write_text("0003 1 2 3 4 1.0\n")
    with pytest.raises(DataFormatError):  # nothing univariate left
        load_tuebingen(str(tmp_path))


def test_tuebingen_pair_weight_validation():
    ds = PairDataset(np.array([0.0, 1.0]), np.array([1.0, 0.0]), "x_to_y")
    with pytest.raises(PreconditionError):
        TuebingenPair(1, ds, 0.0)


def test_tuebingen_db_orientation_and_skips(tmp_path):
    _write_tueb_fixture(tmp_path)
    pairs = load_tuebingen(str(tmp_path))
    constant = PairDataset(np.array([1.0, 1.0, 1.0]), np.array([0.0, 1.0, 2.0]),
                           "x_to_y", "flat")
    pairs.append(TuebingenPair(99, constant, 1.0))
    db, skipped = tuebingen_db(pairs)
    assert len(db) == 2
    assert [s["name"] for s in skipped] == ["flat"]
    assert all(ds.label == "x_to_y" for ds in db.datasets)  # stored causal
    assert db.orientations == ["as_is", "swapped"]
    assert db.presented(1).label == "y_to_x"


# -- report persistence ----------------------------------------------------------------


def _toy_report():
    records = [
        {"rep": 0, "name": "a", "label": "x_to_y", "predicted": "x_to_y",
         "s": 0.3, "m_xy": 0.1, "m_yx": 0.4, "weight": 1.0},
        {"rep": 0, "name": "b", "label": "y_to_x", "predicted": "x_to_y",
         "s": 0.2, "m_xy": 0.1, "m_yx": 0.3, "weight": 2.0},
    ]
    report = BenchmarkReport(
        config={"task": "synthetic", "method": "reci"},
        seeds={"data_seed": 0, "master_seed": 0, "score_seed": 0},
        records=records,
        aggregates=compute_aggregates(records),
        timings={"rep0/a": 0.01},
        meta={"per_repetition": [{"rep": 0, "accuracy": 0.5}],
              "summary": {"accuracy_mean": 0.5}},
    )
    return report


def test_report_round_trip(tmp_path):
    report = _toy_report()
    out = str(tmp_path / "run")
    save_report(report, out)
    assert sorted(os.listdir(out)) == ["records.jsonl", "report.json", "report.txt"]
    loaded = load_report(out)
    assert loaded.records == report.records
    assert loaded.aggregates == report.aggregates
    assert loaded.config == report.config
    with open(os.path.join(out, "records.jsonl")) as fh:
        assert fh.read() == record_lines(report.records)


def test_load_report_rejects_tampered_aggregates(tmp_path):
    report = _toy_report()
    out = str(tmp_path / "run")
    save_report(report, out)
    doc = json.loads(open(os.path.join(out, "report.json")).read())
    doc["aggregates"]["accuracy"] = 1.0
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(doc, fh)
    with pytest.raises(DataFormatError):
        load_report(out)


def test_load_report_rejects_unknown_format(tmp_path):
    p = tmp_path / "report.json"
    p.write_text(json.dumps({"format": "other", "config": {}, "seeds": {}}))
    with pytest.raises(DataFormatError):
        load_report(str(p))


def test_record_lines_canonical_bytes():
    a = [{"b": 1, "a": 2}]
    b = [{"a": 2, "b": 1}]
    assert record_lines(a) == record_lines(b)
    assert record_lines(a) == '{"a": 2, "b": 1}\n'


def test_format_report_table_mentions_failures():
    report = _toy_report()
    report.failures.append({"rep": 0, "name": "c", "error": "boom"})
    text = format_report_table(report)
    assert "failures (1):" in text
    assert "accuracy_mean" in text
    assert "a" in text and "b" in text


def test_save_report_with_plots(tmp_path):
    pytest.importorskip("matplotlib")
    report = _toy_report()
    out = str(tmp_path / "run")
    save_report(report, out, plots=True)
    assert os.path.exists(os.path.join(out, "pr_curve.png"))
    assert os.path.exists(os.path.join(out, "accuracy.png"))


def test_compute_aggregates_single_class_auprc_none():
    records = [{"name": "a", "label": "x_to_y", "predicted": "x_to_y", "s": 0.1}]
    agg = compute_aggregates(records)
    assert agg["auprc"] is None
    assert agg["accuracy"] == 1.0
    assert compute_aggregates([]) == {"n_records": 0}


# -- config --------------------------------------------------------------------------


def test_parse_config_file(tmp_path):
    p = tmp_path / "bench.cfg"
    p.write_text("# a comment\n\nmethod = reci\n n_points =  50\n")
    assert parse_config_file(str(p)) == {"method": "reci", "n_points": "50"}
    p.write_text("method reci\n")
    with pytest.raises(ConfigError):
        parse_config_file(str(p))


def test_resolve_config_defaults_and_coercion():
    cfg = resolve_config({"n_points": "64", "plots": "yes"})
    assert cfg["n_points"] == 64 and cfg["plots"] is True
    assert cfg["method"] == "meta" and cfg["epochs"] == 300
    assert resolve_config({"decoder_hidden": "cv"})["decoder_hidden"] == "cv"


def test_resolve_config_rejects_bad_input():
    with pytest.raises(ConfigError):
        resolve_config({"mystery_knob": 1})
    with pytest.raises(ConfigError):
        resolve_config({"n_points": "many"})
    with pytest.raises(ConfigError):
        resolve_config({"plots": "maybe"})
    with pytest.raises(ConfigError):
        resolve_config({"method": "ouija"})
    with pytest.raises(ConfigError):
        resolve_config({"task": "interpretive_dance"})
    with pytest.raises(ConfigError):
        resolve_config({"task": "tuebingen"})  # requires tuebingen_dir


# -- runner ---------------------------------------------------------------------------


def _fast_cfg(**kw):
    base = dict(task="synthetic", method="reci", family="gauss",
                n_train_pairs=2, n_test_pairs=6, n_points=50, repetitions=2)
    base.update(kw)
    return base


def test_run_benchmark_analytic_end_to_end(tmp_path):
    out = str(tmp_path / "run")
    report = run_benchmark(_fast_cfg(), out_dir=out)
    assert len(report.records) == 12  # 6 test pairs × 2 repetitions
    assert report.aggregates["n_records"] == 12
    assert len(report.meta["per_repetition"]) == 2
    assert "accuracy_mean" in report.meta["summary"]
    loaded = load_report(out)
    assert loaded.records == report.records
    again = run_benchmark(_fast_cfg())
    assert record_lines(again.records) == record_lines(report.records)


def test_run_benchmark_accepts_config_file(tmp_path):
    p = tmp_path / "bench.cfg"
    p.write_text(
        "task = synthetic\nmethod = igci\nfamily = gauss\n"
        "n_train_pairs = 2\nn_test_pairs = 3\nn_points = 40\n"
    )
    report = run_benchmark(str(p))
    assert len(report.records) == 3
    assert report.config["method"] == "igci"


def test_run_benchmark_trained_tiny(tmp_path):
    cfg = _fast_cfg(method="naive_joint", n_test_pairs=2, repetitions=1,
                    epochs=1, ensemble_size=1, batch_datasets=2, decoder_hidden=5)
    report = run_benchmark(cfg, out_dir=str(tmp_path / "run"))
    assert len(report.records) == 2
    assert "rep0/train" in report.timings
    for r in report.records:
        assert {"m_xy", "m_yx", "s", "predicted", "label"} <= set(r)


def test_run_benchmark_cv_width_selection():
    cfg = _fast_cfg(method="meta", n_train_pairs=4, n_test_pairs=2,
                    repetitions=1, epochs=1, ensemble_size=1,
                    batch_datasets=2, decoder_hidden="cv")
    report = run_benchmark(cfg)
    assert report.meta["selected_decoder_hidden"] in (5, 40)
    assert report.config["decoder_hidden"] == report.meta["selected_decoder_hidden"]
    assert "width_selection" in report.timings


def test_run_benchmark_cv_rejects_analytic_methods():
    with pytest.raises(ConfigError):
        run_benchmark(_fast_cfg(method="reci", decoder_hidden="cv"))


def test_run_benchmark_save_then_load_models(tmp_path):
    mdir = str(tmp_path / "models")
    cfg = _fast_cfg(method="naive_joint", n_test_pairs=3, repetitions=1,
                    epochs=1, ensemble_size=2, batch_datasets=2,
                    decoder_hidden=5, save_models_dir=mdir)
    first = run_benchmark(cfg)
    assert sorted(os.listdir(mdir)) == [
        "rep0-member0.json", "rep0-member1.json",
    ]
    cfg2 = dict(cfg)
    del cfg2["save_models_dir"]
    cfg2["load_models_dir"] = mdir
    second = run_benchmark(cfg2)
    assert record_lines(second.records) == record_lines(first.records)


def test_run_benchmark_fatal_failure_writes_partial_report(tmp_path):
    out = str(tmp_path / "run")
    with pytest.raises(ConfigError):
        run_benchmark(_fast_cfg(method="reci", decoder_hidden="cv"), out_dir=out)
    doc = json.loads(open(os.path.join(out, "report.json")).read())
    assert doc["failures"] and doc["failures"][0]["stage"] == "fatal"


def test_run_benchmark_tuebingen_task(tmp_path):
    data = tmp_path / "tueb"
    data.mkdir()
    _write_tueb_fixture(data, n_rows=40)
    # add two more univariate pairs so 2-fold CV has enough data
    rng = np.random.default_rng(5)
    lines = (data / "pairmeta.txt").read_text().rstrip("\n").split("\n")
    for pid in (7, 8):
        table = rng.standard_normal((40, 2))
        table[:, 1] = 0.5 * table[:, 0] ** 2 + 0.1 * table[:, 1]
        with open(data / f"pair{pid:04d}.txt", "w") as fh:
            for row in table:
                fh.write(f"{row[0]:.6f} {row[1]:.6f}\n")
        lines.append(f"{pid:04d} 1 1 2 2 1.0")
    (data / "pairmeta.txt").write_text("\n".join(lines) + "\n")

    cfg = dict(task="tuebingen", tuebingen_dir=str(data), method="igci",
               budget=25, folds=2, repetitions=1)
    report = run_benchmark(cfg)
    assert report.aggregates["n_records"] == 4  # every univariate pair scored once
    assert report.meta["n_pairs_loaded"] == 4
    assert all("fold" in r for r in report.records)
    assert report.aggregates["weighted_accuracy"] is not None
