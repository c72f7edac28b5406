"""Benchmark orchestration: data loading, metrics, reports, and the runner.

A benchmark run is described by a flat key=value config (see CONFIG_SCHEMA)
and produces a BenchmarkReport persisted as:

* report.json   — full structured report (config, seeds, records, aggregates,
                  failures, timings);
* records.jsonl — one canonical JSON line per scored dataset, in a fixed
                  order; reruns with identical seeds reproduce this file
                  byte-for-byte (wall-clock timings live outside it);
* report.txt    — human-readable table;
* optional PR-curve / accuracy plots.

Aggregates are always recomputable from the records; `load_report` verifies
this on every load.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .baselines import BaselineConfig, baseline_score
from .datagen import (
    CEDatabase,
    PairDataset,
    generate_database,
    read_numeric_table,
    standardize,
    swap_pair,
)
from .errors import (
    ConfigError,
    DataFormatError,
    DegenerateDataError,
    MetacauseError,
    MetricUndefinedError,
    PreconditionError,
)
from .generator import load_model, save_model
from .meta_trainer import (
    TrainConfig,
    ensemble_score,
    select_decoder_width,
    train_ensemble,
)
from .seeding import derive_seed, rng_from

log = logging.getLogger(__name__)

REPORT_FORMAT = "metacause-report-v1"


# -- metrics -------------------------------------------------------------------


def pr_curve(scores: list[tuple[float, int]]) -> tuple[np.ndarray, np.ndarray]:
    """Precision/recall sweep points, descending score, tied scores grouped."""
    pos = sum(1 for _, lab in scores if lab)
    neg = len(scores) - pos
    if pos == 0 or neg == 0:
        raise MetricUndefinedError("PR curve needs at least one positive and one negative")
    by_score: dict[float, list[int]] = {}
    for s, lab in scores:
        by_score.setdefault(float(s), []).append(int(bool(lab)))
    tp = fp = 0
    recalls, precisions = [0.0], [1.0]
    for s in sorted(by_score, reverse=True):
        group = by_score[s]
        tp += sum(group)
        fp += len(group) - sum(group)
        recalls.append(tp / pos)
        precisions.append(tp / (tp + fp))
    return np.asarray(recalls), np.asarray(precisions)


def auprc(scores: list[tuple[float, int]]) -> float:
    """Stepwise (rectangular) area under the PR sweep; ties grouped."""
    recalls, precisions = pr_curve(scores)
    area = 0.0
    for i in range(1, len(recalls)):
        area += precisions[i] * (recalls[i] - recalls[i - 1])
    return float(area)


def weighted_accuracy(records, weights=None) -> float:
    """Σ w·correct / Σ w over (predicted, label) pairs; ties are incorrect."""
    pairs = []
    for r in records:
        if isinstance(r, dict):
            pairs.append((r["predicted"], r["label"]))
        else:
            pairs.append((r[0], r[1]))
    if weights is None:
        weights = np.ones(len(pairs))
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape[0] != len(pairs) or np.any(weights <= 0):
        raise PreconditionError("weights must be positive, one per record")
    if len(pairs) == 0:
        raise PreconditionError("no records")
    correct = np.asarray([p == l for p, l in pairs], dtype=np.float64)
    return float((weights * correct).sum() / weights.sum())


def kfold_cv(datasets, k: int, seed: int) -> list[tuple[list[int], list[int]]]:
    """Seeded shuffle, then k contiguous test folds partitioning the data."""
    n = datasets if isinstance(datasets, int) else len(datasets)
    if k < 2:
        raise PreconditionError("k must be ≥ 2")
    if k > n:
        raise PreconditionError(f"k={k} exceeds dataset count {n}")
    perm = rng_from(seed, "kfold").permutation(n)
    folds = np.array_split(perm, k)
    out = []
    for i, fold in enumerate(folds):
        test = [int(j) for j in fold]
        train = [int(j) for f2 in (folds[:i] + folds[i + 1 :]) for j in f2]
        out.append((train, test))
    return out


# -- Tuebingen-format loading ----------------------------------------------------


@dataclass
class TuebingenPair:
    id: int
    data: PairDataset  # presented column order, labeled from the metadata
    weight: float

    def __post_init__(self):
        if self.weight <= 0:
            raise PreconditionError(f"pair {self.id}: weight must be positive")


def load_tuebingen(directory: str, budget: int = 100, seed: int = 0) -> list[TuebingenPair]:
    """Load the cause-effect-pairs benchmark layout.

    Expects `pairmeta.txt` rows of (id, cause col start/end, effect col
    start/end, weight) and per-pair whitespace-delimited data files.
    Only univariate pairs (both ranges single columns within the first two)
    are kept; others are skipped with a logged reason. Datasets larger than
    `budget` points are reduced by a seeded uniform subsample.
    """
    meta_path = os.path.join(directory, "pairmeta.txt")
    if not os.path.exists(meta_path):
        raise DataFormatError("pairmeta.txt not found", path=meta_path)
    pairs: list[TuebingenPair] = []
    with open(meta_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            parts = stripped.split()
            if len(parts) < 6:
                raise DataFormatError(
                    f"expected 6 fields, found {len(parts)}", path=meta_path, line=lineno
                )
            try:
                pid = int(parts[0])
                c0, c1, e0, e1 = (int(p) for p in parts[1:5])
                weight = float(parts[5])
            except ValueError:
                raise DataFormatError(
                    f"malformed metadata row: {stripped[:60]!r}",
                    path=meta_path,
                    line=lineno,
                ) from None
            if not (c0 == c1 and e0 == e1 and {c0, e0} == {1, 2}):
                log.info(
                    "skipping pair %04d: multivariate (cause cols %d-%d, effect cols %d-%d)",
                    pid, c0, c1, e0, e1,
                )
                continue
            fpath = os.path.join(directory, f"pair{pid:04d}.txt")
            if not os.path.exists(fpath):
                raise DataFormatError(f"data file for pair {pid:04d} missing", path=fpath)
            table = read_numeric_table(fpath)
            if table.shape[1] < 2:
                raise DataFormatError("need at least two columns", path=fpath)
            x, y = table[:, 0], table[:, 1]
            if x.shape[0] > budget:
                idx = np.sort(
                    rng_from(seed, "tueb-sub", pid).choice(x.shape[0], budget, replace=False)
                )
                x, y = x[idx], y[idx]
            label = "x_to_y" if c0 == 1 else "y_to_x"
            data = PairDataset(x, y, label, f"pair{pid:04d}", weight)
            pairs.append(TuebingenPair(pid, data, weight))
    if not pairs:
        raise DataFormatError("no univariate pairs found", path=meta_path)
    return pairs


def tuebingen_db(pairs: list[TuebingenPair]) -> tuple[CEDatabase, list[dict]]:
    """Standardize and orient pairs into a training database.

    Returns (database, skipped) where skipped lists pairs that could not be
    standardized.
    """
    datasets, orientations, skipped = [], [], []
    for p in pairs:
        try:
            shown = standardize(p.data)
        except DegenerateDataError as exc:
            skipped.append({"name": p.data.name, "error": str(exc)})
            continue
        if shown.label == "y_to_x":
            datasets.append(swap_pair(shown))
            orientations.append("swapped")
        else:
            datasets.append(shown)
            orientations.append("as_is")
    db = CEDatabase(datasets, orientations, [None] * len(datasets), {"source": "tuebingen"})
    return db, skipped


# -- report ----------------------------------------------------------------------


@dataclass
class BenchmarkReport:
    config: dict
    seeds: dict
    records: list[dict] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def compute_aggregates(records: list[dict]) -> dict:
    if not records:
        return {"n_records": 0}
    weights = [r.get("weight", 1.0) for r in records]
    acc = weighted_accuracy(records, np.ones(len(records)))
    wacc = weighted_accuracy(records, weights)
    try:
        area = auprc([(r["s"], 1 if r["label"] == "x_to_y" else 0) for r in records])
    except MetricUndefinedError:
        area = None
    return {
        "n_records": len(records),
        "accuracy": acc,
        "weighted_accuracy": wacc,
        "auprc": area,
        "n_ties": sum(1 for r in records if r["predicted"] == "tie"),
    }


def record_lines(records: list[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


def save_report(report: BenchmarkReport, out_dir: str, plots: bool = False) -> None:
    os.makedirs(out_dir, exist_ok=True)
    doc = {
        "format": REPORT_FORMAT,
        "config": report.config,
        "seeds": report.seeds,
        "records": report.records,
        "aggregates": report.aggregates,
        "failures": report.failures,
        "timings": report.timings,
        "meta": report.meta,
    }
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
    with open(os.path.join(out_dir, "records.jsonl"), "w") as fh:
        fh.write(record_lines(report.records))
    with open(os.path.join(out_dir, "report.txt"), "w") as fh:
        fh.write(format_report_table(report))
    if plots:
        try:
            write_plots(report, out_dir)
        except Exception as exc:  # plotting must never sink a finished run
            log.warning("plot generation failed: %s", exc)


def load_report(path: str) -> BenchmarkReport:
    """Read a persisted report and verify its aggregates against the records."""
    fpath = path if path.endswith(".json") else os.path.join(path, "report.json")
    with open(fpath) as fh:
        doc = json.load(fh)
    if doc.get("format") != REPORT_FORMAT:
        raise DataFormatError(f"unsupported report format {doc.get('format')!r}", path=fpath)
    report = BenchmarkReport(
        config=doc["config"],
        seeds=doc["seeds"],
        records=doc["records"],
        aggregates=doc["aggregates"],
        failures=doc.get("failures", []),
        timings=doc.get("timings", {}),
        meta=doc.get("meta", {}),
    )
    recomputed = compute_aggregates(report.records)
    if recomputed != report.aggregates:
        raise DataFormatError(
            f"stored aggregates do not match records: {report.aggregates} vs {recomputed}",
            path=fpath,
        )
    return report


def format_report_table(report: BenchmarkReport) -> str:
    lines = [
        f"benchmark: method={report.config.get('method')} task={report.config.get('task')}",
        "",
        f"{'name':<24} {'label':<8} {'predicted':<9} {'s':>12} {'weight':>7}",
    ]
    for r in report.records:
        lines.append(
            f"{r['name']:<24} {r['label']:<8} {r['predicted']:<9} {r['s']:>12.5g} "
            f"{r.get('weight', 1.0):>7.3g}"
        )
    lines.append("")
    for k, v in sorted(report.aggregates.items()):
        lines.append(f"{k}: {v}")
    for k, v in sorted(report.meta.get("summary", {}).items()):
        lines.append(f"{k}: {v}")
    if report.failures:
        lines.append("")
        lines.append(f"failures ({len(report.failures)}):")
        for f in report.failures:
            lines.append(f"  {f}")
    return "\n".join(lines) + "\n"


def write_plots(report: BenchmarkReport, out_dir: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    scores = [(r["s"], 1 if r["label"] == "x_to_y" else 0) for r in report.records]
    try:
        rec, prec = pr_curve(scores)
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.step(rec, prec, where="post")
        ax.set_xlabel("recall")
        ax.set_ylabel("precision")
        ax.set_ylim(0, 1.05)
        ax.set_title(f"PR curve — {report.config.get('method')}")
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, "pr_curve.png"), dpi=120)
        plt.close(fig)
    except MetricUndefinedError:
        pass
    per_rep = report.meta.get("per_repetition", [])
    if per_rep:
        fig, ax = plt.subplots(figsize=(5, 4))
        xs = [p["rep"] for p in per_rep]
        ys = [p["accuracy"] for p in per_rep]
        ax.bar(xs, ys)
        ax.set_xlabel("repetition")
        ax.set_ylabel("accuracy")
        ax.set_ylim(0, 1.0)
        ax.axhline(0.5, color="gray", lw=0.8, ls="--")
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, "accuracy.png"), dpi=120)
        plt.close(fig)


# -- config ------------------------------------------------------------------------


# key -> (type, default); None default means "unset"
CONFIG_SCHEMA: dict[str, tuple[type, object]] = {
    "task": (str, "synthetic"),
    "method": (str, "meta"),
    "family": (str, "multi"),
    "n_train_pairs": (int, 60),
    "n_test_pairs": (int, 60),
    "n_points": (int, 100),
    "data_seed": (int, 0),
    "epochs": (int, 300),
    "batch_datasets": (int, 10),
    "lr": (float, 0.01),
    "ensemble_size": (int, 4),
    "decoder_hidden": (int, 40),  # or the string "cv": holdout-validated {5, 40}
    "encoder_kind": (str, "deepsets"),
    "loss_kind": (str, "quadratic"),
    "repetitions": (int, 1),
    "master_seed": (int, 0),
    "score_seed": (int, 0),
    "tuebingen_dir": (str, None),
    "budget": (int, 100),
    "folds": (int, 5),
    "out_dir": (str, None),
    "plots": (bool, False),
    "save_models_dir": (str, None),
    "load_models_dir": (str, None),
    "degree": (int, 3),
    "bins": (int, 10),
    "cgnn_ensemble": (int, 4),
    "cgnn_epochs": (int, 100),
}

TRAINED_METHODS = {
    "meta": ("full", None),
    "meta_cme": ("full", "cme"),
    "meta_nofilm": ("no_film", None),
    "naive_joint": ("naive_joint", None),
}
ANALYTIC_METHODS = ("reci", "igci", "cds", "cgnn")


def _parse_bool(v: str) -> bool:
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def parse_config_file(path: str) -> dict[str, str]:
    """Flat `key = value` lines; '#' starts a comment line."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key = value, got {stripped!r}")
            key, _, value = stripped.partition("=")
            out[key.strip()] = value.strip()
    return out


def resolve_config(raw: dict) -> dict:
    """Validate keys against the schema and coerce types."""
    cfg: dict = {}
    for key, value in raw.items():
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        typ, _ = CONFIG_SCHEMA[key]
        if value is None or (isinstance(value, str) and value == ""):
            cfg[key] = None
            continue
        if key == "decoder_hidden" and value == "cv":
            cfg[key] = "cv"
            continue
        try:
            if typ is bool:
                cfg[key] = value if isinstance(value, bool) else _parse_bool(str(value))
            else:
                cfg[key] = typ(value)
        except (TypeError, ValueError):
            raise ConfigError(f"config key {key!r}: cannot parse {value!r} as {typ.__name__}") from None
    for key, (_, default) in CONFIG_SCHEMA.items():
        cfg.setdefault(key, default)
    if cfg["method"] not in TRAINED_METHODS and cfg["method"] not in ANALYTIC_METHODS:
        raise ConfigError(f"unknown method {cfg['method']!r}")
    if cfg["task"] not in ("synthetic", "tuebingen"):
        raise ConfigError(f"unknown task {cfg['task']!r}")
    if cfg["task"] == "tuebingen" and not cfg["tuebingen_dir"]:
        raise ConfigError("task=tuebingen requires tuebingen_dir")
    return cfg


def _train_config(cfg: dict, master_seed: int) -> TrainConfig:
    method = cfg["method"]
    encoder_kind = cfg["encoder_kind"]
    if TRAINED_METHODS[method][1] is not None:
        encoder_kind = TRAINED_METHODS[method][1]
    return TrainConfig(
        epochs=cfg["epochs"],
        batch_datasets=cfg["batch_datasets"],
        lr=cfg["lr"],
        ensemble_size=cfg["ensemble_size"],
        encoder_kind=encoder_kind,
        decoder_hidden=cfg["decoder_hidden"],
        master_seed=master_seed,
        loss_kind=cfg["loss_kind"],
    )


def _score_pair(cfg: dict, models, shown: PairDataset, noise_seed: int):
    if cfg["method"] in TRAINED_METHODS:
        return ensemble_score(models, shown, noise_seed)
    bc = BaselineConfig(
        method=cfg["method"],
        degree=cfg["degree"],
        bins=cfg["bins"],
        ensemble=cfg["cgnn_ensemble"],
        epochs=cfg["cgnn_epochs"],
        decoder_hidden=cfg["decoder_hidden"],
        seed=noise_seed,
    )
    return baseline_score(shown, bc)


def _maybe_select_width(cfg: dict, train_db: CEDatabase, report: BenchmarkReport) -> None:
    """Resolve decoder_hidden = "cv" by holdout validation on the train split."""
    if cfg["decoder_hidden"] != "cv":
        return
    method = cfg["method"]
    if method not in TRAINED_METHODS:
        raise ConfigError(f"decoder_hidden = cv requires a trained method, not {method!r}")
    variant = TRAINED_METHODS[method][0]
    probe = dict(cfg)
    probe["decoder_hidden"] = 40  # placeholder; the selector substitutes candidates
    tcfg = _train_config(probe, derive_seed(cfg["master_seed"], "width"))
    t0 = time.perf_counter()
    chosen = select_decoder_width(train_db, tcfg, variant=variant)
    report.timings["width_selection"] = time.perf_counter() - t0
    cfg["decoder_hidden"] = chosen
    report.config["decoder_hidden"] = chosen
    report.meta["selected_decoder_hidden"] = chosen


def _get_models(cfg: dict, train_db: CEDatabase, rep: int, report: BenchmarkReport):
    """Train (or load) the ensemble for one repetition of a trained method."""
    method = cfg["method"]
    if method not in TRAINED_METHODS:
        return None
    variant = TRAINED_METHODS[method][0]
    if cfg["load_models_dir"]:
        models = []
        for k in range(cfg["ensemble_size"]):
            models.append(
                load_model(os.path.join(cfg["load_models_dir"], f"rep{rep}-member{k}.json"))
            )
        return models
    tcfg = _train_config(cfg, derive_seed(cfg["master_seed"], "rep", rep))
    t0 = time.perf_counter()
    models = train_ensemble(train_db, tcfg, variant=variant)
    report.timings[f"rep{rep}/train"] = time.perf_counter() - t0
    if cfg["save_models_dir"]:
        os.makedirs(cfg["save_models_dir"], exist_ok=True)
        for k, m in enumerate(models):
            save_model(
                os.path.join(cfg["save_models_dir"], f"rep{rep}-member{k}.json"),
                m,
                {"rep": rep, "member": k},
            )
    return models


def run_benchmark(config, out_dir: str | None = None) -> BenchmarkReport:
    """Execute the full protocol described by `config` (dict or file path).

    Per-pair failures are recorded and skipped; a stage-level failure writes
    a partial report (when out_dir is known) before propagating.
    """
    if isinstance(config, str):
        config = parse_config_file(config)
    cfg = resolve_config(dict(config))
    if out_dir is None:
        out_dir = cfg["out_dir"]
    report = BenchmarkReport(
        config={k: v for k, v in cfg.items() if v is not None},
        seeds={
            "data_seed": cfg["data_seed"],
            "master_seed": cfg["master_seed"],
            "score_seed": cfg["score_seed"],
        },
    )
    try:
        if cfg["task"] == "synthetic":
            _run_synthetic(cfg, report)
        else:
            _run_tuebingen(cfg, report)
    except MetacauseError as exc:
        report.failures.append({"stage": "fatal", "error": str(exc)})
        report.aggregates = compute_aggregates(report.records)
        if out_dir:
            save_report(report, out_dir, plots=False)
        raise
    report.aggregates = compute_aggregates(report.records)
    _summarize_reps(report)
    if out_dir:
        save_report(report, out_dir, plots=cfg["plots"])
    return report


def _summarize_reps(report: BenchmarkReport) -> None:
    per_rep = report.meta.get("per_repetition")
    if not per_rep:
        return
    acc = np.asarray([p["accuracy"] for p in per_rep], dtype=np.float64)
    summary = {"accuracy_mean": float(acc.mean()), "accuracy_std": float(acc.std())}
    aucs = [p["auprc"] for p in per_rep if p.get("auprc") is not None]
    if aucs:
        summary["auprc_mean"] = float(np.mean(aucs))
        summary["auprc_std"] = float(np.std(aucs))
    waccs = [p["weighted_accuracy"] for p in per_rep if p.get("weighted_accuracy") is not None]
    if waccs:
        summary["weighted_accuracy_mean"] = float(np.mean(waccs))
        summary["weighted_accuracy_std"] = float(np.std(waccs))
    report.meta["summary"] = summary


def _run_synthetic(cfg: dict, report: BenchmarkReport) -> None:
    n_train, n_test = cfg["n_train_pairs"], cfg["n_test_pairs"]
    db = generate_database(
        cfg["family"], n_train + n_test, cfg["n_points"], cfg["data_seed"]
    )
    train_db = db.subset(range(n_train))
    test_db = db.subset(range(n_train, n_train + n_test))
    _maybe_select_width(cfg, train_db, report)
    per_rep = []
    for rep in range(cfg["repetitions"]):
        models = _get_models(cfg, train_db, rep, report)
        rep_records = []
        for i in range(len(test_db)):
            shown = test_db.presented(i)
            noise_seed = derive_seed(cfg["score_seed"], "rep", rep, "pair", i)
            t0 = time.perf_counter()
            try:
                sc = _score_pair(cfg, models, shown, noise_seed)
            except MetacauseError as exc:
                report.failures.append({"rep": rep, "name": shown.name, "error": str(exc)})
                continue
            report.timings[f"rep{rep}/{shown.name}"] = time.perf_counter() - t0
            rep_records.append(
                {
                    "rep": rep,
                    "name": shown.name,
                    "label": shown.label,
                    "predicted": sc.predicted,
                    "s": sc.s,
                    "m_xy": sc.m_xy,
                    "m_yx": sc.m_yx,
                    "weight": shown.weight,
                }
            )
        report.records.extend(rep_records)
        per_rep.append({"rep": rep, **_rep_aggregates(rep_records)})
    report.meta["per_repetition"] = per_rep


def _run_tuebingen(cfg: dict, report: BenchmarkReport) -> None:
    pairs = load_tuebingen(cfg["tuebingen_dir"], cfg["budget"], cfg["data_seed"])
    db, skipped = tuebingen_db(pairs)
    for s in skipped:
        report.failures.append({"stage": "standardize", **s})
    report.meta["n_pairs_loaded"] = len(pairs)
    if cfg["decoder_hidden"] == "cv":
        # select on the first fold's training split of repetition 0
        first_train = kfold_cv(len(db), cfg["folds"], derive_seed(cfg["master_seed"], "folds", 0))[0][0]
        _maybe_select_width(cfg, db.subset(first_train), report)
    per_rep = []
    for rep in range(cfg["repetitions"]):
        folds = kfold_cv(len(db), cfg["folds"], derive_seed(cfg["master_seed"], "folds", rep))
        rep_records = []
        for f, (train_idx, test_idx) in enumerate(folds):
            sub_cfg = dict(cfg)
            sub_cfg["master_seed"] = derive_seed(cfg["master_seed"], "rep", rep, "fold", f)
            models = _get_models(sub_cfg, db.subset(train_idx), rep * len(folds) + f, report)
            for i in test_idx:
                shown = db.presented(i)
                noise_seed = derive_seed(cfg["score_seed"], "rep", rep, "pair", int(i))
                t0 = time.perf_counter()
                try:
                    sc = _score_pair(cfg, models, shown, noise_seed)
                except MetacauseError as exc:
                    report.failures.append({"rep": rep, "name": shown.name, "error": str(exc)})
                    continue
                report.timings[f"rep{rep}/fold{f}/{shown.name}"] = time.perf_counter() - t0
                rep_records.append(
                    {
                        "rep": rep,
                        "fold": f,
                        "name": shown.name,
                        "label": shown.label,
                        "predicted": sc.predicted,
                        "s": sc.s,
                        "m_xy": sc.m_xy,
                        "m_yx": sc.m_yx,
                        "weight": shown.weight,
                    }
                )
        report.records.extend(rep_records)
        per_rep.append({"rep": rep, **_rep_aggregates(rep_records)})
    report.meta["per_repetition"] = per_rep


def _rep_aggregates(records: list[dict]) -> dict:
    if not records:
        return {"accuracy": 0.0, "auprc": None, "weighted_accuracy": None, "n_records": 0}
    agg = compute_aggregates(records)
    return {
        "accuracy": agg["accuracy"],
        "auprc": agg["auprc"],
        "weighted_accuracy": agg["weighted_accuracy"],
        "n_records": agg["n_records"],
    }
