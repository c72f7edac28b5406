"""Command-line entry point.

Subcommands:

* gen       — synthesize a labeled cause-effect pair database to disk
* train     — fit a direction-inference ensemble on a saved database
* score     — run a trained ensemble on one pair, print the verdict as JSON
* bench     — execute a benchmark config end to end
* baseline  — run an analytic baseline on one pair, print JSON

`METACAUSE_DATA_ROOT` supplies the default parent directory for generated
databases. Exit codes: 0 success, 2 configuration/usage error, 3 runtime
failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .baselines import BASELINE_METHODS, BaselineConfig, baseline_score
from .bench import run_benchmark
from .datagen import (
    FAMILIES,
    PairDataset,
    generate_database,
    load_database,
    read_numeric_table,
    save_database,
    standardize,
)
from .errors import ConfigError, MetacauseError
from .generator import VARIANTS, load_model, save_model
from .meta_trainer import TrainConfig, ensemble_score, train_ensemble

log = logging.getLogger(__name__)


def _data_root() -> str:
    return os.environ.get("METACAUSE_DATA_ROOT", ".")


def _out_dir(args, default_name: str) -> str:
    if args.out:
        return args.out
    return os.path.join(_data_root(), default_name)


def _add_gen(sub) -> None:
    p = sub.add_parser("gen", help="generate a synthetic pair database")
    p.add_argument("--family", choices=FAMILIES, default="multi")
    p.add_argument("--n-pairs", type=int, default=60)
    p.add_argument("--n-points", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory (default: data root / family-seed)")


def _add_train(sub) -> None:
    p = sub.add_parser("train", help="train an ensemble on a saved database")
    p.add_argument("--data", required=True, help="database directory")
    p.add_argument("--out", required=True, help="model output directory")
    p.add_argument("--variant", choices=VARIANTS, default="full")
    p.add_argument("--encoder", choices=("deepsets", "cme"), default="deepsets")
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch", type=int, default=10)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--ensemble-size", type=int, default=4)
    p.add_argument("--decoder-hidden", type=int, default=40)
    p.add_argument("--loss", choices=("quadratic", "linear"), default="quadratic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-file", help="JSON-lines training log path")


def _add_score(sub) -> None:
    p = sub.add_parser("score", help="score one pair with a trained ensemble")
    p.add_argument("--models", required=True, help="model directory from `train`")
    p.add_argument("--data", required=True, help="two-column text file or database directory")
    p.add_argument("--index", type=int, default=0, help="pair index when --data is a database")
    p.add_argument("--seed", type=int, default=0, help="noise seed for generation")


def _add_bench(sub) -> None:
    p = sub.add_parser("bench", help="run a benchmark config")
    p.add_argument("--config", required=True, help="key=value config file")
    p.add_argument("--out", help="report directory (overrides config out_dir)")


def _add_baseline(sub) -> None:
    p = sub.add_parser("baseline", help="run an analytic baseline on one pair")
    p.add_argument("--method", choices=BASELINE_METHODS, required=True)
    p.add_argument("--data", required=True, help="two-column text file or database directory")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--ensemble", type=int, default=4)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--decoder-hidden", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)


def _load_pair(path: str, index: int) -> PairDataset:
    if os.path.isdir(path):
        db = load_database(path)
        return standardize(db.presented(index))
    table = read_numeric_table(path)
    if table.shape[1] < 2:
        raise ConfigError(f"{path}: need two numeric columns")
    name = os.path.splitext(os.path.basename(path))[0]
    return standardize(PairDataset(table[:, 0], table[:, 1], "unknown", name))


def _cmd_gen(args) -> int:
    out = _out_dir(args, f"{args.family}-{args.seed}")
    db = generate_database(args.family, args.n_pairs, args.n_points, args.seed)
    save_database(db, out)
    print(f"wrote {len(db)} pairs to {out}")
    return 0


def _cmd_train(args) -> int:
    db = load_database(args.data)
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_datasets=args.batch,
        lr=args.lr,
        ensemble_size=args.ensemble_size,
        encoder_kind=args.encoder,
        decoder_hidden=args.decoder_hidden,
        master_seed=args.seed,
        loss_kind=args.loss,
        log_path=args.log_file,
    )
    models = train_ensemble(db, cfg, variant=args.variant)
    os.makedirs(args.out, exist_ok=True)
    members = []
    for k, m in enumerate(models):
        fname = f"member{k}.json"
        save_model(os.path.join(args.out, fname), m, {"member": k})
        members.append(fname)
    with open(os.path.join(args.out, "ensemble.json"), "w") as fh:
        json.dump(
            {"size": len(members), "members": members, "variant": args.variant,
             "config": cfg.to_dict()},
            fh, indent=1, sort_keys=True,
        )
    print(f"trained {len(models)} model(s) on {len(db)} pairs -> {args.out}")
    return 0


def _load_ensemble(path: str):
    manifest = os.path.join(path, "ensemble.json")
    if os.path.exists(manifest):
        with open(manifest) as fh:
            doc = json.load(fh)
        return [load_model(os.path.join(path, m)) for m in doc["members"]]
    if os.path.isfile(path):
        return [load_model(path)]
    raise ConfigError(f"{path}: no ensemble.json manifest and not a model file")


def _cmd_score(args) -> int:
    models = _load_ensemble(args.models)
    pair = _load_pair(args.data, args.index)
    sc = ensemble_score(models, pair, args.seed)
    print(json.dumps(
        {"name": pair.name, "predicted": sc.predicted, "s": sc.s,
         "m_xy": sc.m_xy, "m_yx": sc.m_yx},
        sort_keys=True,
    ))
    return 0


def _cmd_bench(args) -> int:
    report = run_benchmark(args.config, out_dir=args.out)
    summary = dict(report.aggregates)
    summary.update(report.meta.get("summary", {}))
    print(json.dumps(summary, sort_keys=True))
    if report.failures:
        print(f"{len(report.failures)} failure(s); see report", file=sys.stderr)
    return 0


def _cmd_baseline(args) -> int:
    pair = _load_pair(args.data, args.index)
    cfg = BaselineConfig(
        method=args.method,
        degree=args.degree,
        bins=args.bins,
        ensemble=args.ensemble,
        epochs=args.epochs,
        decoder_hidden=args.decoder_hidden,
        seed=args.seed,
    )
    sc = baseline_score(pair, cfg)
    print(json.dumps(
        {"name": pair.name, "method": args.method, "predicted": sc.predicted,
         "s": sc.s, "m_xy": sc.m_xy, "m_yx": sc.m_yx},
        sort_keys=True,
    ))
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "train": _cmd_train,
    "score": _cmd_score,
    "bench": _cmd_bench,
    "baseline": _cmd_baseline,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metacause",
        description="Bivariate causal direction inference: generators, training, baselines, benchmarks.",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_gen(sub)
    _add_train(sub)
    _add_score(sub)
    _add_bench(sub)
    _add_baseline(sub)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MetacauseError as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
