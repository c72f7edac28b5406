"""The benchmark harness end to end, at miniature scale.

One config dict (or file) drives the whole protocol: generate the data,
train (or dispatch to a baseline), score every held-out pair, aggregate,
and write a report directory:

  report/
    config.json       resolved configuration + seeds
    records.jsonl     one canonical JSON line per scored pair  <- reruns
    aggregates.json   accuracy / auprc / weighted accuracy        match
    timings.json      wall times per stage                        byte-
    pr_curve.png      precision-recall curve (plots=true)         for-byte
    accuracy.png      per-repetition accuracies

The records file is the contract: rerunning the same config reproduces it
byte for byte. This script runs a small meta-trained config, reloads the
report from disk, verifies the rerun property, and prints the table.

The CLI equivalent of everything below (configs are key=value lines):

  printf '%s\\n' task=synthetic method=meta family=multi \\
      n_train_pairs=24 n_test_pairs=12 epochs=200 ensemble_size=2 \\
      decoder_hidden=5 repetitions=1 plots=true > mini.cfg
  metacause bench --config mini.cfg --out demos/output/report

Run:  python3 demos/05_benchmark_harness.py
"""

import os

from metacause import load_report, run_benchmark
from metacause.bench import format_report_table, record_lines

OUT_DIR = os.path.join(os.path.dirname(__file__), "output", "report")

CONFIG = {
    "task": "synthetic",
    "method": "meta",
    "family": "multi",
    "n_train_pairs": 24,
    "n_test_pairs": 12,
    "n_points": 100,
    "epochs": 200,
    "ensemble_size": 2,
    "decoder_hidden": 5,
    "repetitions": 1,
    "master_seed": 0,
    "score_seed": 0,
    "data_seed": 0,
    "plots": True,
}


def main() -> None:
    print("running the miniature benchmark config...")
    report = run_benchmark(dict(CONFIG), out_dir=OUT_DIR)
    print(f"report written to {OUT_DIR}:")
    for name in sorted(os.listdir(OUT_DIR)):
        print(f"  {name}")

    reloaded = load_report(OUT_DIR)
    assert record_lines(reloaded.records) == record_lines(report.records)
    print("\nreloaded from disk; aggregates re-verified against records ✓")

    again = run_benchmark(dict(CONFIG))
    assert record_lines(again.records) == record_lines(report.records)
    print("rerun with the same config: records byte-identical ✓\n")

    print(format_report_table(reloaded))


if __name__ == "__main__":
    main()
