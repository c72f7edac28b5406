"""The analytic direction baselines, side by side.

Three classic closed-form criteria are bundled for comparison (reference
implementations — simplified, not certified reproductions of the original
releases):

  reci  — fit low-degree polynomials both ways; the direction with the
          smaller rescaled regression error wins,
  igci  — compare mean log-slope of the map in both directions after
          Gaussian standardization,
  cds   — bin the candidate cause and compare how much the conditional
          spread of the effect varies across bins.

Each is a pure function of the pair (microseconds to milliseconds), unlike
the per-dataset generative baseline (cgnn), which trains a fresh model per
pair — see demo 05's harness and the inference-speed numbers in the README.

Run:  python3 demos/04_baseline_gallery.py
"""

import time

from metacause import BaselineConfig, baseline_score, generate_database

FAMILIES = ("net", "gauss", "multi")
METHODS = ("reci", "igci", "cds")
N_PAIRS, N_POINTS = 30, 200


def main() -> None:
    print(f"{N_PAIRS} pairs per family, {N_POINTS} points each\n")
    header = "family   " + "".join(f"{m:>8}" for m in METHODS) + "   (accuracy)"
    print(header)
    print("-" * len(header))
    timing: dict[str, float] = {m: 0.0 for m in METHODS}
    for family in FAMILIES:
        db = generate_database(family, N_PAIRS, N_POINTS, 3)
        row = f"{family:<9}"
        for method in METHODS:
            cfg = BaselineConfig(method=method)
            correct = 0
            t0 = time.perf_counter()
            for i in range(len(db)):
                shown = db.presented(i)
                verdict = baseline_score(shown, cfg)
                correct += verdict.predicted == shown.label
            timing[method] += time.perf_counter() - t0
            row += f"{correct / N_PAIRS:>8.2f}"
        print(row)

    print("\nper-pair cost:")
    calls = len(FAMILIES) * N_PAIRS
    for method in METHODS:
        print(f"  {method}: {1e3 * timing[method] / calls:.2f} ms")
    print("\nEach criterion has families it reads well and families it "
          "misreads — none of them adapts to the mechanism at hand, which "
          "is the gap the meta-trained model (demo 03) is built to close.")


if __name__ == "__main__":
    main()
